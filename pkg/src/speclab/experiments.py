"""Experiment drivers writing fixed-schema CSV/JSON artifacts.

Every driver is deterministic: cells are computed in a fixed order (or
mapped in order over a process pool) and floats are written with 17
significant digits, so identical configurations give identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .geometry import ExtendedDomain, GRID_KINDS
from .linalg import norm, sigma_extremes
from .operators import assemble, write_matrix_csv
from .solver import CASES_1D, CASES_2D, CONVERGENCE_CSV_HEADER, ConvergenceRecord, cd1d_case, convergence_record
from .stability import (
    PECLET_CSV_HEADER,
    BumpSpec,
    PecletCell,
    bump_l2_norm,
    decay_profile,
    lebesgue_constant,
    near_null_probe,
    peclet_sweep,
    physical_operator,
)

__all__ = [
    "EXPERIMENTS",
    "ConfigError",
    "ExperimentConfig",
    "LebesgueRow",
    "NearNullRow",
    "load_config_file",
    "format_float",
    "write_records",
    "read_records",
    "run_convergence1d",
    "run_lebesgue_sweep",
    "run_matrix_structure",
    "run_near_null",
    "run_peclet",
    "run_convergence2d",
    "run_full_report",
    "run_experiment",
]

EXPERIMENTS = (
    "convergence1d",
    "lebesgue-sweep",
    "matrix-structure",
    "near-null",
    "peclet",
    "convergence2d",
    "full-report",
)

MAX_N_2D = 24


class ConfigError(ValueError):
    pass


def _n_range(nmax: int) -> tuple[int, ...]:
    return tuple(range(4, nmax + 1, 4)) or (nmax,)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "full-report"
    deltas: tuple[float, ...] = (0.5, 1.0, 2.0, 4.0)
    n_values: tuple[int, ...] = _n_range(48)
    n_values_2d: tuple[int, ...] = _n_range(20)
    operator: str = "both"
    k: float = 10.0
    k_values: tuple[float, ...] = (0.0, 5.0, 10.0, 40.0)
    matrix_n: int = 32
    matrix_delta: float = 1.0
    kind: str = "bordered"
    out: Path = Path("speclab-out")
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if not self.deltas or any(not (d > 0 and math.isfinite(d)) for d in self.deltas):
            raise ConfigError(f"deltas must be positive reals, got {self.deltas}")
        for name in ("n_values", "n_values_2d"):
            ns = getattr(self, name)
            if not ns or any(n < 1 for n in ns) or list(ns) != sorted(set(ns)):
                raise ConfigError(f"{name} must be a strictly ascending list of positive integers, got {ns}")
        if max(self.n_values_2d) > MAX_N_2D:
            raise ConfigError(f"2D runs are limited to N <= {MAX_N_2D} per dimension")
        if self.operator not in ("both", "poisson", "cd"):
            raise ConfigError(f"operator must be poisson, cd or both, got {self.operator!r}")
        if self.kind not in GRID_KINDS:
            raise ConfigError(f"grid kind must be one of {GRID_KINDS}, got {self.kind!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.matrix_n < 1 or self.matrix_delta <= 0:
            raise ConfigError("matrix_n must be >= 1 and matrix_delta > 0")
        object.__setattr__(self, "out", Path(self.out))

    def cases_1d(self) -> list[str]:
        return [c for c, op in (("poisson1d", "poisson"), ("cd1d", "cd")) if self.operator in ("both", op)]


def _parse_list(text: str, conv) -> tuple:
    try:
        return tuple(conv(v) for v in str(text).replace(" ", "").split(",") if v)
    except ValueError as exc:
        raise ConfigError(f"cannot parse list {text!r}: {exc}") from None


_CONFIG_KEYS: dict[str, Callable[[str], object]] = {
    "experiment": str,
    "delta": lambda s: _parse_list(s, float),
    "deltas": lambda s: _parse_list(s, float),
    "nmax": int,
    "nmax2d": int,
    "n_values": lambda s: _parse_list(s, int),
    "n_values_2d": lambda s: _parse_list(s, int),
    "operator": str,
    "k": float,
    "k_values": lambda s: _parse_list(s, float),
    "matrix_n": int,
    "matrix_delta": float,
    "kind": str,
    "out": Path,
    "workers": int,
}


def load_config_file(path) -> dict:
    """Flat ``key = value`` text; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return out


def config_from_mapping(values: dict) -> ExperimentConfig:
    """Build a config from parsed keys (``nmax``/``delta`` shorthands resolved)."""
    values = dict(values)
    kw = {}
    if "delta" in values:
        kw["deltas"] = values.pop("delta")
    if "nmax" in values:
        kw["n_values"] = _n_range(values.pop("nmax"))
    if "nmax2d" in values:
        kw["n_values_2d"] = _n_range(values.pop("nmax2d"))
    kw.update(values)
    try:
        return ExperimentConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


# --- CSV plumbing --------------------------------------------------------------


def format_float(v: float) -> str:
    return f"{v:.17g}"


def _format(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    return str(v)


def _parse(text: str, typ):
    if typ is bool or typ == "bool":
        if text not in ("true", "false"):
            raise ValueError(f"bad boolean {text!r}")
        return text == "true"
    if typ is int or typ == "int":
        return int(text)
    if typ is float or typ == "float":
        return float(text)
    return text


def write_records(path, header: str, records: Sequence) -> Path:
    cols = header.split(",")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for rec in records:
        d = asdict(rec)
        writer.writerow([_format(d[c]) for c in cols])
    path = Path(path)
    path.write_text(buf.getvalue())
    return path


def read_records(path, record_type) -> list:
    """Parse a CSV written by :func:`write_records` back into ``record_type``."""
    types = {f.name: f.type for f in fields(record_type)}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if set(header) != set(types):
            raise ValueError(f"{path}: header {header} does not match {record_type.__name__}")
        return [record_type(**{h: _parse(v, types[h]) for h, v in zip(header, row)}) for row in reader]


def _pool_map(fn, items: list, workers: int) -> list:
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def _case_1d(name: str, k0: float):
    return cd1d_case(k0) if name == "cd1d" else CASES_1D[name]


# --- drivers -----------------------------------------------------------------------


def _convergence1d_cell(args) -> ConvergenceRecord:
    name, k0, n, delta, kind = args
    return convergence_record(_case_1d(name, k0), n, delta, kind)


def run_convergence1d(cfg: ExperimentConfig) -> list[ConvergenceRecord]:
    cells = [(c, cfg.k, n, d, cfg.kind) for c in cfg.cases_1d() for d in cfg.deltas for n in cfg.n_values]
    recs = _pool_map(_convergence1d_cell, cells, cfg.workers)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_records(cfg.out / "convergence1d.csv", CONVERGENCE_CSV_HEADER, recs)
    return recs


LEBESGUE_CSV_HEADER = "case,N,delta,lebesgue,sigma_min_W,inv_inf_norm,kappa_A,saturated"


@dataclass(frozen=True)
class LebesgueRow:
    case: str
    N: int
    delta: float
    lebesgue: float
    sigma_min_W: float
    inv_inf_norm: float
    kappa_A: float
    saturated: bool


def _lebesgue_cell(args) -> LebesgueRow:
    name, k0, n, delta, kind = args
    case = _case_1d(name, k0)
    sys = assemble(case.op, n, case.domain(delta), kind=kind)
    sW = sigma_extremes(sys.W)
    sB = sigma_extremes(sys.system_matrix)
    phys = physical_operator(sys)
    return LebesgueRow(
        name, n, float(delta), lebesgue_constant(sys), sW.sigma_min, norm(phys.Linv, "inf"), sB.condition,
        sW.saturated or sB.saturated or phys.saturated,
    )


def run_lebesgue_sweep(cfg: ExperimentConfig) -> list[LebesgueRow]:
    cells = [(c, cfg.k, n, d, cfg.kind) for c in cfg.cases_1d() for d in cfg.deltas for n in cfg.n_values]
    rows = _pool_map(_lebesgue_cell, cells, cfg.workers)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_records(cfg.out / "lebesgue_sweep.csv", LEBESGUE_CSV_HEADER, rows)
    return rows


def _log10_abs(m: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log10(np.abs(m))


def run_matrix_structure(cfg: ExperimentConfig) -> dict:
    """Dump ``log10|.|`` of L and L^-1 for both 1D cases and fit the inverse decay."""
    cfg.out.mkdir(parents=True, exist_ok=True)
    n, delta = cfg.matrix_n, cfg.matrix_delta
    fits, saturated = {}, False
    for tag, name in (("P", "poisson1d"), ("CD", "cd1d")):
        case = _case_1d(name, cfg.k)
        sys = assemble(case.op, n, case.domain(delta), kind=cfg.kind)
        phys = physical_operator(sys)
        saturated |= phys.saturated
        write_matrix_csv(cfg.out / f"L_{tag}.csv", _log10_abs(phys.L), "L", n, delta, values="log10abs", case=name)
        write_matrix_csv(cfg.out / f"Linv_{tag}.csv", _log10_abs(phys.Linv), "Linv", n, delta, values="log10abs", case=name)
        fit = decay_profile(phys.Linv, sys.grid.points)
        fits[tag] = dict(asdict(fit), case=name, N=n, delta=delta, inv_inf_norm=norm(phys.Linv, "inf"), saturated=phys.saturated)
    (cfg.out / "decay_fits.json").write_text(json.dumps(fits, indent=2, sort_keys=True) + "\n")
    return {"fits": fits, "saturated": saturated}


NEAR_NULL_CSV_HEADER = "case,N,delta,coeff_norm,g_norm,residual_inf,sigma_min_W,saturated"


@dataclass(frozen=True)
class NearNullRow:
    case: str
    N: int
    delta: float
    coeff_norm: float
    g_norm: float
    residual_inf: float
    sigma_min_W: float
    saturated: bool


def _near_null_cell(args) -> NearNullRow:
    name, k0, n, delta, kind = args
    case = _case_1d(name, k0)
    dom = case.domain(delta)
    sys = assemble(case.op, n, dom, kind=kind)
    spec = BumpSpec.default(dom)
    cn, res = near_null_probe(sys, spec)
    sW = sigma_extremes(sys.W)
    return NearNullRow(name, n, float(delta), cn, bump_l2_norm(spec), res, sW.sigma_min, sW.saturated)


def run_near_null(cfg: ExperimentConfig) -> list[NearNullRow]:
    cells = [(c, cfg.k, n, d, cfg.kind) for c in cfg.cases_1d() for d in cfg.deltas for n in cfg.n_values]
    rows = _pool_map(_near_null_cell, cells, cfg.workers)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_records(cfg.out / "near_null.csv", NEAR_NULL_CSV_HEADER, rows)
    return rows


def run_peclet(cfg: ExperimentConfig) -> list[PecletCell]:
    cells = []
    for d in cfg.deltas:
        cells.extend(peclet_sweep(cfg.k_values, cfg.n_values, ExtendedDomain.interval(1.0, d), cfg.kind, cfg.workers))
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_records(cfg.out / "peclet.csv", PECLET_CSV_HEADER, cells)
    return cells


def _convergence2d_cell(args) -> ConvergenceRecord:
    name, n, delta, kind = args
    return convergence_record(CASES_2D[name], n, delta, kind)


def run_convergence2d(cfg: ExperimentConfig) -> list[ConvergenceRecord]:
    cells = [(c, n, d, cfg.kind) for c in CASES_2D for d in cfg.deltas for n in cfg.n_values_2d]
    recs = _pool_map(_convergence2d_cell, cells, cfg.workers)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_records(cfg.out / "convergence2d.csv", CONVERGENCE_CSV_HEADER, recs)
    return recs


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_full_report(cfg: ExperimentConfig) -> dict:
    """Run every experiment into ``cfg.out`` and write ``manifest.json`` with content hashes."""
    results = {
        "convergence1d": run_convergence1d(cfg),
        "lebesgue-sweep": run_lebesgue_sweep(cfg),
        "matrix-structure": run_matrix_structure(cfg),
        "near-null": run_near_null(cfg),
        "peclet": run_peclet(cfg),
        "convergence2d": run_convergence2d(cfg),
    }
    files = sorted(p for p in cfg.out.iterdir() if p.is_file() and p.name != "manifest.json")
    manifest = {
        "config": _config_summary(cfg),
        "files": [{"name": p.name, "bytes": p.stat().st_size, "sha256": _sha256(p)} for p in files],
    }
    (cfg.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    results["manifest"] = manifest
    return results


def _config_summary(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["out"] = str(cfg.out)
    d.pop("workers")
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


_RUNNERS = {
    "convergence1d": run_convergence1d,
    "lebesgue-sweep": run_lebesgue_sweep,
    "matrix-structure": run_matrix_structure,
    "near-null": run_near_null,
    "peclet": run_peclet,
    "convergence2d": run_convergence2d,
    "full-report": run_full_report,
}


def _any_saturated(result) -> bool:
    if isinstance(result, list):
        return any(getattr(r, "saturated", False) for r in result)
    if isinstance(result, dict):
        if result.get("saturated"):
            return True
        return any(_any_saturated(v) for k, v in result.items() if k != "manifest")
    return False


def run_experiment(cfg: ExperimentConfig) -> tuple[object, bool]:
    """Dispatch on ``cfg.experiment``; return the result and whether any cell saturated."""
    result = _RUNNERS[cfg.experiment](cfg)
    return result, _any_saturated(result)
