"""``speclab`` command line entry point.

Exit status: 0 on success, 2 on a configuration error, 3 when any cell of
the run saturated double precision (results are still written).
"""

from __future__ import annotations

import argparse
import logging
import sys

from .experiments import EXPERIMENTS, ConfigError, config_from_mapping, load_config_file, run_experiment

log = logging.getLogger("speclab")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SATURATED = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="speclab", description="Extended-domain spectral collocation experiments.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--delta", help="comma-separated extension parameters, e.g. 0.5,1,2,4")
    p.add_argument("--nmax", type=int, help="largest 1D truncation; N runs over 4, 8, ..., nmax")
    p.add_argument("--nmax2d", type=int, help="largest per-dimension truncation for 2D runs (<= 24)")
    p.add_argument("--operator", choices=("poisson", "cd", "both"))
    p.add_argument("--k", type=float, help="constant convection coefficient of the 1D case")
    p.add_argument("--kind", choices=("bordered", "interior"), help="collocation grid kind")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, help="process pool size")
    p.add_argument("--config", help="flat key = value config file; flags override it")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        values = load_config_file(args.config) if args.config else {}
        for key in ("delta", "nmax", "nmax2d", "operator", "k", "kind", "out", "workers"):
            v = getattr(args, key)
            if v is not None:
                values[key] = v
        if isinstance(values.get("delta"), str):
            values["delta"] = tuple(float(s) for s in values["delta"].split(",") if s)
        values["experiment"] = args.experiment
        cfg = config_from_mapping(values)
    except (ConfigError, ValueError) as exc:
        print(f"speclab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    log.info("running %s into %s", cfg.experiment, cfg.out)
    _, saturated = run_experiment(cfg)
    if saturated:
        log.warning("some cells saturated double precision; results were written to %s", cfg.out)
        return EXIT_SATURATED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
