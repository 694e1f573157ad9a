"""``drsc`` command line: run experiments and write plot-ready CSV."""
from __future__ import annotations

import argparse
import logging
import sys

from ..errors import DRSCError
from . import dataio, experiments
from .config import make_config, read_config_file

log = logging.getLogger("drsc")

SUBCOMMANDS = {
    "ce-vs-p": "ce_vs_p",
    "phase": "phase_diagram",
    "ambient": "ambient_span",
    "cluster": "cluster_file",
    "theory": "theory_table",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drsc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML or JSON file overriding the built-in defaults")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--threads", type=int, help="worker threads for independent trials")
        p.add_argument("--out", help="results CSV (stdout when omitted)")
        p.add_argument("--trials", type=int)
        p.add_argument("--no-timings", action="store_true", help="omit wall-time columns")

    for name, kind in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run the {kind} experiment")
        common(p)
        if name == "cluster":
            p.add_argument("--data", help="points file (.csv/.txt text, otherwise binary)")
            p.add_argument("--labels", help="ground-truth labels file")
            p.add_argument("--labels-out", help="where to write predicted labels")
            p.add_argument("--algorithm", choices=["tsc", "ssc", "sscomp"])
            p.add_argument("--projection", choices=["gaussian", "fast_dft", "identity"])
            p.add_argument("--p", type=int, help="projected dimension (default: no reduction)")
        if name == "theory":
            p.add_argument("--c-tilde", type=float)
            p.add_argument("--max-aff", type=float)
    p = sub.add_parser("selftest", help="check thread-count independence of the output")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=8)
    return parser


def _overrides(args) -> dict:
    values = read_config_file(args.config) if args.config else {}
    flag_map = {"seed": "seed", "threads": "threads", "out": "out", "trials": "trials",
                "data": "data_path", "labels": "labels_path", "labels_out": "labels_out",
                "algorithm": "algorithm", "projection": "projection", "p": "p",
                "c_tilde": "c_tilde", "max_aff": "max_aff"}
    for attr, key in flag_map.items():
        v = getattr(args, attr, None)
        if v is not None:
            values[key] = v
    return values


def _emit(out, header, body) -> None:
    if out:
        dataio.write_csv_rows(out, header, body)
    else:
        dataio.write_csv_rows(sys.stdout, header, body)


def run_selftest(seed: int = 0, threads: int = 8) -> bool:
    """Run the CE-vs-p setup (Gaussian projection, one trial) with 1 and ``threads`` workers."""
    texts = []
    for n in (1, threads):
        cfg = make_config("ce_vs_p", dict(seed=seed, trials=1, threads=n, projections=["gaussian"]))
        rows = experiments.run_ce_vs_p(cfg)
        texts.append(dataio.csv_text(*experiments.result_table(rows, timings=False))
                     + dataio.csv_text(*experiments.summarize(rows, timings=False)))
    ok = texts[0] == texts[1]
    print(f"selftest: 1 thread vs {threads} threads -> {'identical' if ok else 'DIFFERENT'}"
          f" ({len(texts[0].encode())} bytes)")
    return ok


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "selftest":
            return 0 if run_selftest(args.seed, args.threads) else 1
        kind = SUBCOMMANDS[args.command]
        cfg = make_config(kind, _overrides(args))
        timings = not args.no_timings
        if kind == "theory_table":
            _emit(cfg.out, *experiments.theory_table_csv(experiments.run_theory_table(cfg)))
            return 0
        if kind == "cluster_file":
            rows, pred = experiments.run_cluster_file(cfg)
            labels_out = cfg.labels_out or (
                str(experiments.companion(cfg.out, "labels").with_suffix(".txt")) if cfg.out else None)
            if labels_out:
                dataio.save_labels(labels_out, pred)
        elif kind == "phase_diagram":
            rows, curve = experiments.run_phase_diagram(cfg)
            if cfg.out:
                dataio.write_csv_rows(experiments.companion(cfg.out, "curve"), ["x", "sigma_star"],
                                      [[repr(x), "" if s is None else repr(s)] for x, s in curve])
        elif kind == "ambient_span":
            rows = experiments.run_ambient(cfg)
        else:
            rows = experiments.run_ce_vs_p(cfg)
        if cfg.out:
            experiments.write_results(cfg.out, rows, timings)
        else:
            _emit(None, *experiments.result_table(rows, timings))
        return 0
    except (DRSCError, OSError) as exc:
        print(f"drsc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
