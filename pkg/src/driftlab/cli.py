"""
Command line front end: ``driftlab <subcommand> [options]``.

Exit status is 0 when every check passed, 1 on a statistical failure and
2 on a configuration or IO error.
"""

import argparse
import json
import logging
import sys

from driftlab import experiments
from driftlab.errors import DriftLabError
from driftlab.graphs import read_graph

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_ERROR = 2


def _int_list(text):
    return [int(tok) for tok in text.replace(",", " ").split()]


def _emit(payload, path=None):
    text = json.dumps(payload, indent=2, sort_keys=True, default=str)
    if path:
        with open(path, "w") as stream:
            stream.write(text + "\n")
    else:
        print(text)


def do_sweep(args):
    spec = experiments.ExperimentSpec.from_preset(
        args.preset, n_values=args.n, reps=args.reps, seed=args.seed,
        functions=args.function, out_csv=args.out_csv, out_json=args.out_json,
        workers=args.workers)
    result = experiments.cmd_sweep(spec)
    if not args.out_csv:
        sys.stdout.write(result.csv_text())
    return EXIT_PASS


def do_ordering_test(args):
    result = experiments.cmd_ordering_test(args.n, args.reps, args.function, seed=args.seed,
                                           workers=args.workers)
    _emit(result.__dict__, args.out_json)
    return EXIT_PASS if result.passed else EXIT_FAIL


def do_drift_report(args):
    graph = read_graph(args.graph_file, directed=args.function == "sssp") if args.graph_file else None
    report = experiments.cmd_drift_report(args.function, args.potential, args.n, args.reps,
                                          seed=args.seed, mode=args.mode, graph=graph,
                                          out_csv=args.out_csv)
    if not args.out_csv:
        sys.stdout.write(report.csv_text())
    logger.info("drift report against %s: %s", report.bound, "pass" if report.passed else "fail")
    return EXIT_PASS if report.passed else EXIT_FAIL


def do_verify(args):
    report = experiments.cmd_verify(args.suite, seed=args.seed, scale=args.scale)
    for line in report.lines():
        print(line)
    print("%s: %s" % (args.suite, "PASS" if report.passed else "FAIL"))
    return EXIT_PASS if report.passed else EXIT_FAIL


def do_bounds(args):
    rows = experiments.cmd_bounds(args.n, m=args.m, w_max=args.w_max, recorder_path=args.record)
    _emit(rows, args.out_json)
    return EXIT_PASS


def do_graph_run(args):
    graph = read_graph(args.graph_file, directed=args.problem == "sssp" or args.directed)
    summary = experiments.cmd_graph_run(graph, args.problem, args.reps, seed=args.seed,
                                        start=args.start, source=args.source,
                                        check_drift=args.drift)
    _emit(summary, args.out_json)
    return EXIT_PASS if summary.get("drift_passed", True) else EXIT_FAIL


def build_parser():
    parser = argparse.ArgumentParser(prog="driftlab", description="Drift analysis lab for the (1+1) EA")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, n_list=False):
        p.add_argument("--seed", type=int, default=42)
        if n_list:
            p.add_argument("--n", type=_int_list, default=None, help="sizes, comma separated")
        else:
            p.add_argument("--n", type=int, default=100)
        p.add_argument("--out-json", default=None)
        return p

    p = common(sub.add_parser("sweep", help="optimization times over functions and sizes"), n_list=True)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--function", action="append", default=None,
                   help="onemax, binval, random or file:<path>; repeatable")
    p.add_argument("--preset", choices=sorted(experiments.PRESETS), default="quick")
    p.add_argument("--out-csv", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(handler=do_sweep)

    p = common(sub.add_parser("ordering-test", help="paired OneMax comparison"))
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--function", default="binval")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(handler=do_ordering_test)

    p = common(sub.add_parser("drift-report", help="conditional drift table"))
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--function", default="onemax", help="linear function, mst or sssp")
    p.add_argument("--potential", default="onemax")
    p.add_argument("--mode", choices=("mc", "exhaustive"), default="mc")
    p.add_argument("--graph-file", default=None)
    p.add_argument("--out-csv", default=None)
    p.set_defaults(handler=do_drift_report)

    p = sub.add_parser("verify", help="run a named verification suite")
    p.add_argument("suite", choices=experiments.suite_names())
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--scale", choices=("quick", "full"), default="quick")
    p.set_defaults(handler=do_verify)

    p = common(sub.add_parser("bounds", help="runtime bound table"), n_list=True)
    p.add_argument("--m", type=int, default=None, help="edges for the graph bounds (default 3n)")
    p.add_argument("--w-max", type=int, default=10)
    p.add_argument("--record", default=None, help="sqlite case file")
    p.set_defaults(handler=do_bounds)

    p = common(sub.add_parser("graph-run", help="MST or SSSP runs on a graph file"))
    p.add_argument("--graph-file", required=True)
    p.add_argument("--problem", choices=("mst", "sssp"), default="mst")
    p.add_argument("--directed", action="store_true")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--start", default="random", help="mst: random/worst/optimal; sssp: random/unset/dijkstra")
    p.add_argument("--source", type=int, default=0)
    p.add_argument("--drift", action="store_true", help="also run the drift check")
    p.set_defaults(handler=do_graph_run)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "n", None) is None and args.command == "bounds":
        args.n = [20, 50, 100, 200, 500, 1000]
    try:
        return args.handler(args)
    except (DriftLabError, ValueError, OSError) as err:
        logger.error("%s", err)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
