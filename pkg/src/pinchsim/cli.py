"""Command-line entry point.

Exit status: 0 on success, 1 for bad input (usage, scenario, arguments),
2 when a solver or the runtime fails.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .coupling import PowerModel
from .errors import ValidationError
from .experiments import SweepSpec, run_array_gain, run_min_power
from .joint import SYSTEMS
from .scenario import dump_scenario, load_scenario

log = logging.getLogger("pinchsim")

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _int_list(text):
    """``"1,2,5"`` or ``"1:200"`` (inclusive) or a mix of both."""
    out = []
    for part in text.split(","):
        lo, sep, hi = part.partition(":")
        try:
            out.extend(range(int(lo), int(hi) + 1) if sep else [int(lo)])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None
    return tuple(out)


def _float_list(text):
    if text.strip() == "":
        return ()
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _systems(text):
    names = tuple(s for s in text.split(",") if s)
    bad = [s for s in names if s not in SYSTEMS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown systems {bad}; choose from {list(SYSTEMS)}")
    return names


def _power_model(text):
    try:
        return PowerModel.parse(text)
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pinchsim", description="Pinching-antenna system experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    val = sub.add_parser("validate", help="check a scenario and print its normalized form")
    val.add_argument("path", nargs="?", help="scenario file ('desk' for the bundled default)")
    val.add_argument("--scenario")

    def common(p):
        p.add_argument("--scenario", required=True,
                       help="scenario file ('desk' for the bundled default)")
        p.add_argument("--out", help="CSV output path (stdout if omitted)")
        p.add_argument("--seed", type=int, help="override the scenario seed")
        p.add_argument("--power-model", type=_power_model,
                       help="'equal' or 'proportional:<alpha>' (overrides the scenario)")

    ag = sub.add_parser("array-gain", help="array gain versus number of antennas")
    common(ag)
    ag.add_argument("--n-list", type=_int_list, default=tuple(range(1, 201)),
                    help="antenna counts, e.g. 1:200 or 1,2,4 (default 1:200)")
    ag.add_argument("--spacing", type=float, default=0.25, help="antenna spacing in m")
    ag.add_argument("--raw", action="store_true", help="skip phase alignment")

    mp = sub.add_parser("min-power", help="minimum transmit power versus SINR target")
    common(mp)
    mp.add_argument("--sinr-db", type=_float_list, default=(0.0, 5.0, 10.0, 15.0, 20.0),
                    help="comma-separated SINR targets in dB")
    mp.add_argument("--systems", type=_systems, default=SYSTEMS,
                    help=f"comma-separated subset of {','.join(SYSTEMS)}")
    return parser


def _emit(text, out):
    if not out:
        sys.stdout.write(text)


def _run(args, parser):
    if args.command == "validate":
        path = args.path or args.scenario
        if not path:
            parser.error("validate needs a scenario path")
        sys.stdout.write(dump_scenario(load_scenario(path)))
        return EXIT_OK

    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    if args.command == "array-gain":
        spec = SweepSpec("array_gain", args.n_list, output=args.out, spacing_m=args.spacing,
                         power_model=args.power_model, aligned=not args.raw)
        _emit(run_array_gain(scenario, spec), args.out)
    else:
        spec = SweepSpec("min_power", args.sinr_db, systems=args.systems, output=args.out,
                         power_model=args.power_model)
        _emit(run_min_power(scenario, spec), args.out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args, parser)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    except ValidationError as exc:
        print(f"pinchsim: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - any solver/runtime failure maps to status 2
        log.debug("runtime failure", exc_info=True)
        print(f"pinchsim: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
