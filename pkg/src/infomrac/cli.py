"""Command-line entry point: ``infomrac simulate | paper | check``.

Exit codes: 0 converged, 1 bad input, 2 unsolvable, 3 step limit reached,
4 numerical failure during the run.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from .informativity import (InformativityError, Trajectory, gains_from_data,
                            image_inclusion_residual, informative_for_mrc,
                            informative_for_sysid, numeric_rank)
from .lti_models import ConfigurationError, DimensionError, ReferenceModel
from .presets import SCENARIO_NAMES, paper_scenario
from .sim_harness import (SimulationError, Verdict, emit_plots, export_csv, load_scenario,
                          run)

EXIT_CODES = {Verdict.CONVERGED: 0, Verdict.UNSOLVABLE: 2, Verdict.MAX_STEPS: 3}
EXIT_BAD_INPUT = 1
EXIT_NUMERICAL = 4


def _failure_report(scenario, exc):
    return {"t_star": exc.t_star, "verdict": "numerical_failure", "stop_step": exc.t,
            "error": str(exc), "seed": scenario.seed}


def _simulate(scenario, out_dir, plot, stem):
    try:
        report = run(scenario)
    except SimulationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        payload, steps, code = _failure_report(scenario, exc), exc.steps, EXIT_NUMERICAL
    else:
        payload, steps, code = report.to_dict(), report.steps, EXIT_CODES[report.verdict]
    print(json.dumps(payload, indent=2))
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, f"{stem}_report.json"), "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        export_csv(steps, os.path.join(out_dir, f"{stem}_steps.csv"),
                   scenario.plant.n, scenario.plant.m)
        if plot and steps:
            emit_plots(steps, out_dir, prefix=f"{stem}_")
    return code


def cmd_simulate(args):
    scenario = load_scenario(args.config)
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    stem = scenario.name or os.path.splitext(os.path.basename(args.config))[0]
    return _simulate(scenario, args.out, args.plot, stem)


def cmd_paper(args):
    scenario = paper_scenario(args.scenario, args.seed)
    return _simulate(scenario, args.out, args.plot, scenario.name)


def _load_model(path):
    with open(path) as fh:
        d = json.load(fh)
    d = d.get("model", d)
    try:
        return ReferenceModel(np.array(d["Am"], dtype=float), np.array(d["Bm"], dtype=float))
    except KeyError as exc:
        raise ConfigurationError(f"{path}: missing key {exc}") from exc


def cmd_check(args):
    traj = Trajectory.from_csv(args.data)
    model = _load_model(args.model)
    stacked = np.vstack([traj.X_minus, traj.U_minus])
    print(f"samples: {traj.t}  (n = {traj.n}, m = {traj.m})")
    print(f"rank [X_-; U_-] = {numeric_rank(stacked)} of {traj.n + traj.m}")
    print(f"informative for system identification: {informative_for_sysid(traj)}")
    mrc = informative_for_mrc(traj, model)
    print(f"informative for model reference control: {mrc}")
    print(f"relative image residual: {image_inclusion_residual(traj, model):.3e}")
    if mrc:
        try:
            gains = gains_from_data(traj, model)
        except InformativityError as exc:
            print(f"gain extraction failed: {exc}")
            return EXIT_BAD_INPUT
        with np.printoptions(precision=6, suppress=True):
            print("K =")
            print(gains.K)
            print("L =")
            print(gains.L)
    return 0


class _Parser(argparse.ArgumentParser):
    # Usage errors share exit code 1 with bad input; 2 means unsolvable.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_BAD_INPUT, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="infomrac", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("paper", help="run one of the built-in experiments")
    p.add_argument("--scenario", required=True, choices=SCENARIO_NAMES)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_paper)

    p = sub.add_parser("check", help="test recorded data for informativity")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, DimensionError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
