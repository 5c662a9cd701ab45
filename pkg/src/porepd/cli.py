"""Command-line entry point: ``porepd run | check | sweep``."""

from __future__ import annotations

import argparse
import itertools
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

from . import __version__
from .errors import PorePDError
from .scenarios import _KEYS, ScenarioConfig, build_scenario, load_scenario

logger = logging.getLogger("porepd")


def _parse_param(text: str) -> Tuple[str, List[str]]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected NAME=V1,V2,..., got {text!r}")
    name, values = text.split("=", 1)
    name = name.strip().split(".")[-1]   # accept section.key
    if name not in _KEYS:
        raise argparse.ArgumentTypeError(f"unknown scenario key {name!r}")
    vals = [v.strip() for v in values.split(",") if v.strip()]
    if not vals:
        raise argparse.ArgumentTypeError(f"no values given for {name!r}")
    return name, vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", default=None, help="directory for VTK/CSV output (default: none written)")
    common.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--seed", type=int, default=None, help="reserved; simulations are deterministic")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="porepd", description="Hybrid PD/FE poroelastic fracture simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common], help="run a scenario")
    p_run.add_argument("config")
    p_run.add_argument("--steps", type=int, default=None, help="override the number of steps")

    p_check = sub.add_parser("check", parents=[common], help="validate a scenario and print derived constants")
    p_check.add_argument("config")
    p_check.add_argument("--coupled", action="store_true",
                         help="also estimate the critical step of the discretised coupled system")

    p_sweep = sub.add_parser("sweep", parents=[common], help="run a scenario over parameter values")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--param", type=_parse_param, action="append", required=True,
                         metavar="NAME=V1,V2,...", help="repeat for a Cartesian product")
    return parser


def _convert(name: str, text: str):
    from .scenarios import _parse_value
    return _parse_value(_KEYS[name][1], text)


def run_one(config: ScenarioConfig, output_dir: Optional[str], steps: Optional[int] = None) -> Dict[str, object]:
    scenario = build_scenario(config)
    result = scenario.run(output_dir, n_steps=steps)
    summary: Dict[str, object] = {"steps": result.steps, "files": len(result.files)}
    if "crack_length" in result.series and len(result.series["crack_length"]):
        summary["final_crack_length"] = float(result.series["crack_length"][-1, 1])
        summary["forerunning_events"] = len(result.events)
    for name in ("top_uy", "bottom_p"):
        if name in result.series:
            summary[f"final_{name}"] = float(result.series[name][-1, 1])
    return summary


def _sweep_task(args):
    config, out, label = args
    return label, run_one(config, out)


def cmd_run(args) -> int:
    config = load_scenario(args.config)
    summary = run_one(config, args.output_dir, args.steps)
    for key, val in summary.items():
        print(f"{key} = {val}")
    return 0


def cmd_check(args) -> int:
    config = load_scenario(args.config)
    d = config.derived()
    print(f"scenario = {config.kind}" + (f" (case {config.case})" if config.kind == "forerunning" else ""))
    print(f"s_c = {d['s_c']:.6e}")
    print(f"dt_max = {d['dt_max']:.6e} s")
    print(f"s_r = {d['s_r']:.6e} 1/Pa")
    print(f"wave_speed = {d['wave_speed']:.6g} m/s")
    print(f"spacing = {d['spacing']:.6g} m")
    print(f"density = {d['density']:.6g} kg/m^3")
    print(f"dt = {config.dt:.6e} s, steps = {config.n_steps}")
    if args.coupled:
        sim = build_scenario(config).simulation
        crit = sim.critical_time_step()
        print(f"dt_crit_coupled = {crit:.6e} s")
        if config.dt >= crit:
            print("warning: dt exceeds the coupled critical step; the run will diverge", file=sys.stderr)
            return 1
    return 0


def cmd_sweep(args) -> int:
    base = load_scenario(args.config)
    names = [name for name, _ in args.param]
    tasks = []
    for combo in itertools.product(*[vals for _, vals in args.param]):
        changes = {name: _convert(name, text) for name, text in zip(names, combo)}
        label = "_".join(f"{n}-{t}" for n, t in zip(names, combo))
        config = base.with_values(**changes)
        out = os.path.join(args.output_dir, label) if args.output_dir else None
        tasks.append((config, out, label))
    if args.threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]
    for label, summary in results:
        print(label + ": " + ", ".join(f"{k}={v}" for k, v in summary.items()))
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    handler = {"run": cmd_run, "check": cmd_check, "sweep": cmd_sweep}[args.command]
    try:
        return handler(args)
    except PorePDError as exc:
        print(f"porepd: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
