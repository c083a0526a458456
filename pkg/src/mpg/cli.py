"""Command-line interface: ``mpg <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import serialize
from .em import EmConfig, em_fit
from .exceptions import MPGError, SchemaError
from .flags import PALETTE, VIEWS, export_flags, render_svg
from .grasp import GraspConfig, box_probability, grasp_optimize
from .mixture import compose_mpg, fuse_mpg
from .projected import MCConfig
from .reduction import ReductionReport, drop_components, reduce_mixture
from .scenario import (
    demo_scenario_dict,
    load_scenario,
    run_scenario,
    scenario_from_dict,
    truth_box_probabilities,
)


def _read_json(path, what):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError(what, f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(what, f"invalid JSON in {path} ({exc.msg})") from None


def _read_mpg(path, what="--in"):
    return serialize.mpg_from_dict(_read_json(path, what), "")


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _mc(args):
    return MCConfig(args.mc_samples, args.seed)


def cmd_fuse(args):
    a, b = (_read_mpg(p) for p in args.inputs)
    fused, skipped = fuse_mpg(a, b, mc=_mc(args))
    _write(args.out, serialize.dumps(serialize.mpg_to_dict(fused)))
    print(f"components {len(fused)} skipped {skipped}", file=sys.stderr)


def cmd_compose(args):
    outer, inner = (_read_mpg(p) for p in args.inputs)
    _write(args.out, serialize.dumps(serialize.mpg_to_dict(compose_mpg(outer, inner, _mc(args)))))


def cmd_sample(args):
    mpg = _read_mpg(args.inputs[0])
    samples = mpg.sample_array(args.n, np.random.default_rng(args.seed))
    _write(args.out, serialize.motions_to_jsonl(samples))


def cmd_fit(args):
    try:
        text = Path(args.inputs[0]).read_text()
    except OSError as exc:
        raise SchemaError("--in", f"cannot read {args.inputs[0]}: {exc.strerror}") from None
    samples = serialize.motions_from_jsonl(text)
    cfg = EmConfig(n_components=args.components, max_iters=args.max_iter, seed=args.seed,
                   normalized=not args.unnormalized, mc=_mc(args))
    mpg, trace = em_fit(samples, cfg)
    _write(args.out, serialize.dumps(serialize.mpg_to_dict(mpg)))
    if args.trace:
        Path(args.trace).write_text(trace.to_csv())


def cmd_reduce(args):
    mpg = _read_mpg(args.inputs[0])
    report = ReductionReport()
    if args.floor is not None:
        mpg, rep = drop_components(mpg, args.floor)
        report.extend(rep)
    if args.target is not None:
        mpg, rep = reduce_mixture(mpg, args.target, mc=_mc(args))
        report.extend(rep)
    _write(args.out, serialize.dumps(serialize.mpg_to_dict(mpg)))
    lines = "\n".join(report.lines() + [f"components {len(mpg)}"]) + "\n"
    if args.report:
        Path(args.report).write_text(lines)
    else:
        sys.stderr.write(lines)


def cmd_grasp(args):
    mpg = _read_mpg(args.inputs[0])
    box = serialize.box_from_dict(_read_json(args.box, "--box"))
    if args.optimize:
        transform, p = grasp_optimize(mpg, box, GraspConfig(n_samples=args.n, seed=args.seed))
        result = {"transform": serialize.motion_to_dict(transform), "probability": p}
    else:
        p, err = box_probability(mpg, box, None, args.n, args.seed)
        result = {"probability": p, "stderr": err}
    _write(args.out, serialize.dumps(result))


def cmd_flags(args):
    mpg = _read_mpg(args.inputs[0])
    flags = export_flags(mpg, args.n, args.seed, args.scale)
    _write(args.out, serialize.dumps(flags.to_dict()))
    if args.svg:
        Path(args.svg).write_text(render_svg([flags], args.view))


def cmd_demo(args):
    if args.scenario:
        scenario = load_scenario(args.scenario)
    else:
        scenario = scenario_from_dict(demo_scenario_dict(args.seed, args.mc_samples))
    out = Path(args.out)
    result = run_scenario(scenario, out)
    summary = {"counts": result.counts(), "final": result.final}
    if scenario.truth is not None and scenario.box_half_widths is not None:
        singles = [s["out"] for s in scenario.steps if s["op"] == "compose"]
        probs = truth_box_probabilities(scenario, result, singles + [result.final], seed=args.seed)
        summary["truth_box_probability"] = {k: {"p": p, "stderr": e} for k, (p, e) in probs.items()}
    (out / "summary.json").write_text(serialize.dumps(summary))
    singles = [s["out"] for s in scenario.steps if s["op"] == "compose"]
    sets = [export_flags(result.mixtures[name], args.flags, args.seed, args.scale, PALETTE[(i + 1) % len(PALETTE)])
            for i, name in enumerate(singles)]
    sets.append(export_flags(result.mixtures[result.final], args.flags, args.seed, args.scale, PALETTE[0]))
    (out / "flags.svg").write_text(render_svg(sets, args.view))
    for name, n in result.counts().items():
        print(f"{name} {n}")


def build_parser():
    parser = argparse.ArgumentParser(prog="mpg", description="Mixtures of projected Gaussians over rigid motions.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help, n_in=None):
        p = sub.add_parser(name, help=help)
        p.set_defaults(func=func, n_in=n_in)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--mc-samples", type=int, default=10_000)
        if n_in:
            p.add_argument("--in", dest="inputs", action="append", required=True, metavar="PATH")
        p.add_argument("--out", default=None, metavar="PATH")
        return p

    add("fuse", cmd_fuse, "fuse two mixtures describing the same pose", 2)
    add("compose", cmd_compose, "compose two independent motion mixtures (first --in is applied last)", 2)
    p = add("sample", cmd_sample, "draw samples as JSON lines", 1)
    p.add_argument("-n", type=int, default=1000)
    p = add("fit", cmd_fit, "fit a mixture to JSON-lines samples by EM", 1)
    p.add_argument("-k", "--components", type=int, default=1)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--trace", default=None, metavar="CSV")
    p.add_argument("--unnormalized", action="store_true",
                   help="weigh components by the plain tangent Gaussian")
    p = add("reduce", cmd_reduce, "drop light components and/or merge down to a target count", 1)
    p.add_argument("--floor", type=float, default=None)
    p.add_argument("--target", type=int, default=None)
    p.add_argument("--report", default=None, metavar="PATH")
    p = add("grasp", cmd_grasp, "probability mass in a tolerance box, optionally optimized", 1)
    p.add_argument("--box", required=True, metavar="PATH")
    p.add_argument("-n", type=int, default=20_000)
    p.add_argument("--optimize", action="store_true")
    p = add("flags", cmd_flags, "export sampled poses as flags", 1)
    p.add_argument("-n", type=int, default=100)
    p.add_argument("--scale", type=float, default=0.02)
    p.add_argument("--svg", default=None, metavar="PATH")
    p.add_argument("--view", choices=sorted(VIEWS), default="xy")
    p = add("demo", cmd_demo, "run the feature-based pose estimation scenario")
    p.add_argument("--scenario", default=None, metavar="PATH")
    p.add_argument("--flags", type=int, default=50)
    p.add_argument("--scale", type=float, default=0.02)
    p.add_argument("--view", choices=sorted(VIEWS), default="xy")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.n_in and len(args.inputs) != args.n_in:
        parser.error(f"--in: {args.command} expects {args.n_in} input file(s), got {len(args.inputs)}")
    if args.mc_samples < 1000:
        parser.error("--mc-samples: must be at least 1000")
    if args.command == "demo" and args.out is None:
        parser.error("--out: demo needs an output directory")
    try:
        args.func(args)
    except (MPGError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
