"""Command-line entry point.

Exit codes: 0 success, 2 usage/validation, 3 data error, 4 infeasible or
unbounded cluster bounds.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import logmodel, predictor, sampler, selector, simulator, workloadgen
from .errors import BlinkError, DegenerateInput
from .units import parse_bytes

log = logging.getLogger("blink")


def default_seed() -> int:
    return int(os.environ.get("BLINK_SEED", "0"))


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _scales(text: str) -> tuple[float, ...]:
    return tuple(float(s) for s in text.split(","))


def _range(text: str) -> range:
    lo, _, hi = text.partition("-")
    lo, hi = int(lo), int(hi or lo)
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad machine range {text!r}")
    return range(lo, hi + 1)


def _placement(text: str | None) -> simulator.Placement:
    if text is None:
        return simulator.Placement.balanced()
    if text.lower() == "skewed":
        return simulator.Placement.skewed(default_seed())
    return simulator.Placement.parse(text)


def cmd_plan(args) -> int:
    plan = sampler.plan_samples(args.bytes, args.block, args.scales)
    _emit(plan.to_dict())
    return 0


def _read_logs(log_dir: Path) -> list[logmodel.SampleRunLog]:
    paths = sorted(p for p in log_dir.iterdir() if p.suffix in (".jsonl", ".log", ".json"))
    return [logmodel.parse_log(p) for p in paths]


def cmd_fit(args) -> int:
    logs = _read_logs(Path(args.log_dir))
    scales = [lg.data_scale for lg in logs]
    if len(set(scales)) < 3:
        raise DegenerateInput(f"need sample runs at 3 distinct scales, got {sorted(set(scales))}")
    for lg in logs:
        decision = sampler.monitor_sample_run(lg, scales)
        if decision.kind is sampler.Decision.RERUN_LOWER_SCALE:
            log.warning("run at scale %g evicted cached data; rerun at scales %s",
                        lg.data_scale, list(decision.scales))
    features = [logmodel.extract_features(lg) for lg in logs]
    models = predictor.fit_models(features)
    models.sample_runs_cost = sum(lg.wall_time * lg.machines for lg in logs)
    models.dump(args.out)

    for name, m in sorted(models.datasets.items()):
        print(f"{name}: loo_rmse={m.loo_rmse:.6g} B, relative={m.loo_relative_error:.4f}",
              file=sys.stderr)
    worst = models.worst_relative_error
    if worst > args.threshold:
        print(f"cross-validation error {worst:.1%} exceeds {args.threshold:.0%}: "
              "consider additional sample runs (adaptive sampling)", file=sys.stderr)
    out = {"model_file": str(args.out), "worst_relative_error": worst,
           "sample_runs_cost_machine_s": models.sample_runs_cost}
    if models.single_machine:
        out["recommendation"] = {"machines": 1, "rationale": "NO_CACHED_DATA"}
    _emit(out)
    return 0


def recommend_report(models: predictor.ModelSet, profile: selector.MachineProfile,
                     scale: float, spec: simulator.WorkloadSpec | None = None) -> dict:
    rec = selector.select_cluster_size(models.datasets, models.execution_memory, scale, profile)
    report = rec.to_dict()
    cost = {"sample_runs_machine_s": models.sample_runs_cost}
    if spec is not None:
        actual = simulator.run(spec.at_scale(scale), rec.machines, profile)
        cost["actual_run_machine_s"] = actual.total_cost
        cost["total_machine_s"] = models.sample_runs_cost + actual.total_cost
        cost["sample_to_actual_ratio"] = (
            models.sample_runs_cost / actual.total_cost if actual.total_cost else None
        )
        report["actual_run"] = actual.to_dict()
    report["cost"] = cost
    return report


def cmd_recommend(args) -> int:
    models = predictor.ModelSet.load(args.model)
    profile = selector.MachineProfile.load(args.profile)
    spec = simulator.WorkloadSpec.load(args.spec) if args.spec else None
    _emit(recommend_report(models, profile, args.scale, spec))
    return 0


def cmd_bounds(args) -> int:
    models = predictor.ModelSet.load(args.model)
    profile = selector.MachineProfile.load(args.profile)
    s = selector.cluster_bounds(models.datasets, models.execution_memory, args.machines,
                                profile, args.granularity)
    _emit({"machines": args.machines, "max_scale": s, "granularity": args.granularity})
    return 0


def cmd_simulate(args) -> int:
    spec = simulator.WorkloadSpec.load(args.spec)
    if args.scale is not None:
        spec = spec.at_scale(args.scale)
    profile = selector.MachineProfile.load(args.profile)
    report = simulator.run(spec, args.machines, profile, _placement(args.placement))
    _emit(report.to_dict())
    return 0


def cmd_sweep(args) -> int:
    spec = simulator.WorkloadSpec.load(args.spec)
    if args.scale is not None:
        spec = spec.at_scale(args.scale)
    profile = selector.MachineProfile.load(args.profile)
    result = simulator.sweep(spec, args.range, profile, _placement(args.placement), args.jobs)
    text = result.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    if args.plot:
        from .plotting import plot_sweep

        plot_sweep(result, args.plot, title=spec.app_id)
        print(f"figure written to {args.plot}", file=sys.stderr)
    return 0


def cmd_gen(args) -> int:
    seed = default_seed() if args.seed is None else args.seed
    config = workloadgen.GenConfig(seed=seed, cached_count=args.cached,
                                   noise_relative=args.noise)
    spec = workloadgen.generate_spec(config)
    out = Path(args.out_dir)
    (out / "logs").mkdir(parents=True, exist_ok=True)
    spec.dump(out / "spec.json")
    for s in args.scales:
        lg = workloadgen.emit_sample_log(spec, s, noise_seed=seed, noise_relative=args.noise)
        logmodel.write_log(lg, out / "logs" / f"sample_{s:g}.jsonl",
                           stage_peaks=workloadgen.stage_peaks(lg))
    _emit({"spec": str(out / "spec.json"), "logs": str(out / "logs"), "seed": seed})
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blink", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("plan", help="plan the sample runs")
    sp.add_argument("--bytes", type=parse_bytes, required=True, help="input size, e.g. 1T")
    sp.add_argument("--block", type=parse_bytes, required=True, help="block size, e.g. 64M")
    sp.add_argument("--scales", type=_scales, default=sampler.DEFAULT_SCALES)
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("fit", help="fit size and execution-memory models from sample logs")
    sp.add_argument("log_dir")
    sp.add_argument("--out", default="model.json")
    sp.add_argument("--threshold", type=float, default=sampler.DEFAULT_THRESHOLD)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("recommend", help="select the cluster size")
    sp.add_argument("--model", required=True)
    sp.add_argument("--profile", required=True)
    sp.add_argument("--scale", type=float, default=logmodel.FULL_SCALE)
    sp.add_argument("--spec", help="workload spec; simulates the actual run for cost accounting")
    sp.set_defaults(func=cmd_recommend)

    sp = sub.add_parser("bounds", help="largest eviction-free scale for a fixed cluster")
    sp.add_argument("--model", required=True)
    sp.add_argument("--profile", required=True)
    sp.add_argument("--machines", type=int, required=True)
    sp.add_argument("--granularity", type=float, default=selector.DEFAULT_GRANULARITY)
    sp.set_defaults(func=cmd_bounds)

    for name, func, help_ in (("simulate", cmd_simulate, "simulate one cluster size"),
                              ("sweep", cmd_sweep, "simulate a range of cluster sizes")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--spec", required=True)
        sp.add_argument("--profile", required=True)
        sp.add_argument("--scale", type=float)
        sp.add_argument("--placement", help="balanced (default), skewed or skewed:SEED")
        if name == "simulate":
            sp.add_argument("--machines", type=int, required=True)
        else:
            sp.add_argument("--range", type=_range, default=range(1, 13), help="e.g. 1-12")
            sp.add_argument("--jobs", type=int, default=1)
            sp.add_argument("--out", help="also write the CSV here")
            sp.add_argument("--plot", help="write a cost/time figure (png, pdf, svg)")
        sp.set_defaults(func=func)

    sp = sub.add_parser("gen", help="generate a synthetic workload and its sample logs")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--cached", type=int, default=2)
    sp.add_argument("--noise", type=float, default=0.0)
    sp.add_argument("--scales", type=_scales, default=(1.0, 2.0, 3.0))
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except BlinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
