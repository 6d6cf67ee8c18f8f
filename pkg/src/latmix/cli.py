"""``latmix`` command-line entry point.

Exit codes: 0 success, 2 invalid arguments, 3 resource-limit guard.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments as ex
from . import mixing, oracle, sampler, spectral, theory
from .errors import InvalidArgumentError, LatmixError, PreconditionError, ResourceLimitError
from .model import KINDS, ProblemInstance, SpinState, build_instance, objective
from .plot import line_chart


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _instance_args(p):
    p.add_argument("--kind", choices=[k for k in KINDS if k != "custom"], default="gaussian")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--snr", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=0.5, help="adversarial construction parameter")
    p.add_argument("--no-noise", action="store_true")
    p.add_argument("--instance", type=Path, help="load instance JSON instead of generating")


def _output_args(p):
    p.add_argument("--out", type=Path, help="output directory (default: print to stdout)")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json")
    fmt.add_argument("--csv", dest="fmt", action="store_const", const="csv")


def _load_instance(args) -> ProblemInstance:
    if args.instance is not None:
        return ProblemInstance.from_json(args.instance.read_text())
    return build_instance(args.kind, args.n, snr=args.snr, seed=args.seed,
                          with_noise=not args.no_noise, eps=args.eps)


def _state(inst, code):
    if code is None:
        return None
    return SpinState(inst.n, code)


def _emit(args, name, payload=None, rows=None, columns=None, summary=None):
    """Print JSON (default) or CSV, or write both plus a manifest under --out."""
    if args.out is not None:
        if rows is not None:
            spec = ex.ExperimentSpec(name, _params(args), getattr(args, "seed", 0), str(args.out))
            ex.write_outputs(spec, rows, columns, summary)
        args.out.mkdir(parents=True, exist_ok=True)
        if payload is not None:
            (args.out / f"{name.replace('-', '_')}.json").write_text(
                json.dumps(payload, indent=2, default=ex._json_default))
        return
    if rows is not None and args.fmt != "json":
        sys.stdout.write(ex.rows_to_csv(rows, columns))
        if summary:
            sys.stderr.write(json.dumps(summary, default=ex._json_default) + "\n")
        return
    if payload is None:
        payload = {"rows": rows, "summary": summary}
    print(json.dumps(payload, indent=2, default=ex._json_default))


def _params(args) -> dict:
    skip = {"func", "out", "fmt", "instance"}
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k not in skip}


def cmd_gen(args):
    _emit(args, "gen", _load_instance(args).to_dict())


def cmd_objective(args):
    inst = _load_instance(args)
    s = _state(inst, args.state) or inst.x_true
    _emit(args, "objective", {"code": s.code, "objective": objective(inst, s)})


def cmd_localmin(args):
    inst = _load_instance(args)
    rep = oracle.local_minima_bruteforce(inst)
    _emit(args, "localmin", rep.to_dict())


def cmd_gibbs(args):
    inst = _load_instance(args)
    cfg = sampler.SamplerConfig(alpha2=args.alpha2, seed=args.seed, max_steps=args.steps)
    start = _state(inst, args.start) or sampler.random_start(inst.n, args.seed)
    glob = [s.code for s in oracle.global_minimum(inst)[0]] if inst.n <= oracle.MAX_EXHAUSTIVE_N else None
    diag = sampler.run(inst, cfg, start, global_codes=glob, record_trajectory=args.trajectory is not None)
    if args.trajectory is not None:
        diag.write_trajectory_csv(args.trajectory)
    _emit(args, "gibbs", diag.to_dict())


def cmd_couple(args):
    rows = ex.run_coupling(args.n, args.snr, args.alpha2, args.trials, args.seed, workers=args.workers)
    _emit(args, "coupling", rows=rows, columns=["c", "t", "p_exceed", "stderr", "bound"])


def cmd_spectrum(args):
    inst = _load_instance(args)
    rep = spectral.spectrum_report(inst, args.alpha2)
    _emit(args, "spectrum", rep.to_dict())


def cmd_bottleneck(args):
    inst = _load_instance(args)
    tm = spectral.build_transition_matrix(inst, args.alpha2)
    gap = spectral.spectral_gap(tm).gap
    out = {"gap": gap, "singleton": []}
    if inst.n <= spectral.MAX_BOTTLENECK_N:
        phi = spectral.exact_bottleneck_star(tm)
        out.update(bottleneck_star=phi, cheeger_lower=phi * phi / 2, cheeger_upper=2 * phi)
    for c in oracle.local_minima_codes(tm.objectives, inst.n)[0]:
        out["singleton"].append(
            spectral.singleton_bottleneck(inst, args.alpha2, SpinState(inst.n, int(c)), tm.objectives).to_dict())
    _emit(args, "bottleneck", out)


def cmd_tv(args):
    inst = _load_instance(args)
    tm = spectral.build_transition_matrix(inst, args.alpha2)
    curve = mixing.worst_case_tv_curve(tm, args.t_max, eps_list=(0.25, 0.1))
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        curve.write_csv(args.out / "tv_curve.csv")
        (args.out / "tv_curve.json").write_text(curve.to_json(indent=2))
        return
    if args.fmt == "csv":
        sys.stdout.write(ex.rows_to_csv([{"t": t, "d_t": d} for t, d in curve.points], ["t", "d_t"]))
    else:
        print(curve.to_json(indent=2))


def cmd_theory(args):
    res = {
        "ratio_tail_t2": theory.ratio_tail(2.0),
        "p_local_2x2_gaussian": theory.p_local_2x2_gaussian().to_dict(),
        "p_local_2x2_gaussian_quadrature": theory.p_local_2x2_gaussian_quadrature().to_dict(),
        "p_local_2x2_unit_sphere": theory.p_local_2x2_unit_sphere().to_dict(),
    }
    if args.trials:
        res["p_local_2x2_gaussian_mc"] = theory.p_local_2x2_gaussian_mc(args.trials, args.seed).to_dict()
        res["p_local_2x2_unit_sphere_mc"] = theory.p_local_2x2_unit_sphere_mc(args.trials, args.seed).to_dict()
        res["expected_local_minima_lower_bound"] = theory.expected_local_minima_lower_bound(
            args.n, args.trials, args.seed).to_dict()
    _emit(args, "theory", res)


def _svg(args, name, svg):
    if args.out is not None:
        (args.out / f"{name}.svg").write_text(svg)


def cmd_fig1(args):
    rows = ex.run_fig1(args.n_list, args.trials, args.seed, args.workers)
    _emit(args, "fig1", rows=rows, columns=["n", "trials", "mean_local_minima", "stderr"])
    _svg(args, "fig1", line_chart({"mean": ([r["n"] for r in rows], [r["mean_local_minima"] for r in rows])},
                                  "Average number of local minima", "N", "count"))


def cmd_fig2(args):
    rows = ex.run_fig2(args.n_list, args.trials, args.seed, args.workers)
    _emit(args, "fig2", rows=rows, columns=["n", "trials", "p_exist", "stderr"])
    _svg(args, "fig2", line_chart({"P(local min)": ([r["n"] for r in rows], [r["p_exist"] for r in rows])},
                                  "Probability of having local minima", "N", "probability"))


def cmd_gap_table(args):
    rows = ex.run_gap_table(args.n, args.snr, args.alpha2, args.trials, args.seed,
                            with_noise=not args.no_noise, workers=args.workers)
    _emit(args, "gap-table", rows=rows, columns=["trial", "n_local_minima", "spectral_gap"],
          summary=ex.gap_separation(rows))


def cmd_temp_sweep(args):
    spec = {"kind": args.kind, "n": args.n, "snr": args.snr, "seed": args.seed,
            "with_noise": not args.no_noise, "eps": args.eps}
    rows, summary = ex.run_temp_sweep(spec, args.alpha2_list)
    cols = ["alpha2", "gap", "gap_upper_bound", "gap_upper_closed_form", "tmix_lower"]
    _emit(args, "temp-sweep", rows=rows, columns=cols, summary=summary)
    x = [1 / r["alpha2"] for r in rows]
    _svg(args, "temp_sweep", line_chart(
        {"gap": (x, [r["gap"] for r in rows]),
         "2*phi(singleton)": (x, [r["gap_upper_bound"] for r in rows])},
        "Spectral gap vs inverse temperature", "1/alpha^2", "gap", logy=True))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="latmix", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, instance=True, **kw):
        sp = sub.add_parser(name, **kw)
        if instance:
            _instance_args(sp)
        _output_args(sp)
        sp.set_defaults(func=func)
        return sp

    add("gen", cmd_gen, help="generate an instance as JSON")
    sp = add("objective", cmd_objective, help="objective of a state (default: ground truth)")
    sp.add_argument("--state", type=int, help="state code")
    add("localmin", cmd_localmin, help="exhaustive local-minimum report")
    sp = add("gibbs", cmd_gibbs, help="run the Gibbs sampler")
    sp.add_argument("--alpha2", type=float, default=1.0)
    sp.add_argument("--steps", type=int, default=10_000)
    sp.add_argument("--start", type=int, help="start state code (default: random)")
    sp.add_argument("--trajectory", type=Path, help="write a (step, state_code, objective) CSV")
    sp = add("couple", cmd_couple, instance=False, help="coupling-time tail on orthogonal instances")
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--snr", type=float, default=10.0)
    sp.add_argument("--alpha2", type=float, default=1.0)
    sp.add_argument("--trials", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    for name, func in (("spectrum", cmd_spectrum), ("bottleneck", cmd_bottleneck)):
        sp = add(name, func, help=f"{name} analysis of the exact chain")
        sp.add_argument("--alpha2", type=float, default=1.0)
    sp = add("tv", cmd_tv, help="worst-case total-variation curve")
    sp.add_argument("--alpha2", type=float, default=1.0)
    sp.add_argument("--t-max", type=int, default=200)
    sp = add("theory", cmd_theory, instance=False, help="closed-form and Monte Carlo probabilities")
    sp.add_argument("--n", type=int, default=5, help="dimension for the expected-count bound")
    sp.add_argument("--trials", type=int, default=0, help="Monte Carlo trials (0: closed forms only)")
    sp.add_argument("--seed", type=int, default=0)
    for name, func, text in (("fig1", cmd_fig1, "mean number of local minima vs N"),
                             ("fig2", cmd_fig2, "probability of at least one local minimum vs N")):
        sp = add(name, func, instance=False, help=text)
        sp.add_argument("--n-list", type=_int_list, default=[2, 4, 6, 8, 10])
        sp.add_argument("--trials", type=int, default=None,
                        help=f"trials per N (default {ex.DEFAULT_TRIALS}; {ex.DEFAULT_TRIALS_N2} at N=2)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--workers", type=int, default=1)
    sp = add("gap-table", cmd_gap_table, instance=False, help="local minima vs spectral gap")
    sp.add_argument("--n", type=int, default=5)
    sp.add_argument("--snr", type=float, default=10.0)
    sp.add_argument("--alpha2", type=float, default=1.0)
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--no-noise", action="store_true")
    sp.add_argument("--workers", type=int, default=1)
    sp = add("temp-sweep", cmd_temp_sweep, help="gap and bounds across temperatures")
    sp.add_argument("--alpha2-list", type=_float_list, default=[1.0, 0.5, 0.25, 0.125])
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ResourceLimitError as e:
        print(f"latmix: {e}", file=sys.stderr)
        return 3
    except (InvalidArgumentError, PreconditionError) as e:
        print(f"latmix: {e}", file=sys.stderr)
        return 2
    except LatmixError as e:
        print(f"latmix: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
