"""Seeded experiment drivers behind the ``latmix`` CLI.

Each driver returns a list of row dicts in trial/parameter order.  Trial
``i`` of an experiment with master seed ``s`` at dimension ``n`` uses the
instance seed ``(s, n, i)``, so results do not depend on worker count or
completion order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidArgumentError, ResourceLimitError
from .mixing import coupon_collector_bound, tmix_exact
from .model import build_instance, gen_gaussian_instance, gen_orthogonal_instance, SpinState
from .oracle import count_local_minima, local_minima_codes
from .sampler import SamplerConfig, coupled_run
from .spectral import build_transition_matrix, singleton_bottleneck, spectral_gap

EXPERIMENTS = ("fig1", "fig2", "gap-table", "thm6", "thm7", "thm8", "tv-curve", "coupling", "temp-sweep")

MAX_FIG_N = 14
MAX_GAP_TABLE_N = 10
DEFAULT_TRIALS = 100
# n = 2 needs many more trials for the closed-form probability to be testable
DEFAULT_TRIALS_N2 = 100_000


@dataclass
class ExperimentSpec:
    name: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out_dir: str | None = None

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise InvalidArgumentError(f"unknown experiment {self.name!r}")


def manifest(spec: ExperimentSpec) -> dict:
    import scipy

    # the output directory is left out so reruns elsewhere produce identical bytes
    exp = asdict(spec)
    exp.pop("out_dir")
    return {
        "experiment": exp,
        "versions": {
            "latmix": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return x


def rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def write_outputs(spec: ExperimentSpec, rows: list[dict], columns: list[str], summary: dict | None = None) -> Path:
    out = Path(spec.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    stem = spec.name.replace("-", "_")
    (out / f"{stem}.csv").write_text(rows_to_csv(rows, columns))
    m = manifest(spec)
    if summary:
        m["summary"] = summary
    (out / f"{stem}_manifest.json").write_text(json.dumps(m, indent=2, default=_json_default))
    return out


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _pool_map(fn, args, workers):
    if workers <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, args, chunksize=max(1, len(args) // (4 * workers))))


def _count_trial(a):
    n, seed, i = a
    return count_local_minima(gen_gaussian_instance(n, 1.0, (seed, n, i), with_noise=False))


def local_minima_counts(n: int, trials: int, seed: int, workers: int = 1) -> np.ndarray:
    """Exhaustive local-minimum counts for ``trials`` noiseless Gaussian channels.

    With no noise the set of local minima does not depend on the SNR.
    """
    if n > MAX_FIG_N:
        raise ResourceLimitError(f"exhaustive figure runs limited to n <= {MAX_FIG_N}")
    if trials < 1:
        raise InvalidArgumentError(f"trials must be positive, got {trials}")
    return np.array(_pool_map(_count_trial, [(n, seed, i) for i in range(trials)], workers))


def _trials_for(n, trials):
    if trials is not None:
        return trials
    return DEFAULT_TRIALS_N2 if n == 2 else DEFAULT_TRIALS


def run_fig1(n_list, trials: int | None = None, seed: int = 0, workers: int = 1) -> list[dict]:
    rows = []
    for n in n_list:
        c = local_minima_counts(n, _trials_for(n, trials), seed, workers)
        rows.append({
            "n": n,
            "trials": c.size,
            "mean_local_minima": float(c.mean()),
            "stderr": float(c.std(ddof=1) / math.sqrt(c.size)) if c.size > 1 else 0.0,
        })
    return rows


def run_fig2(n_list, trials: int | None = None, seed: int = 0, workers: int = 1) -> list[dict]:
    rows = []
    for n in n_list:
        c = local_minima_counts(n, _trials_for(n, trials), seed, workers)
        p = float(np.mean(c > 0))
        rows.append({
            "n": n,
            "trials": c.size,
            "p_exist": p,
            "stderr": math.sqrt(p * (1 - p) / c.size),
        })
    return rows


def _gap_trial(a):
    n, snr, alpha2, seed, i, with_noise = a
    inst = gen_gaussian_instance(n, snr, (seed, n, i), with_noise=with_noise)
    tm = build_transition_matrix(inst, alpha2)
    count = int(local_minima_codes(tm.objectives, n)[0].size)
    return {"trial": i, "n_local_minima": count, "spectral_gap": spectral_gap(tm).gap}


def run_gap_table(n: int = 5, snr: float = 10.0, alpha2: float = 1.0, trials: int = 10,
                  seed: int = 0, with_noise: bool = True, workers: int = 1) -> list[dict]:
    if n > MAX_GAP_TABLE_N:
        raise ResourceLimitError(f"gap table limited to n <= {MAX_GAP_TABLE_N}")
    if trials < 1:
        raise InvalidArgumentError(f"trials must be positive, got {trials}")
    args = [(n, snr, alpha2, seed, i, with_noise) for i in range(trials)]
    return _pool_map(_gap_trial, args, workers)


def gap_separation(rows: list[dict]) -> dict:
    with_lm = [r["spectral_gap"] for r in rows if r["n_local_minima"] > 0]
    without = [r["spectral_gap"] for r in rows if r["n_local_minima"] == 0]
    out = {"with_local_minima": len(with_lm), "without_local_minima": len(without)}
    if with_lm and without:
        out["max_gap_with"] = max(with_lm)
        out["min_gap_without"] = min(without)
        out["separated"] = max(with_lm) < min(without)
        out["median_ratio"] = float(np.median(without) / np.median(with_lm))
    return out


def fit_slope(x, y) -> float:
    """Least-squares slope of ``y`` against ``x``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.size < 2:
        return math.nan
    return float(np.polyfit(x, y, 1)[0])


def run_temp_sweep(inst_spec: dict, alpha2_list, eps_tv: float = 0.25) -> tuple[list[dict], dict]:
    """Spectral gap and bottleneck bounds across temperatures for one instance.

    The bound columns use the local minimum with the largest barrier (the
    one that dominates as ``alpha2 -> 0``); they are NaN when there is none.
    """
    inst = build_instance(**inst_spec)
    if inst.n > MAX_GAP_TABLE_N:
        raise ResourceLimitError(f"temperature sweeps limited to n <= {MAX_GAP_TABLE_N}")
    rows = []
    deepest = None
    for a2 in alpha2_list:
        tm = build_transition_matrix(inst, a2)
        gap = spectral_gap(tm).gap
        minima, _, _, gaps = local_minima_codes(tm.objectives, inst.n)
        row = {"alpha2": float(a2), "gap": gap, "gap_upper_bound": math.nan,
               "gap_upper_closed_form": math.nan, "tmix_lower": math.nan}
        if minima.size:
            if deepest is None:
                deepest = int(minima[np.argmax(gaps[minima].min(axis=1))])
            sb = singleton_bottleneck(inst, a2, SpinState(inst.n, deepest), tm.objectives)
            row.update(gap_upper_bound=sb.gap_upper, gap_upper_closed_form=sb.gap_upper_closed_form,
                       tmix_lower=sb.tmix_lower(eps_tv))
        rows.append(row)
    inv = [1.0 / r["alpha2"] for r in rows]
    summary = {
        "n_local_minima": 0 if deepest is None else int(minima.size),
        "slope_log_gap": fit_slope(inv, [math.log(r["gap"]) for r in rows]),
    }
    if deepest is not None:
        summary["barrier"] = float(gaps[deepest].min())
        summary["slope_log_gap_upper_closed_form"] = fit_slope(inv, [math.log(r["gap_upper_closed_form"]) for r in rows])
        summary["slope_log_gap_upper"] = fit_slope(inv, [math.log(r["gap_upper_bound"]) for r in rows])
        summary["predicted_slope"] = -summary["barrier"] / 2.0
    return rows, summary


def run_tv_curve(inst_spec: dict, alpha2: float, eps_list=(0.25, 0.1)) -> dict:
    inst = build_instance(**inst_spec)
    tm = build_transition_matrix(inst, alpha2)
    out = {"n": inst.n, "alpha2": alpha2, "gap": spectral_gap(tm).gap, "tmix": {}}
    for e in eps_list:
        t = tmix_exact(tm, e)
        out["tmix"][repr(e)] = {"t": t.t, "converged": t.converged,
                                "coupon_collector_bound": coupon_collector_bound(inst.n, e)}
    return out


def _coupling_trial(a):
    inst_spec, alpha2, seed, i = a
    inst = gen_orthogonal_instance(**inst_spec)
    n = inst.n
    cfg = SamplerConfig(alpha2=alpha2, seed=(seed, i), max_steps=1_000_000)
    return coupled_run(inst, cfg, SpinState.all_minus(n), SpinState.all_plus(n))


def coupling_times(n: int, snr: float, alpha2: float, pairs: int, seed: int = 0, workers: int = 1) -> np.ndarray:
    """Meeting times of ``pairs`` coupled chains started at opposite corners."""
    spec = {"n": n, "snr": snr, "seed": seed, "with_noise": True}
    return np.array(_pool_map(_coupling_trial, [(spec, alpha2, seed, i) for i in range(pairs)], workers))


def run_coupling(n: int, snr: float, alpha2: float, pairs: int, seed: int = 0,
                 c_list=(1.0, 2.0, 3.0), workers: int = 1) -> list[dict]:
    tau = coupling_times(n, snr, alpha2, pairs, seed, workers)
    rows = []
    for c in c_list:
        t = n * math.log(n) + c * n
        p = float(np.mean(tau > t))
        rows.append({"c": c, "t": t, "p_exceed": p, "stderr": math.sqrt(p * (1 - p) / tau.size),
                     "bound": math.exp(-c)})
    return rows
