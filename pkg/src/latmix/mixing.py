"""Total-variation distance to stationarity and mixing-time bounds.

All logarithms are natural.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InvalidArgumentError, ResourceLimitError
from .spectral import TransitionMatrix

MAX_CURVE_N = 8
NORMALIZATION_TOL = 1e-9


def tv_distance(mu, nu) -> float:
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != nu.shape or mu.ndim != 1:
        raise InvalidArgumentError(f"distributions must be 1-d of equal length, got {mu.shape} and {nu.shape}")
    for name, d in (("mu", mu), ("nu", nu)):
        if abs(d.sum() - 1.0) > NORMALIZATION_TOL or np.any(d < -NORMALIZATION_TOL):
            raise InvalidArgumentError(f"{name} is not a probability vector (sum={d.sum()!r})")
    return float(min(1.0, 0.5 * np.abs(mu - nu).sum()))


def _worst_row_tv(a: np.ndarray, pi: np.ndarray) -> float:
    """Worst-row TV distance of ``I - a`` from ``pi``.

    Powers of ``P`` are carried as ``P^t = I - A_t``: the entries of ``A_t``
    stay accurate even when escape probabilities are far below machine
    epsilon, where ``P`` itself would round its diagonal to 1.
    """
    m = -a - pi[None, :]
    m[np.diag_indices_from(m)] += 1.0
    return float(min(1.0, 0.5 * np.abs(m).sum(axis=1).max()))


def _compose(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # (I - a)(I - b) = I - (a + b - a b)
    return a + b - a @ b


class Tmix(NamedTuple):
    t: int
    converged: bool


@dataclass
class TVCurve:
    alpha2: float
    points: list[tuple[int, float]]
    tmix: dict[float, Tmix] = field(default_factory=dict)

    @property
    def t_max(self) -> int:
        return self.points[-1][0]

    @property
    def d(self) -> np.ndarray:
        return np.array([dt for _, dt in self.points])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "d_t"])
            for t, dt in self.points:
                w.writerow([t, format(dt, ".17g")])

    def summary(self) -> dict:
        return {
            "alpha2": self.alpha2,
            "t_max": self.t_max,
            "tmix": {repr(e): {"t": r.t, "converged": r.converged} for e, r in self.tmix.items()},
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.summary(), **kwargs)


def default_t_max(n: int, gap: float | None = None) -> int:
    if gap is None or gap <= 0:
        return 10_000
    return max(10, math.ceil(10 * n * max(math.log(n), 1.0) * (1 + 1 / gap)))


def worst_case_tv_curve(tm: TransitionMatrix, t_max: int | None = None, eps_list=(0.25,)) -> TVCurve:
    """``d(t) = max_x ||P^t(x, .) - pi||_TV`` for ``t = 0..t_max``.

    Iterates ``P^t`` one dense product at a time.
    """
    if tm.n > MAX_CURVE_N:
        raise ResourceLimitError(f"exact TV curves limited to n <= {MAX_CURVE_N}")
    if t_max is None:
        t_max = default_t_max(tm.n)
    if t_max < 0:
        raise InvalidArgumentError("t_max must be non-negative")
    g = tm.generator
    a = np.zeros_like(g)
    points = [(0, _worst_row_tv(a, tm.pi))]
    for t in range(1, t_max + 1):
        a = _compose(a, g)
        points.append((t, _worst_row_tv(a, tm.pi)))
    curve = TVCurve(alpha2=tm.alpha2, points=points)
    for e in eps_list:
        curve.tmix[e] = empirical_tmix(curve, e)
    return curve


def empirical_tmix(curve: TVCurve, eps: float) -> Tmix:
    """First ``t`` with ``d(t) <= eps``; ``(t_max, False)`` if never reached."""
    if not 0 < eps < 1:
        raise InvalidArgumentError(f"eps must lie in (0, 1), got {eps}")
    for t, dt in curve.points:
        if dt <= eps:
            return Tmix(t, True)
    return Tmix(curve.t_max, False)


def tmix_exact(tm: TransitionMatrix, eps: float, t_cap: int = 1 << 400) -> Tmix:
    """Exact mixing time by repeated squaring and bisection.

    Uses that ``d(t)`` is non-increasing, so it needs only ``O(log t)``
    matrix products.  Suitable for slowly mixing chains where iterating
    one step at a time would take millions of products.
    """
    if tm.n > MAX_CURVE_N:
        raise ResourceLimitError(f"exact mixing times limited to n <= {MAX_CURVE_N}")
    if not 0 < eps < 1:
        raise InvalidArgumentError(f"eps must lie in (0, 1), got {eps}")
    pi = tm.pi
    zero = np.zeros((tm.size, tm.size))
    if _worst_row_tv(zero, pi) <= eps:
        return Tmix(0, True)
    # powers[k] represents P^(2^k)
    powers = [tm.generator]
    while _worst_row_tv(powers[-1], pi) > eps:
        if (1 << len(powers)) > t_cap:
            return Tmix(1 << (len(powers) - 1), False)
        powers.append(_compose(powers[-1], powers[-1]))
    # d(2^(K-1)) > eps >= d(2^K); greedily build the largest t with d(t) > eps
    t = 0
    acc = zero
    for k in range(len(powers) - 1, -1, -1):
        cand = _compose(acc, powers[k])
        if _worst_row_tv(cand, pi) > eps:
            acc = cand
            t += 1 << k
    return Tmix(t + 1, True)


def coupon_collector_bound(n: int, eps: float) -> float:
    """``n ln n + n ln(1/eps)``: mixing-time bound for orthogonal columns."""
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    if not 0 < eps < 1:
        raise InvalidArgumentError(f"eps must lie in (0, 1), got {eps}")
    return n * math.log(n) + n * math.log(1.0 / eps)


def tmix_lower_bound_from_gap(gap_upper: float, eps: float) -> float:
    """``(1/gap - 1) ln(1 / (2 eps))``; valid for any upper bound on the gap."""
    if not 0 < gap_upper <= 2:
        raise InvalidArgumentError(f"gap bound must lie in (0, 2], got {gap_upper}")
    if not 0 < eps < 0.5:
        raise InvalidArgumentError(f"eps must lie in (0, 1/2), got {eps}")
    return (1.0 / gap_upper - 1.0) * math.log(1.0 / (2.0 * eps))
