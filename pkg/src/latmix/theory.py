"""Probabilities of local minima and the temperature rule.

Closed forms are cross-checked by quadrature and by Monte Carlo runs that go
through :mod:`latmix.oracle`, so the three routes stay independent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import InvalidArgumentError, ResourceLimitError
from .model import MAX_EXHAUSTIVE_N, ProblemInstance, SpinState, load_custom_instance, unit_sphere_columns
from .oracle import exhaustive_objectives, is_local_min_lemma1, local_minima_codes

METHODS = ("closed_form", "quadrature", "monte_carlo")


@dataclass
class ProbabilityEstimate:
    value: float
    stderr: float = 0.0
    trials: int = 0
    method: str = "closed_form"

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidArgumentError(f"unknown method {self.method!r}")
        if self.method != "monte_carlo" and self.stderr != 0:
            raise InvalidArgumentError("only Monte Carlo estimates carry a standard error")

    def within(self, target: float, n_sigma: float = 3.0) -> bool:
        return abs(self.value - target) <= n_sigma * self.stderr

    def to_dict(self) -> dict:
        return {"value": self.value, "stderr": self.stderr, "trials": self.trials, "method": self.method}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _binomial(hits: int, trials: int) -> ProbabilityEstimate:
    p = hits / trials
    return ProbabilityEstimate(p, math.sqrt(p * (1 - p) / trials), trials, "monte_carlo")


def ratio_tail(t: float) -> float:
    """``P(max(r1^2, r2^2) / (r1 r2) > t)`` for i.i.d. standard Rayleigh ``r1, r2``."""
    if not t >= 1:
        raise InvalidArgumentError(f"ratio tail defined for t >= 1, got {t}")
    return 2.0 / (t * t + 1.0)


def ratio_tail_mc(t: float, trials: int, seed: int = 0) -> ProbabilityEstimate:
    if not t >= 1:
        raise InvalidArgumentError(f"ratio tail defined for t >= 1, got {t}")
    rng = np.random.default_rng(seed)
    r = rng.rayleigh(size=(trials, 2))
    ratio = np.max(r * r, axis=1) / (r[:, 0] * r[:, 1])
    return _binomial(int(np.count_nonzero(ratio > t)), trials)


P_LOCAL_2X2_GAUSSIAN = 1 / 3 - 1 / math.sqrt(5) + 2 * math.atan(math.sqrt(5 / 3)) / (math.sqrt(5) * math.pi)


def p_local_2x2_gaussian() -> ProbabilityEstimate:
    """Probability that a 2x2 N(0,1) channel with no noise has a local minimum."""
    return ProbabilityEstimate(P_LOCAL_2X2_GAUSSIAN, 0.0, 0, "closed_form")


def p_local_2x2_gaussian_quadrature() -> ProbabilityEstimate:
    """Integrate the density of the norm ratio against the angle condition on [1, 2]."""

    def integrand(t):
        return 4 * t / (t * t + 1) ** 2 * (1 - math.acos(-t / 2) / math.pi)

    value, _ = integrate.quad(integrand, 1.0, 2.0, epsabs=1e-12, epsrel=1e-12, limit=200)
    return ProbabilityEstimate(value, 0.0, 0, "quadrature")


def _plus_plus_is_local_min(h: np.ndarray) -> bool:
    inst = load_custom_instance(h, -h.sum(axis=1))
    f = exhaustive_objectives(inst)
    return is_local_min_lemma1(inst, SpinState.all_plus(2), f).holds


def p_local_2x2_gaussian_mc(trials: int, seed: int = 0) -> ProbabilityEstimate:
    """Monte Carlo through the oracle: draw H, set v = 0, test (+1, +1).

    (+1, +1) is the only candidate: the other non-global states neighbour
    the global minimum (-1, -1).
    """
    if trials < 1:
        raise InvalidArgumentError("trials must be positive")
    rng = np.random.default_rng(seed)
    hs = rng.standard_normal((trials, 2, 2))
    hits = sum(_plus_plus_is_local_min(h) for h in hs)
    return _binomial(int(hits), trials)


def p_local_2x2_unit_sphere() -> ProbabilityEstimate:
    return ProbabilityEstimate(1.0 / 3.0, 0.0, 0, "closed_form")


def p_local_2x2_unit_sphere_mc(trials: int, seed: int = 0) -> ProbabilityEstimate:
    if trials < 1:
        raise InvalidArgumentError("trials must be positive")
    rng = np.random.default_rng(seed)
    hits = sum(_plus_plus_is_local_min(unit_sphere_columns(2, 2, rng)) for _ in range(trials))
    return _binomial(int(hits), trials)


def p_local_2x2_unit_sphere_angle_mc(trials: int, seed: int = 0) -> ProbabilityEstimate:
    """Fraction of independent uniform angle pairs with ``cos(theta) < -1/2``."""
    rng = np.random.default_rng(seed)
    a = rng.uniform(0, 2 * math.pi, size=(trials, 2))
    return _binomial(int(np.count_nonzero(np.cos(a[:, 0] - a[:, 1]) < -0.5)), trials)


@dataclass
class LocalMinimaBound:
    """Lower bound on the expected number of local minima (unit-sphere columns, v = 0).

    Each term is ``C(n, k) * P_k`` with ``P_k`` the Monte Carlo probability
    that the sum of ``k`` independent uniform unit vectors has norm below
    1/2, the sufficient norm condition for a local minimum.  Because that
    condition is only sufficient, this undercounts the expectation.
    """

    n: int
    value: float
    stderr: float
    p_k: dict[int, ProbabilityEstimate] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "value": self.value,
            "stderr": self.stderr,
            "p_k": {k: e.to_dict() for k, e in self.p_k.items()},
        }


def expected_local_minima_lower_bound(n: int, k_trials: int, seed: int = 0) -> LocalMinimaBound:
    if n < 2:
        raise InvalidArgumentError(f"n must be >= 2, got {n}")
    if k_trials < 1:
        raise InvalidArgumentError("k_trials must be positive")
    rng = np.random.default_rng(seed)
    value = 0.0
    var = 0.0
    p_k = {}
    for k in range(2, n + 1):
        hits = 0
        # batch to bound memory at large k_trials * k * n
        batch = max(1, (1 << 20) // (k * n))
        left = k_trials
        while left:
            m = min(batch, left)
            g = rng.standard_normal((m, k, n))
            u = g / np.linalg.norm(g, axis=2, keepdims=True)
            hits += int(np.count_nonzero(np.linalg.norm(u.sum(axis=1), axis=1) < 0.5))
            left -= m
        est = _binomial(hits, k_trials)
        p_k[k] = est
        c = math.comb(n, k)
        value += c * est.value
        var += (c * est.stderr) ** 2
    return LocalMinimaBound(n=n, value=value, stderr=math.sqrt(var), p_k=p_k)


def p2_sum_norm_quadrature() -> float:
    """Exact ``P(||u1 + u2|| < 1/2)`` for two uniform unit vectors in the plane.

    ``||u1 + u2||^2 = 2 + 2 cos(theta)`` with ``theta`` uniform on [0, pi],
    so the event is ``cos(theta) < -7/8``.
    """
    value, _ = integrate.quad(
        lambda th: 1.0 if 2 + 2 * math.cos(th) < 0.25 else 0.0,
        0.0, math.pi, points=[math.acos(-7 / 8)], epsabs=1e-13,
    )
    return value / math.pi


def min_alpha2_for_mixing(inst: ProblemInstance, c_target: float = 1.0) -> float:
    """Smallest ``alpha2`` with ``max_barrier / (2 alpha2) <= c_target``.

    Zero when the instance has no local minima: then the relaxation time
    stays bounded at every temperature.
    """
    if not c_target > 0:
        raise InvalidArgumentError(f"c_target must be positive, got {c_target}")
    if inst.n > MAX_EXHAUSTIVE_N:
        raise ResourceLimitError(f"needs exhaustive local minima, n <= {MAX_EXHAUSTIVE_N}")
    f = exhaustive_objectives(inst)
    minima, _, _, gaps = local_minima_codes(f, inst.n)
    if minima.size == 0:
        return 0.0
    return float(gaps[minima].min(axis=1).max()) / (2.0 * c_target)
