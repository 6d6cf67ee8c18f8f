"""Single-site Gibbs sampler over {-1, +1}^n.

At each step a coordinate ``j`` is chosen uniformly and resampled from its
conditional law at temperature ``alpha2``::

    P(x_j = +1 | rest) = 1 / (1 + exp(delta / (2 * alpha2)))

where ``delta`` is the objective with ``x_j = +1`` minus the objective with
``x_j = -1``.  The site index and the uniform used for the update come from
two independent streams, which is what lets :func:`coupled_run` drive two
chains with shared randomness.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import InvalidArgumentError, PreconditionError
from .model import ProblemInstance, SpinState, _as_state

_BLOCK = 1 << 14


@dataclass(frozen=True)
class SamplerConfig:
    alpha2: float
    seed: int = 0
    max_steps: int = 1000

    def __post_init__(self):
        if not self.alpha2 > 0:
            raise InvalidArgumentError(f"alpha2 must be positive, got {self.alpha2}")
        if self.max_steps < 1:
            raise InvalidArgumentError(f"max_steps must be >= 1, got {self.max_steps}")


def make_streams(seed) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (site, draw) generators derived from one seed."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    site_ss, draw_ss = ss.spawn(2)
    return np.random.default_rng(site_ss), np.random.default_rng(draw_ss)


def flip_delta(inst: ProblemInstance, s, j: int) -> float:
    """Objective at ``x_j = +1`` minus objective at ``x_j = -1``, others fixed."""
    s = _as_state(inst, s)
    if not 0 <= j < inst.n:
        raise InvalidArgumentError(f"site {j} out of range for n={inst.n}")
    x = s.vector
    b = inst.b_matrix[:, j]
    r0 = inst.y - inst.b_matrix @ x + x[j] * b
    return float(-4.0 * (b @ r0))


def plus_probability(delta, alpha2):
    return expit(-np.asarray(delta, dtype=float) / (2.0 * alpha2))


def flip_probability(inst: ProblemInstance, s, j: int, alpha2: float) -> float:
    """Probability that site ``j`` is set to +1 when it is selected."""
    if not alpha2 > 0:
        raise InvalidArgumentError(f"alpha2 must be positive, got {alpha2}")
    return float(np.clip(plus_probability(flip_delta(inst, s, j), alpha2), 0.0, 1.0))


class _Chain:
    """Mutable chain state with O(n) incremental updates.

    Keeps ``g = B^T (y - B x)`` so that the conditional for site ``j`` needs
    only ``g[j]`` and the Gram diagonal.
    """

    def __init__(self, inst: ProblemInstance, start: SpinState):
        self.gram = inst.b_matrix.T @ inst.b_matrix
        self.diag = np.diag(self.gram).copy()
        self.x = start.vector.copy()
        self.code = start.code
        r = inst.y - inst.b_matrix @ self.x
        self.g = inst.b_matrix.T @ r
        self.f = float(r @ r)

    def delta(self, j: int) -> float:
        return -4.0 * (self.g[j] + self.x[j] * self.diag[j])

    def set(self, j: int, value: float):
        d = value - self.x[j]
        if d == 0.0:
            return
        # r -> r - d b_j
        self.f += -2.0 * d * self.g[j] + d * d * self.diag[j]
        self.g -= d * self.gram[:, j]
        self.x[j] = value
        self.code ^= 1 << j


def step(inst: ProblemInstance, s, config: SamplerConfig, rng_state) -> SpinState:
    """One Gibbs update from ``s``.

    ``rng_state`` is a ``(site_rng, draw_rng)`` pair as returned by
    :func:`make_streams`; both generators are advanced.
    """
    s = _as_state(inst, s)
    site_rng, draw_rng = rng_state
    j = int(site_rng.integers(inst.n))
    u = draw_rng.random()
    p = flip_probability(inst, s, j, config.alpha2)
    plus = u < p
    if plus == bool((s.code >> j) & 1):
        return s
    return s.flip(j)


def step_distribution_sample(inst: ProblemInstance, s, alpha2: float, size: int, seed) -> np.ndarray:
    """``size`` independent one-step successors of ``s``, as state codes."""
    s = _as_state(inst, s)
    n = inst.n
    p_plus = np.array([flip_probability(inst, s, j, alpha2) for j in range(n)])
    site_rng, draw_rng = make_streams(seed)
    sites = site_rng.integers(n, size=size)
    u = draw_rng.random(size)
    new_bit = (u < p_plus[sites]).astype(np.int64)
    old_bit = (s.code >> sites) & 1
    return s.code ^ ((new_bit ^ old_bit) << sites)


@dataclass
class ChainDiagnostics:
    steps_taken: int
    final_state: SpinState
    hit_time_global: int | None = None
    visit_counts: np.ndarray | None = None
    final_objective: float = math.nan
    trajectory: list[tuple[int, int, float]] | None = field(default=None, repr=False)

    def frequencies(self) -> np.ndarray:
        if self.visit_counts is None:
            raise InvalidArgumentError("visit counts were not recorded")
        return self.visit_counts / self.visit_counts.sum()

    def to_dict(self) -> dict:
        d = {
            "steps_taken": self.steps_taken,
            "hit_time_global": self.hit_time_global,
            "final_state_code": self.final_state.code,
            "final_objective": self.final_objective,
        }
        if self.visit_counts is not None:
            d["visit_counts"] = {int(c): int(k) for c, k in enumerate(self.visit_counts) if k}
        return d

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def write_trajectory_csv(self, path):
        if self.trajectory is None:
            raise InvalidArgumentError("trajectory was not recorded")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "state_code", "objective"])
            for t, c, f in self.trajectory:
                w.writerow([t, c, format(f, ".17g")])


def random_start(n: int, seed) -> SpinState:
    return SpinState(n, int(np.random.default_rng(seed).integers(1 << n)))


def run(inst: ProblemInstance, config: SamplerConfig, start, global_codes=None,
        record_visits: bool | None = None, record_trajectory: bool = False) -> ChainDiagnostics:
    """Run ``config.max_steps`` Gibbs updates from ``start``.

    ``global_codes`` is the set of global minimizer codes (from the oracle);
    when given, the first step at which the chain sits on one of them is
    reported as ``hit_time_global`` (0 if it starts there).  Visit counts
    include the starting state and are kept for ``n <= 16``.
    """
    start = _as_state(inst, start)
    n = inst.n
    if record_visits is None:
        record_visits = n <= 16
    elif record_visits and n > 16:
        raise InvalidArgumentError("visit counts are only kept for n <= 16")
    targets = frozenset(int(c) for c in global_codes) if global_codes is not None else frozenset()

    chain = _Chain(inst, start)
    visits = np.zeros(1 << n, dtype=np.int64) if record_visits else None
    traj = [(0, chain.code, chain.f)] if record_trajectory else None
    hit = 0 if chain.code in targets else None
    if visits is not None:
        visits[chain.code] += 1

    site_rng, draw_rng = make_streams(config.seed)
    scale = 1.0 / (2.0 * config.alpha2)
    t = 0
    while t < config.max_steps:
        m = min(_BLOCK, config.max_steps - t)
        sites = site_rng.integers(n, size=m)
        us = draw_rng.random(m)
        for j, u in zip(sites.tolist(), us.tolist()):
            t += 1
            p = _expit_scalar(-chain.delta(j) * scale)
            chain.set(j, 1.0 if u < p else -1.0)
            if visits is not None:
                visits[chain.code] += 1
            if hit is None and chain.code in targets:
                hit = t
            if traj is not None:
                traj.append((t, chain.code, chain.f))
    return ChainDiagnostics(
        steps_taken=t,
        final_state=SpinState(n, chain.code),
        hit_time_global=hit,
        visit_counts=visits,
        final_objective=chain.f,
        trajectory=traj,
    )


def _expit_scalar(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def coupled_run(inst: ProblemInstance, config: SamplerConfig, s1, s2) -> int:
    """Meeting time of two chains that share the site and the uniform draw.

    Each step both chains update the same site ``j`` with the same uniform
    ``u``: a chain sets ``x_j = +1`` iff ``u`` is below its own conditional
    probability.  For orthogonal columns that probability does not depend
    on the rest of the state, so a coordinate agrees forever once visited.
    Returns the first ``t`` with equal states (0 if ``s1 == s2``); raises if
    the chains have not met after ``config.max_steps`` steps.
    """
    if inst.kind != "orthogonal":
        raise PreconditionError("coupled_run requires an orthogonal-column instance")
    s1, s2 = _as_state(inst, s1), _as_state(inst, s2)
    if s1 == s2:
        return 0
    a, b = _Chain(inst, s1), _Chain(inst, s2)
    site_rng, draw_rng = make_streams(config.seed)
    scale = 1.0 / (2.0 * config.alpha2)
    n = inst.n
    t = 0
    while t < config.max_steps:
        m = min(256, config.max_steps - t)
        sites = site_rng.integers(n, size=m)
        us = draw_rng.random(m)
        for j, u in zip(sites.tolist(), us.tolist()):
            t += 1
            a.set(j, 1.0 if u < _expit_scalar(-a.delta(j) * scale) else -1.0)
            b.set(j, 1.0 if u < _expit_scalar(-b.delta(j) * scale) else -1.0)
            if a.code == b.code:
                return t
    raise RuntimeError(f"chains did not couple within {config.max_steps} steps")
