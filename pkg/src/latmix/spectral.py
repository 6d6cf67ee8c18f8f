"""Exact analysis of the Gibbs chain through its dense transition matrix."""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import (
    InvalidArgumentError,
    NumericalDegeneracyError,
    ResourceLimitError,
)
from .model import ProblemInstance, SpinState, _as_state
from .oracle import barrier as oracle_barrier
from .oracle import exhaustive_objectives, tie_tolerance

MAX_DENSE_N = 12
MAX_BOTTLENECK_N = 4
PI_FLOOR = 1e-300
GAP_REFINE = 1e-8
MAX_REFINE_STATES = 64


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    n: int
    p: np.ndarray
    pi: np.ndarray
    alpha2: float
    objectives: np.ndarray | None = None
    floored: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.p.shape[0]

    @property
    def generator(self) -> np.ndarray:
        """``I - P`` with the diagonal rebuilt from the off-diagonal escape mass.

        ``P``'s own diagonal is ``1 - escape`` and rounds to exactly 1 once
        the escape probability drops below machine epsilon; this form keeps
        every entry to full relative precision.
        """
        g = -np.array(self.p)
        np.fill_diagonal(g, 0.0)
        np.fill_diagonal(g, -g.sum(axis=1))
        return g

    def row_sum_error(self) -> float:
        return float(np.max(np.abs(self.p.sum(axis=1) - 1.0)))

    def detailed_balance_error(self) -> float:
        flow = self.pi[:, None] * self.p
        return float(np.max(np.abs(flow - flow.T)))

    def nonzeros(self) -> int:
        return int(np.count_nonzero(self.p))

    def write_csv(self, path):
        if self.n > 8:
            raise ResourceLimitError("matrix dumps are limited to n <= 8")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for row in self.p:
                w.writerow([format(x, ".17g") for x in row])


def stationary_distribution(f: np.ndarray, alpha2: float):
    """Boltzmann weights ``exp(-f / (2 alpha2))``, normalised.

    Returns ``(pi, floored)``; entries that would underflow are raised to
    ``PI_FLOOR`` and flagged rather than left at zero.
    """
    logw = -(f - f.min()) / (2.0 * alpha2)
    w = np.exp(logw)
    w /= w.sum()
    floored = w < PI_FLOOR
    if floored.any():
        w = np.where(floored, PI_FLOOR, w)
        w /= w.sum()
    return w, floored


def build_transition_matrix(inst: ProblemInstance, alpha2: float) -> TransitionMatrix:
    if inst.n > MAX_DENSE_N:
        raise ResourceLimitError(f"dense transition matrices limited to n <= {MAX_DENSE_N}")
    if not alpha2 > 0:
        raise InvalidArgumentError(f"alpha2 must be positive, got {alpha2}")
    n = inst.n
    f = exhaustive_objectives(inst)
    size = f.size
    codes = np.arange(size)
    p = np.zeros((size, size))
    for k in range(n):
        nb = codes ^ (1 << k)
        # move to the neighbour with its Boltzmann share of the two-state conditional
        p[codes, nb] = expit((f - f[nb]) / (2.0 * alpha2)) / n
    p[codes, codes] = 1.0 - p.sum(axis=1)
    pi, floored = stationary_distribution(f, alpha2)
    for a in (p, pi, f):
        a.setflags(write=False)
    return TransitionMatrix(n=n, p=p, pi=pi, alpha2=float(alpha2), objectives=f, floored=floored)


def _neighbor_symmetric(tm: TransitionMatrix) -> np.ndarray:
    """Off-diagonal part of ``D^{1/2} P D^{-1/2}`` with ``D = diag(pi)``.

    For matrices built from objectives the neighbour entries are evaluated
    as ``1 / (2 n cosh((f_i - f_j) / (4 alpha2)))``, the same quantity
    without forming ratios of tiny stationary weights.
    """
    if tm.objectives is not None:
        f = tm.objectives
        codes = np.arange(f.size)
        s = np.zeros_like(tm.p)
        with np.errstate(over="ignore"):
            for k in range(tm.n):
                nb = codes ^ (1 << k)
                s[codes, nb] = 0.5 / (tm.n * np.cosh((f - f[nb]) / (4.0 * tm.alpha2)))
        return s
    if np.any(tm.pi <= 0):
        raise NumericalDegeneracyError("stationary distribution has zero entries")
    r = np.sqrt(tm.pi)
    s = r[:, None] * tm.p / r[None, :]
    s = 0.5 * (s + s.T)
    np.fill_diagonal(s, 0.0)
    return s


def symmetrized(tm: TransitionMatrix) -> np.ndarray:
    """``D^{1/2} P D^{-1/2}``; symmetric because the chain is reversible."""
    s = _neighbor_symmetric(tm)
    np.fill_diagonal(s, np.diag(tm.p))
    return s


def symmetrized_generator(tm: TransitionMatrix) -> np.ndarray:
    """``D^{1/2} (I - P) D^{-1/2}``: eigenvalues are ``1 - lambda``."""
    s = -_neighbor_symmetric(tm)
    np.fill_diagonal(s, np.diag(tm.generator))
    return s


@dataclass
class SingletonBound:
    """Bottleneck bound obtained from a single local minimum."""

    state: SpinState
    alpha2: float
    phi: float
    barrier: float

    @property
    def gap_upper(self) -> float:
        return 2.0 * self.phi

    @property
    def gap_upper_closed_form(self) -> float:
        """The looser bound ``2 / (1 + exp(barrier / (2 alpha2)))``."""
        return float(2.0 * expit(-self.barrier / (2.0 * self.alpha2)))

    def tmix_lower(self, eps: float) -> float:
        from .mixing import tmix_lower_bound_from_gap
        return tmix_lower_bound_from_gap(self.gap_upper, eps)

    def to_dict(self) -> dict:
        return {
            "code": self.state.code,
            "phi": self.phi,
            "gap_upper": self.gap_upper,
            "gap_upper_closed_form": self.gap_upper_closed_form,
            "barrier": self.barrier,
            "tmix_lower_quarter": self.tmix_lower(0.25),
        }


@dataclass
class SpectrumReport:
    lambda2: float
    gap: float
    relaxation_time: float
    lambda_min: float
    eigenvalues: np.ndarray = field(repr=False)
    resolved: bool = True
    bottleneck_star: float | None = None
    singleton_bounds: list[SingletonBound] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "lambda2": self.lambda2,
            "gap": self.gap,
            "relaxation_time": self.relaxation_time,
            "lambda_min": self.lambda_min,
            "resolved": self.resolved,
            "bottleneck_star": self.bottleneck_star,
            "singleton_bounds": [b.to_dict() for b in self.singleton_bounds],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _refine_small_eigenvalues(a: np.ndarray, dps: int = 40, max_dps: int = 640) -> np.ndarray:
    """Eigenvalues of ``a`` in extended precision, raising the working
    precision until the second-smallest is well above the rounding level."""
    import mpmath

    rows = a.tolist()
    while True:
        with mpmath.workdps(dps):
            ev = sorted(mpmath.eigsy(mpmath.matrix(rows), eigvals_only=True))
            if ev[1] > mpmath.mpf(10) ** (20 - dps) or dps >= max_dps:
                return np.array([float(x) for x in ev])
        dps *= 2


def spectral_gap(tm: TransitionMatrix) -> SpectrumReport:
    """Second-largest eigenvalue and gap ``1 - lambda2``.

    Eigenvalues come from the symmetrised ``I - P``, so the gap is read off
    directly instead of as a difference of two numbers near 1.  Gaps below
    ``GAP_REFINE`` on chains with at most ``MAX_REFINE_STATES`` states are
    recomputed in extended precision; elsewhere a gap under the double
    precision resolution is flagged with ``resolved=False``.

    ``lambda2`` is the second-largest eigenvalue, not the second-largest in
    modulus; ``lambda_min`` is reported so negative spectrum is visible.
    """
    a = symmetrized_generator(tm)
    ev = np.linalg.eigvalsh(a)
    resolved = True
    if ev.size > 1 and ev[1] < GAP_REFINE:
        if ev.size <= MAX_REFINE_STATES:
            ev = _refine_small_eigenvalues(a)
        else:
            resolved = bool(ev[1] > 64 * np.finfo(float).eps * np.abs(a).sum(axis=1).max())
    gap = float(ev[1]) if ev.size > 1 else 1.0
    return SpectrumReport(
        lambda2=1.0 - gap,
        gap=gap,
        relaxation_time=1.0 / gap if gap > 0 else math.inf,
        lambda_min=float(1.0 - ev[-1]),
        eigenvalues=(1.0 - ev),
        resolved=resolved,
    )


def singleton_bottleneck(inst: ProblemInstance, alpha2: float, s, f: np.ndarray | None = None) -> SingletonBound:
    """Escape ratio ``Q(S, S^c) / pi(S)`` for ``S = {s}``, ``s`` a local minimum."""
    if not alpha2 > 0:
        raise InvalidArgumentError(f"alpha2 must be positive, got {alpha2}")
    s = _as_state(inst, s)
    if f is None:
        f = exhaustive_objectives(inst)
    b = oracle_barrier(inst, s, f)
    rises = np.array([f[s.code ^ (1 << k)] - f[s.code] for k in range(inst.n)])
    phi = float(np.mean(expit(-rises / (2.0 * alpha2))))
    return SingletonBound(state=s, alpha2=float(alpha2), phi=phi, barrier=b)


def set_bottleneck(tm: TransitionMatrix, members) -> float:
    """``Q(S, S^c) / pi(S)`` for an arbitrary non-empty set of state codes."""
    mask = np.zeros(tm.size, dtype=bool)
    mask[np.asarray(list(members), dtype=np.int64)] = True
    if not mask.any():
        raise InvalidArgumentError("bottleneck set must be non-empty")
    flow = tm.pi[mask, None] * tm.p[mask][:, ~mask]
    return float(flow.sum() / tm.pi[mask].sum())


def exact_bottleneck_star(tm: TransitionMatrix) -> float:
    """Minimum of ``Q(S, S^c) / pi(S)`` over all non-empty ``S`` with ``pi(S) <= 1/2``."""
    if tm.n > MAX_BOTTLENECK_N:
        raise ResourceLimitError(f"exact bottleneck enumeration limited to n <= {MAX_BOTTLENECK_N}")
    size = tm.size
    flow = tm.pi[:, None] * tm.p
    best = math.inf
    # subsets as bit masks over the 2^n states, in blocks
    all_masks = np.arange(1, 1 << size, dtype=np.int64)
    for start in range(0, all_masks.size, 1 << 14):
        masks = all_masks[start:start + (1 << 14)]
        member = ((masks[:, None] >> np.arange(size)) & 1).astype(float)
        pi_s = member @ tm.pi
        keep = pi_s <= 0.5
        if not keep.any():
            continue
        member, pi_s = member[keep], pi_s[keep]
        q = np.einsum("si,ij,sj->s", member, flow, 1.0 - member)
        best = min(best, float(np.min(q / pi_s)))
    return best


def bottleneck_star_bruteforce(tm: TransitionMatrix) -> float:
    """Reference enumeration with itertools; only for tiny chains in tests."""
    size = tm.size
    best = math.inf
    for r in range(1, size + 1):
        for subset in itertools.combinations(range(size), r):
            if tm.pi[list(subset)].sum() <= 0.5:
                best = min(best, set_bottleneck(tm, subset))
    return best


def spectrum_report(inst: ProblemInstance, alpha2: float, with_bottleneck: bool | None = None) -> SpectrumReport:
    """Gap plus singleton bounds for every local minimum (and exact Phi* when small)."""
    from .oracle import local_minima_codes

    tm = build_transition_matrix(inst, alpha2)
    rep = spectral_gap(tm)
    if with_bottleneck is None:
        with_bottleneck = inst.n <= MAX_BOTTLENECK_N
    if with_bottleneck:
        rep.bottleneck_star = exact_bottleneck_star(tm)
    minima = local_minima_codes(tm.objectives, inst.n)[0]
    rep.singleton_bounds = [
        singleton_bottleneck(inst, alpha2, SpinState(inst.n, int(c)), tm.objectives) for c in minima
    ]
    return rep


def has_distinct_objectives(f: np.ndarray) -> bool:
    g = np.sort(f)
    return bool(np.all(np.diff(g) > tie_tolerance(f)))
