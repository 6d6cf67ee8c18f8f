"""Integer least-squares problem instances over {-1, +1}^n.

A state is stored as an integer code: bit k set means coordinate k is +1,
bit k clear means -1.  Flipping coordinate k is ``code ^ (1 << k)``.

Every instance stores the *effective* matrix ``sqrt(snr / n) * H`` so the
objective is always ``||y - B x||^2`` regardless of how it was generated.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import InvalidArgumentError

KINDS = ("gaussian", "orthogonal", "unit_sphere", "adversarial", "custom")

MAX_EXHAUSTIVE_N = 20


@dataclass(frozen=True)
class SpinState:
    n: int
    code: int

    def __post_init__(self):
        if self.n < 1:
            raise InvalidArgumentError(f"dimension must be positive, got {self.n}")
        if not 0 <= self.code < (1 << self.n):
            raise InvalidArgumentError(f"code {self.code} out of range for n={self.n}")

    @classmethod
    def from_vector(cls, x: Iterable[float]) -> "SpinState":
        x = np.asarray(list(x), dtype=float)
        if x.ndim != 1 or x.size == 0 or not np.all(np.abs(x) == 1):
            raise InvalidArgumentError("state vector must be a non-empty vector of +-1 entries")
        code = 0
        for k, xk in enumerate(x):
            if xk > 0:
                code |= 1 << k
        return cls(int(x.size), code)

    @classmethod
    def all_minus(cls, n: int) -> "SpinState":
        return cls(n, 0)

    @classmethod
    def all_plus(cls, n: int) -> "SpinState":
        return cls(n, (1 << n) - 1)

    @property
    def vector(self) -> np.ndarray:
        bits = (self.code >> np.arange(self.n)) & 1
        return 2.0 * bits - 1.0

    def flip(self, k: int) -> "SpinState":
        if not 0 <= k < self.n:
            raise InvalidArgumentError(f"coordinate {k} out of range for n={self.n}")
        return SpinState(self.n, self.code ^ (1 << k))

    def neighbors(self) -> list["SpinState"]:
        return [self.flip(k) for k in range(self.n)]

    def __str__(self):
        return "(" + ",".join("+1" if v > 0 else "-1" for v in self.vector) + ")"


def decode_codes(codes, n: int) -> np.ndarray:
    """Map an array of state codes to a ``(len(codes), n)`` array of +-1 floats."""
    codes = np.asarray(codes, dtype=np.int64)
    bits = (codes[..., None] >> np.arange(n)) & 1
    return 2.0 * bits - 1.0


def encode_vectors(x) -> np.ndarray:
    x = np.asarray(x)
    n = x.shape[-1]
    return ((x > 0).astype(np.int64) << np.arange(n)).sum(axis=-1)


def all_states(n: int) -> np.ndarray:
    return decode_codes(np.arange(1 << n), n)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """An ``n x n`` integer least-squares problem ``min ||y - B x||^2``.

    ``b_matrix`` is the effective matrix with the SNR already absorbed;
    ``snr`` is kept only as metadata.  ``v`` is the noise that was actually
    drawn (zeros for noiseless instances).
    """

    n: int
    b_matrix: np.ndarray
    y: np.ndarray
    snr: float
    x_true: SpinState
    v: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("b_matrix", "y", "v"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown instance kind {self.kind!r}")

    @property
    def columns(self) -> np.ndarray:
        """Columns of the effective matrix as rows of the returned array."""
        return self.b_matrix.T

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "snr": float(self.snr),
            "kind": self.kind,
            "b_matrix": self.b_matrix.tolist(),
            "y": self.y.tolist(),
            "x_true_code": self.x_true.code,
            "v": self.v.tolist(),
        }

    def to_json(self, **kwargs) -> str:
        # float repr is the shortest string that round-trips bit-exactly
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemInstance":
        n = int(d["n"])
        b = np.array(d["b_matrix"], dtype=float).reshape(n, n)
        return cls(
            n=n,
            b_matrix=b,
            y=np.array(d["y"], dtype=float),
            snr=float(d["snr"]),
            x_true=SpinState(n, int(d["x_true_code"])),
            v=np.array(d["v"], dtype=float),
            kind=d["kind"],
        )

    @classmethod
    def from_json(cls, text: str) -> "ProblemInstance":
        return cls.from_dict(json.loads(text))

    def same_as(self, other: "ProblemInstance") -> bool:
        """Bit-identical comparison of all numeric content."""
        return (
            self.n == other.n
            and self.kind == other.kind
            and self.snr == other.snr
            and self.x_true == other.x_true
            and np.array_equal(self.b_matrix, other.b_matrix)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.v, other.v)
        )


def _check_n(n):
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"n must be a positive integer, got {n}")
    return int(n)


def _check_snr(snr):
    if not np.isfinite(snr) or snr < 0:
        raise InvalidArgumentError(f"snr must be a non-negative real, got {snr}")
    return float(snr)


def _finish(n, h, snr, rng, with_noise, kind):
    b = np.sqrt(snr / n) * h
    x_true = SpinState.all_minus(n)
    v = rng.standard_normal(n) if with_noise else np.zeros(n)
    y = b @ x_true.vector + v
    return ProblemInstance(n=n, b_matrix=b, y=y, snr=snr, x_true=x_true, v=v, kind=kind)


def gen_gaussian_instance(n: int, snr: float, seed: int, with_noise: bool = True) -> ProblemInstance:
    """i.i.d. N(0, 1) channel, all -1 transmitted, optional N(0, 1) noise.

    ``H`` is drawn before the noise from the same stream, so two calls that
    differ only in ``snr`` or ``with_noise`` share the same ``H``.
    """
    n, snr = _check_n(n), _check_snr(snr)
    rng = np.random.default_rng(seed)
    h = rng.standard_normal((n, n))
    return _finish(n, h, snr, rng, with_noise, "gaussian")


def haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d


def gen_orthogonal_instance(n: int, snr: float, seed: int, with_noise: bool = True) -> ProblemInstance:
    n, snr = _check_n(n), _check_snr(snr)
    rng = np.random.default_rng(seed)
    h = haar_orthogonal(n, rng)
    return _finish(n, h, snr, rng, with_noise, "orthogonal")


def unit_sphere_columns(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """``n x m`` matrix whose columns are i.i.d. uniform on the unit sphere."""
    g = rng.standard_normal((n, m))
    return g / np.linalg.norm(g, axis=0)


def gen_unit_sphere_instance(n: int, seed: int) -> ProblemInstance:
    n = _check_n(n)
    rng = np.random.default_rng(seed)
    h = unit_sphere_columns(n, n, rng)
    x_true = SpinState.all_minus(n)
    return ProblemInstance(
        n=n, b_matrix=h, y=h @ x_true.vector, snr=1.0, x_true=x_true,
        v=np.zeros(n), kind="unit_sphere",
    )


def gen_adversarial_instance(n: int, eps: float) -> ProblemInstance:
    """Lattice with at least ``2**(n/2) - 1`` local minima.

    Columns ``0..n/2-1`` are the first standard basis vectors; column
    ``i + n/2`` is ``-(1 + eps)`` times column ``i``.  Noiseless, with the
    all -1 vector as the unique global minimum.
    """
    n = _check_n(n)
    if n % 2:
        raise InvalidArgumentError(f"adversarial construction needs even n, got {n}")
    if not 0 < eps < 1:
        raise InvalidArgumentError(f"eps must lie in (0, 1), got {eps}")
    half = n // 2
    h = np.zeros((n, n))
    h[np.arange(half), np.arange(half)] = 1.0
    h[:, half:] = -(1.0 + eps) * h[:, :half]
    x_true = SpinState.all_minus(n)
    return ProblemInstance(
        n=n, b_matrix=h, y=h @ x_true.vector, snr=1.0, x_true=x_true,
        v=np.zeros(n), kind="adversarial", meta={"eps": float(eps)},
    )


def load_custom_instance(b_matrix, y, x_true: SpinState | None = None, v=None) -> ProblemInstance:
    """Wrap a user-supplied matrix and observation.

    When ``v`` is omitted it is recovered as ``y - B x_true`` so the
    noise-based conditions of the oracle still apply.
    """
    b = np.atleast_2d(np.asarray(b_matrix, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise InvalidArgumentError(f"b_matrix must be square, got shape {b.shape}")
    n = b.shape[0]
    if y.shape != (n,):
        raise InvalidArgumentError(f"y must have length {n}, got shape {y.shape}")
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(y))):
        raise InvalidArgumentError("b_matrix and y must be finite")
    if x_true is None:
        x_true = SpinState.all_minus(n)
    elif x_true.n != n:
        raise InvalidArgumentError("x_true dimension does not match b_matrix")
    if v is None:
        v = y - b @ x_true.vector
    else:
        v = np.asarray(v, dtype=float)
        if v.shape != (n,):
            raise InvalidArgumentError(f"v must have length {n}")
    return ProblemInstance(n=n, b_matrix=b, y=y, snr=1.0, x_true=x_true, v=v, kind="custom")


def _as_state(inst: ProblemInstance, s) -> SpinState:
    if not isinstance(s, SpinState):
        s = SpinState.from_vector(s)
    if s.n != inst.n:
        raise InvalidArgumentError(f"state has dimension {s.n}, instance has {inst.n}")
    return s


def objective(inst: ProblemInstance, s) -> float:
    """``||y - B s||^2`` for a SpinState (or a +-1 vector)."""
    s = _as_state(inst, s)
    r = inst.y - inst.b_matrix @ s.vector
    return float(r @ r)


def build_instance(kind: str, n: int, *, snr: float = 1.0, seed: int = 0,
                   with_noise: bool = True, eps: float = 0.5) -> ProblemInstance:
    """Dispatch on ``kind``; used by the CLI and experiment drivers."""
    if kind == "gaussian":
        return gen_gaussian_instance(n, snr, seed, with_noise)
    if kind == "orthogonal":
        return gen_orthogonal_instance(n, snr, seed, with_noise)
    if kind == "unit_sphere":
        return gen_unit_sphere_instance(n, seed)
    if kind == "adversarial":
        return gen_adversarial_instance(n, eps)
    raise InvalidArgumentError(f"cannot generate instances of kind {kind!r}")
