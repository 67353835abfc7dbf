"""Pure states, Schmidt-diagonal bipartite states and the numerics shared by
every stage of the protocol.

States are thin immutable wrappers around numpy arrays. Functions accept
either the wrapper or a plain array so that batch code can skip construction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Absolute tolerance for algebraic identities and type invariants.
ATOL = 1e-12
# Tolerance for quantities that went through a composed pipeline.
PIPELINE_ATOL = 1e-10


class SchmidtNumberError(ValueError):
    """Raised when a resource state does not have maximal Schmidt number."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def _vec(s) -> np.ndarray:
    if isinstance(s, (PureState, UnnormalizedState)):
        return s.amps
    return np.asarray(s, dtype=complex)


@dataclass(frozen=True, eq=False)
class UnnormalizedState:
    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.ndim != 1:
            raise ValueError("state amplitudes must be a 1-d array")
        if not np.all(np.isfinite(amps)):
            raise ValueError("state amplitudes must be finite")
        object.__setattr__(self, "amps", _frozen(amps))

    @property
    def d(self) -> int:
        return self.amps.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit-norm vector of ``d >= 2`` complex amplitudes."""

    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.ndim != 1:
            raise ValueError("state amplitudes must be a 1-d array")
        if amps.shape[0] < 2:
            raise ValueError(f"dimension must be at least 2, got {amps.shape[0]}")
        norm_sq = float(np.vdot(amps, amps).real)
        if abs(norm_sq - 1.0) > ATOL:
            raise ValueError(f"state is not normalized (|psi|^2 = {norm_sq!r})")
        object.__setattr__(self, "amps", _frozen(amps))

    @property
    def d(self) -> int:
        return self.amps.shape[0]

    @classmethod
    def basis(cls, k: int, d: int) -> "PureState":
        amps = np.zeros(d, dtype=complex)
        amps[k] = 1.0
        return cls(amps)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amps, dtype=dtype)


@dataclass(frozen=True, eq=False)
class SchmidtVector:
    """Real Schmidt coefficients with unit sum of squares.

    By default every coefficient must be strictly positive (maximal Schmidt
    number). ``allow_zero=True`` relaxes this for magnitude vectors of states
    that are not resources, e.g. the magnitudes of the intermediate target.
    """

    coeffs: np.ndarray
    allow_zero: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or c.shape[0] < 2:
            raise ValueError("Schmidt vector needs at least two coefficients")
        if not np.all(np.isfinite(c)):
            raise ValueError("Schmidt coefficients must be finite")
        if np.any(c < 0):
            raise ValueError("Schmidt coefficients must be nonnegative")
        if not self.allow_zero and np.any(c == 0):
            zeros = [int(i) for i in np.flatnonzero(c == 0)]
            raise SchmidtNumberError(
                f"Schmidt coefficients at indices {zeros} are zero; exact remote state "
                "preparation requires a resource with maximal Schmidt number (all d "
                "coefficients nonzero)"
            )
        total = float(np.sum(c * c))
        if abs(total - 1.0) > ATOL:
            raise ValueError(f"Schmidt coefficients are not normalized (sum of squares {total!r})")
        object.__setattr__(self, "coeffs", _frozen(c))

    @property
    def d(self) -> int:
        return self.coeffs.shape[0]

    @property
    def r(self) -> float:
        """Smallest coefficient."""
        return float(self.coeffs.min())

    @classmethod
    def uniform(cls, d: int) -> "SchmidtVector":
        return cls(np.full(d, 1.0 / np.sqrt(d)))


@dataclass(frozen=True, eq=False)
class BipartiteState:
    """Joint pure state of two d-level systems.

    ``joint[a, b]`` is the amplitude of ``|a>_A |b>_B``. Subsystem A belongs
    to the preparing party, B to the receiving party.
    """

    joint: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.joint, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("joint amplitude matrix must be square")
        norm_sq = float(np.sum(np.abs(m) ** 2))
        if abs(norm_sq - 1.0) > ATOL:
            raise ValueError(f"bipartite state is not normalized (norm^2 = {norm_sq!r})")
        object.__setattr__(self, "joint", _frozen(m))

    @property
    def d(self) -> int:
        return self.joint.shape[0]

    @classmethod
    def from_schmidt(cls, coeffs) -> "BipartiteState":
        c = coeffs.coeffs if isinstance(coeffs, SchmidtVector) else np.asarray(coeffs)
        return cls(np.diag(c.astype(complex)))

    def apply(self, op: np.ndarray, side: str) -> np.ndarray:
        """Return the (unnormalized) joint matrix after ``op`` acts on ``side``."""
        if side == "A":
            return op @ self.joint
        if side == "B":
            return self.joint @ op.T
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")

    def permute(self, perm, side: str = "both") -> "BipartiteState":
        """Relabel basis states ``|l> -> |perm[l]>`` on one or both subsystems."""
        p = permutation_matrix(perm)
        m = self.joint
        if side in ("A", "both"):
            m = p @ m
        if side in ("B", "both"):
            m = m @ p.T
        if side not in ("A", "B", "both"):
            raise ValueError(f"unknown side {side!r}")
        return BipartiteState(m)

    def schmidt_coefficients(self) -> np.ndarray:
        return np.linalg.svd(self.joint, compute_uv=False)

    def off_diagonal_norm(self) -> float:
        m = self.joint
        return float(np.linalg.norm(m - np.diag(np.diag(m))))


def permutation_matrix(perm) -> np.ndarray:
    perm = np.asarray(perm, dtype=int)
    d = perm.shape[0]
    if sorted(perm.tolist()) != list(range(d)):
        raise ValueError(f"{perm.tolist()} is not a permutation of 0..{d - 1}")
    p = np.zeros((d, d))
    p[perm, np.arange(d)] = 1.0
    return p


def fidelity(a, b) -> float:
    """Overlap ``|<a|b>|^2``."""
    va, vb = _vec(a), _vec(b)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape[0]} vs {vb.shape[0]}")
    return float(min(1.0, abs(np.vdot(va, vb)) ** 2))


def distance(a, b) -> float:
    va, vb = _vec(a), _vec(b)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape[0]} vs {vb.shape[0]}")
    return float(np.linalg.norm(va - vb))


def normalize(s) -> PureState:
    v = _vec(s)
    n = float(np.linalg.norm(v))
    if n <= ATOL:
        raise ValueError("cannot normalize a zero-norm vector")
    return PureState(v / n)


def entanglement_entropy(s) -> float:
    """Entropy of entanglement in ebits, ``-sum c^2 log2 c^2``."""
    c = s.coeffs if isinstance(s, SchmidtVector) else np.asarray(s, dtype=float)
    p = c * c
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def haar_vectors(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` Haar-random unit vectors in C^d as rows of an ``(n, d)`` array."""
    z = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sample_haar_state(d: int, seed: int) -> PureState:
    if d < 2:
        raise ValueError(f"dimension must be at least 2, got {d}")
    rng = np.random.default_rng(seed)
    return PureState(haar_vectors(d, 1, rng)[0])


def random_schmidt(d: int, rng: np.random.Generator) -> SchmidtVector:
    """Magnitudes of a Haar-random state, used as a generic resource."""
    return SchmidtVector(np.abs(haar_vectors(d, 1, rng)[0]))


def completion_unitary(target) -> np.ndarray:
    """Canonical unitary ``U`` with ``U|0> = target``.

    ``U = -e^{i theta} H R`` where ``theta = arg target[0]``, ``H`` is the
    Householder reflection ``I - 2 v v^dag / |v|^2`` with ``v = |0> + w`` and
    ``w = e^{-i theta} target``, and ``R = diag(1, -1, ..., -1)``. Since
    ``w[0] >= 0`` the vector ``v`` never vanishes, ``U`` is the identity at
    ``target = |0>`` and is continuous wherever ``target[0] != 0``.
    """
    t = _vec(target)
    d = t.shape[0]
    theta = float(np.angle(t[0])) if abs(t[0]) > 0 else 0.0
    phase = np.exp(1j * theta)
    w = t / phase
    v = w.copy()
    v[0] += 1.0
    h = np.eye(d, dtype=complex) - 2.0 * np.outer(v, v.conj()) / np.vdot(v, v).real
    r = -np.ones(d)
    r[0] = 1.0
    return -phase * h * r[np.newaxis, :]
