"""Classical description of a target state on a fixed grid.

Three coding variants are supported:

``plain``
    Real and imaginary parts of every amplitude are located in one of ``D``
    equal subintervals of ``[-1, 1]``; ``2d`` indices are sent.
``real_beta0``
    The global phase is fixed so that the first amplitude is real and
    nonnegative, so its imaginary part is not sent; ``2d - 1`` indices.
``signed_varlen``
    Also uses a real first amplitude. Magnitudes are coded on ``D'``
    subintervals of ``[0, 1]``, signs are sent as separate bits and every
    index is sent as a length field followed by that many binary digits.

Wire layout for ``signed_varlen`` (MSB first, no header; the receiver knows
``d`` and ``D'``). The transmitted numbers are, in order, ``Re b_0``, then
``Re b_k, Im b_k`` for ``k = 1 .. d-1``. Each number is written as::

    sign (1 bit, 1 = negative) | length L (W bits) | n - 2 in L bits

where ``L = digit_count(n)`` and ``W = bit_length(digit_count(D'))`` so that
every length ``0 .. digit_count(D')`` is representable. ``n = 1`` has no
digits. See :func:`digit_count` for the per-index length.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .statekit import ATOL, PureState, UnnormalizedState, normalize

VARIANTS = ("plain", "real_beta0", "signed_varlen")

# Slack used when taking ceilings of formulas that are exact integers in exact arithmetic.
_CEIL_SLACK = 1e-9


class PhaseConventionError(ValueError):
    """The first amplitude is not real and nonnegative where a variant needs it."""


def _check_variant(variant: str) -> None:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def subinterval_index(x, D: int):
    """Index in ``1..D`` of the subinterval of ``[-1, 1]`` containing ``x``.

    Subintervals are half-open except the last, which is closed. Works
    elementwise on arrays.
    """
    if D < 1:
        raise ValueError(f"D must be positive, got {D}")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < -1 - ATOL) or np.any(arr > 1 + ATOL):
        raise ValueError("x must lie in [-1, 1]")
    arr = np.clip(arr, -1.0, 1.0)
    n = np.minimum(D, np.floor(D * (arr + 1) / 2).astype(int) + 1)
    return int(n) if n.ndim == 0 else n


def grid_value(n, D: int):
    """Midpoint of subinterval ``n`` of ``[-1, 1]``."""
    return (2 * np.asarray(n) - 1) / D - 1


def magnitude_index(x, Dprime: int):
    """Index in ``1..D'`` of ``|x|`` on ``D'`` subintervals of ``[0, 1]``."""
    arr = np.abs(np.asarray(x, dtype=float))
    if np.any(arr > 1 + ATOL):
        raise ValueError("|x| must not exceed 1")
    arr = np.minimum(arr, 1.0)
    n = np.minimum(Dprime, np.floor(Dprime * arr).astype(int) + 1)
    return int(n) if n.ndim == 0 else n


def magnitude_value(n, Dprime: int):
    return (2 * np.asarray(n) - 1) / (2 * Dprime)


def digit_count(n: int) -> int:
    """Number of binary digits charged for index ``n``.

    ``ceil(log2(n - 1))`` for ``n >= 3``; 0 digits for ``n = 1`` and 1 digit
    for ``n = 2``, where the logarithm is undefined or zero.
    """
    if n < 1:
        raise ValueError(f"index must be positive, got {n}")
    if n == 1:
        return 0
    if n == 2:
        return 1
    return (n - 2).bit_length()


def canonical_phase(beta) -> PureState:
    """Rotate the global phase so the first nonzero amplitude is real and positive."""
    amps = np.asarray(beta, dtype=complex)
    nz = np.flatnonzero(np.abs(amps) > 0)
    if nz.size == 0:
        raise ValueError("zero vector has no phase")
    lead = amps[nz[0]]
    rotated = amps * (abs(lead) / lead)
    rotated[nz[0]] = abs(lead)
    return PureState(rotated)


@dataclass(frozen=True)
class GridCode:
    """Classical description of an approximate target state.

    ``D`` is the subinterval count of whichever grid the variant uses (``D'``
    for ``signed_varlen``). For ``real_beta0`` and ``signed_varlen`` the
    entry ``nc[0]`` is a placeholder and ``Im b_0`` is taken to be zero.
    """

    D: int
    nr: tuple[int, ...]
    nc: tuple[int, ...]
    variant: str = "plain"
    signs: tuple[int, ...] | None = field(default=None)

    def __post_init__(self):
        _check_variant(self.variant)
        if self.D < 1:
            raise ValueError(f"D must be positive, got {self.D}")
        nr = tuple(int(v) for v in self.nr)
        nc = tuple(int(v) for v in self.nc)
        if len(nr) != len(nc) or len(nr) < 2:
            raise ValueError("nr and nc must have equal length d >= 2")
        if any(not 1 <= v <= self.D for v in nr + nc):
            raise ValueError(f"indices must lie in [1, {self.D}]")
        object.__setattr__(self, "nr", nr)
        object.__setattr__(self, "nc", nc)
        if self.variant == "signed_varlen":
            if self.signs is None or len(self.signs) != 2 * len(nr) - 1:
                raise ValueError("signed_varlen needs 2d - 1 sign bits")
            signs = tuple(int(s) for s in self.signs)
            if any(s not in (0, 1) for s in signs):
                raise ValueError("sign bits must be 0 or 1")
            object.__setattr__(self, "signs", signs)
        elif self.signs is not None:
            raise ValueError(f"variant {self.variant} carries no sign bits")

    @property
    def d(self) -> int:
        return len(self.nr)

    @property
    def Dprime(self) -> int | None:
        return self.D if self.variant == "signed_varlen" else None

    def transmitted_indices(self) -> list[int]:
        """Indices that actually go over the channel, in wire order."""
        if self.variant == "plain":
            return [v for pair in zip(self.nr, self.nc) for v in pair]
        return [self.nr[0]] + [v for pair in zip(self.nr[1:], self.nc[1:]) for v in pair]

    def to_dict(self) -> dict:
        out = {"variant": self.variant, "D": self.D, "nr": list(self.nr), "nc": list(self.nc)}
        if self.signs is not None:
            out["signs"] = list(self.signs)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "GridCode":
        signs = data.get("signs")
        return cls(
            D=int(data["D"]),
            nr=tuple(data["nr"]),
            nc=tuple(data["nc"]),
            variant=data.get("variant", "plain"),
            signs=None if signs is None else tuple(signs),
        )


def encode(beta, D: int, variant: str = "plain") -> GridCode:
    _check_variant(variant)
    amps = np.asarray(beta, dtype=complex)
    d = amps.shape[0]
    if variant != "plain":
        if abs(amps[0].imag) > ATOL or amps[0].real < -ATOL:
            raise PhaseConventionError(
                f"variant {variant} needs a real, nonnegative first amplitude; "
                "rotate with canonical_phase() first"
            )
    if variant == "signed_varlen":
        nr = magnitude_index(amps.real, D)
        nc = magnitude_index(amps.imag, D)
        nc[0] = 1
        numbers = [amps[0].real] + [v for k in range(1, d) for v in (amps[k].real, amps[k].imag)]
        signs = tuple(int(x < 0) for x in numbers)
        return GridCode(D, tuple(nr), tuple(nc), variant, signs)
    nr = subinterval_index(amps.real, D)
    nc = subinterval_index(amps.imag, D)
    if variant == "real_beta0":
        nc[0] = subinterval_index(0.0, D)
    return GridCode(D, tuple(nr), tuple(nc), variant)


def decode(code: GridCode) -> tuple[UnnormalizedState, PureState]:
    """Grid midpoints as an unnormalized state, plus its normalization."""
    nr = np.asarray(code.nr)
    nc = np.asarray(code.nc)
    if code.variant == "signed_varlen":
        re = magnitude_value(nr, code.D)
        im = magnitude_value(nc, code.D)
        im[0] = 0.0
        signs = np.asarray(code.signs)
        re_sign = np.concatenate(([signs[0]], signs[1::2]))
        im_sign = np.concatenate(([0], signs[2::2]))
        re = np.where(re_sign == 1, -re, re)
        im = np.where(im_sign == 1, -im, im)
    else:
        re = grid_value(nr, code.D)
        im = grid_value(nc, code.D)
        if code.variant == "real_beta0":
            im[0] = 0.0
    approx = UnnormalizedState(re + 1j * im)
    if approx.norm <= ATOL:
        raise ValueError("grid code reconstructs the zero vector")
    return approx, normalize(approx)


def _ceil(x: float) -> int:
    return max(1, math.ceil(x - _CEIL_SLACK))


def choose_D(d: int, r: float, variant: str = "plain") -> int:
    """Smallest grid size whose fidelity guarantee reaches ``1 - r^2 (d - 1)``."""
    _check_variant(variant)
    if d < 2:
        raise ValueError(f"dimension must be at least 2, got {d}")
    if not 0 < r <= 1 / math.sqrt(d) + ATOL:
        raise ValueError(f"r must lie in (0, 1/sqrt(d)] = (0, {1 / math.sqrt(d):.6g}], got {r}")
    eps_sq = r * r * (d - 1)
    if variant == "plain":
        return _ceil(math.sqrt(2 * d / eps_sq))
    if variant == "real_beta0":
        return _ceil(math.sqrt((2 * d - 1) / eps_sq))
    return _ceil(math.sqrt((2 * d - 1) / (4 * eps_sq)))


def fidelity_guarantee(d: int, D: int, variant: str = "plain") -> float:
    """Worst-case fidelity of the normalized decoded state."""
    _check_variant(variant)
    if variant == "plain":
        return 1 - 2 * d / D**2
    if variant == "real_beta0":
        return 1 - (2 * d - 1) / D**2
    return 1 - (2 * d - 1) / (4 * D**2)


def _length_field_bits(Dprime: int) -> float:
    # log2 ceil(log2 D'), taken as 0 when ceil(log2 D') <= 1.
    c = math.ceil(math.log2(Dprime)) if Dprime > 1 else 0
    return math.log2(c) if c > 1 else 0.0


def bit_cost(code: GridCode) -> float:
    """Classical communication, in bits, needed to send ``code``."""
    d = code.d
    if code.variant == "plain":
        return 2 * d * math.log2(code.D)
    if code.variant == "real_beta0":
        return (2 * d - 1) * math.log2(code.D)
    digits = sum(digit_count(n) for n in code.transmitted_indices())
    return digits + (2 * d - 1) * _length_field_bits(code.D) + (2 * d - 1)


def varlen_cost_bound(d: int, r: float) -> float:
    """Closed-form upper bound on the ``signed_varlen`` cost for resource minimum ``r``."""
    Dprime = choose_D(d, r, "signed_varlen")
    return (2 * d - 1) * (-math.log2(r * math.sqrt(d - 1)) + _length_field_bits(Dprime) + 2)


def length_field_width(Dprime: int) -> int:
    return digit_count(Dprime).bit_length()


def pack_signed_varlen(code: GridCode) -> str:
    """Serialize a ``signed_varlen`` code to a string of ``'0'``/``'1'`` characters."""
    if code.variant != "signed_varlen":
        raise ValueError("only signed_varlen codes have a wire format")
    width = length_field_width(code.D)
    out = []
    for sign, n in zip(code.signs, code.transmitted_indices()):
        length = digit_count(n)
        out.append(str(sign))
        if width:
            out.append(format(length, f"0{width}b"))
        if length:
            out.append(format(n - 2, f"0{length}b"))
    return "".join(out)


def unpack_signed_varlen(bits: str, d: int, Dprime: int) -> GridCode:
    width = length_field_width(Dprime)
    pos = 0

    def take(k: int) -> int:
        nonlocal pos
        if pos + k > len(bits):
            raise ValueError("bitstream ended early")
        chunk = bits[pos:pos + k]
        pos += k
        return int(chunk, 2) if k else 0

    signs, indices = [], []
    for _ in range(2 * d - 1):
        signs.append(take(1))
        length = take(width)
        indices.append(1 if length == 0 else take(length) + 2)
    if pos != len(bits):
        raise ValueError(f"{len(bits) - pos} trailing bits")
    nr = [indices[0]] + indices[1::2]
    nc = [1] + indices[2::2]
    return GridCode(Dprime, tuple(nr), tuple(nc), "signed_varlen", tuple(signs))


def approximate_batch(betas: np.ndarray, D: int, variant: str = "plain") -> np.ndarray:
    """Unnormalized grid reconstructions of the rows of ``betas``.

    Equivalent to ``decode(encode(row, D, variant))[0]`` for every row, but
    vectorized. Rows must already obey the phase convention of the variant.
    """
    _check_variant(variant)
    b = np.asarray(betas, dtype=complex)
    if variant != "plain":
        first = b[:, 0]
        if np.any(np.abs(first.imag) > ATOL) or np.any(first.real < -ATOL):
            raise PhaseConventionError(f"variant {variant} needs real, nonnegative first amplitudes")
    if variant == "signed_varlen":
        re = np.where(b.real < 0, -1, 1) * magnitude_value(magnitude_index(b.real, D), D)
        im = np.where(b.imag < 0, -1, 1) * magnitude_value(magnitude_index(b.imag, D), D)
        im[:, 0] = 0.0
        return re + 1j * im
    re = grid_value(subinterval_index(b.real, D), D)
    im = grid_value(subinterval_index(b.imag, D), D)
    if variant == "real_beta0":
        im[:, 0] = 0.0
    return re + 1j * im


def canonical_phase_batch(betas: np.ndarray) -> np.ndarray:
    """Rotate each row so its first amplitude is real and nonnegative (first entries must be nonzero)."""
    b = np.asarray(betas, dtype=complex)
    first = b[:, 0]
    if np.any(first == 0):
        raise ValueError("rows with a zero first amplitude need canonical_phase()")
    out = b * (np.abs(first) / first)[:, None]
    out[:, 0] = np.abs(first)
    return out
