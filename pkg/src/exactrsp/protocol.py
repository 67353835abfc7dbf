"""Two-party simulation of exact remote state preparation.

The preparer knows the target ``beta`` and the resource coefficients; the
receiver knows only ``d`` and whatever arrives over the classical channel.
Both act on a :class:`SharedPair`, each restricted to its own subsystem
(``A`` for the preparer, ``B`` for the receiver).

Message schedule, all preparer to receiver:

====  =====================  ==========  =========================
step  payload                alphabet    cost (bits)
====  =====================  ==========  =========================
1     stage-one outcome      d           log2 d
1     stage-two outcome      d - 1       log2 (d - 1)
2     disentangle outcome    d           log2 d
3     grid code              variant     ``discretizer.bit_cost``
====  =====================  ==========  =========================
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from . import discretizer as dz
from .disentangler import PhasedTarget, build_projectors, phase_correction, receiver_factor
from .statekit import (
    ATOL,
    BipartiteState,
    PureState,
    SchmidtVector,
    completion_unitary,
    fidelity,
    permutation_matrix,
)
from .transformer import (
    DegenerateTransformation,
    build_stage_one,
    build_stage_two,
    cyclic_correction,
    intermediate_schmidt,
    swap_correction,
)

PREPARER_TO_RECEIVER = "preparer->receiver"
# Target components below this magnitude are treated as exactly zero.
_ZERO_MAG = 1e-14


class InsufficientResolution(ValueError):
    """The grid is too coarse for the resource: psi_0^2 fell below 1 - r^2 (d - 1)."""


class ZeroProbabilityBranch(RuntimeError):
    pass


Chooser = Callable[[np.ndarray], int]


@dataclass(frozen=True)
class Message:
    step: int
    payload: dict
    alphabet_size: int | None
    bit_cost: float
    direction: str = PREPARER_TO_RECEIVER

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "direction": self.direction,
            "payload": self.payload,
            "alphabet_size": self.alphabet_size,
            "bit_cost": self.bit_cost,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Message":
        return cls(
            step=int(data["step"]),
            payload=data["payload"],
            alphabet_size=data["alphabet_size"],
            bit_cost=float(data["bit_cost"]),
            direction=data.get("direction", PREPARER_TO_RECEIVER),
        )


@dataclass
class Transcript:
    entries: list[Message] = field(default_factory=list)

    def append(self, msg: Message) -> None:
        self.entries.append(msg)

    @property
    def total_bits(self) -> float:
        return float(sum(m.bit_cost for m in self.entries))

    def bits_for_step(self, step: int) -> float:
        return float(sum(m.bit_cost for m in self.entries if m.step == step))

    def to_dict(self) -> dict:
        return {"entries": [m.to_dict() for m in self.entries], "total_bits": self.total_bits}

    @classmethod
    def from_dict(cls, data: dict) -> "Transcript":
        return cls([Message.from_dict(e) for e in data["entries"]])


def _complex_pairs(v: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in v]


def _from_pairs(pairs) -> np.ndarray:
    return np.array([complex(re, im) for re, im in pairs])


@dataclass
class RunResult:
    prepared: PureState
    target: PureState
    fidelity_achieved: float
    transcript: Transcript
    outcome_path: list[int]
    rng_seed: int | None
    variant: str = "plain"
    probability: float = 1.0

    def to_dict(self) -> dict:
        return {
            "d": self.target.d,
            "variant": self.variant,
            "prepared": _complex_pairs(self.prepared.amps),
            "target": _complex_pairs(self.target.amps),
            "fidelity_achieved": self.fidelity_achieved,
            "transcript": self.transcript.to_dict(),
            "outcome_path": list(self.outcome_path),
            "probability": self.probability,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunResult":
        return cls(
            prepared=PureState(_from_pairs(data["prepared"])),
            target=PureState(_from_pairs(data["target"])),
            fidelity_achieved=float(data["fidelity_achieved"]),
            transcript=Transcript.from_dict(data["transcript"]),
            outcome_path=[int(k) for k in data["outcome_path"]],
            rng_seed=data["rng_seed"],
            variant=data["variant"],
            probability=float(data["probability"]),
        )


class SharedPair:
    """The physical joint state. Parties touch it only through their own side."""

    def __init__(self, state: BipartiteState):
        self._joint = np.array(state.joint, dtype=complex)

    @property
    def state(self) -> BipartiteState:
        return BipartiteState(self._joint)

    def apply(self, side: str, op: np.ndarray) -> None:
        self._joint = _act(self._joint, op, side)

    def permute(self, side: str, perm) -> None:
        self.apply(side, permutation_matrix(perm))

    def measure(self, side: str, ops: Sequence[np.ndarray], choose: Chooser) -> tuple[int, float]:
        """Born-rule measurement; returns the index into ``ops`` and its probability."""
        branches = [_act(self._joint, op, side) for op in ops]
        probs = np.array([np.vdot(b, b).real for b in branches])
        k = choose(probs)
        prob = float(probs[k])
        if prob <= 1e-300:
            raise ZeroProbabilityBranch(f"outcome {k} has zero probability")
        self._joint = branches[k] / math.sqrt(prob)
        return k, prob


def _act(joint: np.ndarray, op: np.ndarray, side: str) -> np.ndarray:
    if side == "A":
        return op @ joint
    if side == "B":
        return joint @ op.T
    raise ValueError(f"side must be 'A' or 'B', got {side!r}")


def rng_chooser(rng: np.random.Generator) -> Chooser:
    def choose(probs: np.ndarray) -> int:
        p = np.clip(probs, 0.0, None)
        return int(rng.choice(len(p), p=p / p.sum()))

    return choose


def forced_chooser(outcomes: Sequence[int]) -> Chooser:
    it = iter(outcomes)
    return lambda probs: next(it)


def derive_psi(beta, code: dz.GridCode, r: float | None = None) -> PhasedTarget:
    """Local state ``psi = U^dag beta`` that the grid unitary maps onto ``beta``.

    The global phase is chosen so that ``psi_0`` is real and nonnegative. If
    ``r`` is given, raise :class:`InsufficientResolution` unless
    ``psi_0^2 >= 1 - r^2 (d - 1)``.
    """
    b = np.asarray(beta, dtype=complex)
    _, approx = dz.decode(code)
    u = completion_unitary(approx)
    psi = u.conj().T @ b
    if abs(psi[0]) > 0:
        psi = psi * (abs(psi[0]) / psi[0])
    mags = np.abs(psi)
    mags[1:][mags[1:] < _ZERO_MAG] = 0.0
    mags /= np.linalg.norm(mags)
    if r is not None:
        need = 1 - r * r * (b.shape[0] - 1)
        if mags[0] ** 2 < need - ATOL:
            raise InsufficientResolution(
                f"psi_0^2 = {mags[0] ** 2:.12g} is below the required {need:.12g}; "
                f"the grid D = {code.D} is too coarse for r = {r:.6g}"
            )
    return PhasedTarget(SchmidtVector(mags, allow_zero=True), np.angle(psi))


def _intermediate(mags: np.ndarray) -> SchmidtVector:
    d = mags.shape[0]
    tail = float(np.sum(mags[1:] ** 2))
    if tail == 0.0:
        # Target already sits on |0>: the stage-one operators degenerate to a
        # computational-basis measurement and stage two to a uniform relabeling.
        return SchmidtVector(np.eye(d)[0], allow_zero=True)
    return intermediate_schmidt(float(mags[0] ** 2), d, tail=tail)


@dataclass(frozen=True, eq=False)
class PreparerPlan:
    """Outcome-independent classical preprocessing done by the preparer."""

    code: dz.GridCode
    target: PhasedTarget
    stage_one: tuple[np.ndarray, ...]
    stage_two: tuple[np.ndarray, ...]
    projectors: tuple[np.ndarray, ...]

    @classmethod
    def build(cls, alpha: SchmidtVector, beta: PureState, variant: str) -> "PreparerPlan":
        d = alpha.d
        work = beta if variant == "plain" else dz.canonical_phase(beta.amps)
        D = dz.choose_D(d, alpha.r, variant)
        code = dz.encode(work.amps, D, variant)
        target = derive_psi(work.amps, code, alpha.r)
        mags = target.mags.coeffs
        phi = _intermediate(mags)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateTransformation)
            stage_one = build_stage_one(alpha, phi)
        stage_two = build_stage_two(mags, phi)
        projectors = build_projectors(target.phases, d)
        return cls(code, target, stage_one.ops, stage_two.ops, tuple(projectors))


class Preparer:
    def __init__(self, plan: PreparerPlan, pair: SharedPair, choose: Chooser):
        self.plan = plan
        self.pair = pair
        self.choose = choose
        self.outcomes: list[int] = []
        self.probability = 1.0

    def _measure(self, ops) -> int:
        k, p = self.pair.measure("A", ops, self.choose)
        self.probability *= p
        return k

    def messages(self) -> Iterator[Message]:
        plan = self.plan
        d = plan.target.d

        k1 = self._measure(plan.stage_one)
        self.pair.permute("A", swap_correction(k1, d))
        self.outcomes.append(k1)
        yield Message(1, {"kind": "stage_one_outcome", "value": k1}, d, math.log2(d))

        k2 = self._measure(plan.stage_two) + 1
        self.pair.permute("A", cyclic_correction(k2, d))
        self.outcomes.append(k2)
        yield Message(1, {"kind": "stage_two_outcome", "value": k2}, d - 1, math.log2(d - 1))

        k3 = self._measure(plan.projectors)
        self.outcomes.append(k3)
        yield Message(2, {"kind": "disentangle_outcome", "value": k3}, d, math.log2(d))

        code = plan.code
        payload = {"kind": "grid_code", "code": code.to_dict()}
        if code.variant == "signed_varlen":
            payload["bits"] = dz.pack_signed_varlen(code)
            alphabet = None
        else:
            alphabet = code.D ** len(code.transmitted_indices())
        yield Message(3, payload, alphabet, dz.bit_cost(code))


class Receiver:
    """Acts on subsystem B using nothing but ``d`` and the received messages."""

    def __init__(self, d: int, pair: SharedPair):
        self.d = d
        self.pair = pair
        self.prepared: PureState | None = None

    def receive(self, msg: Message) -> None:
        kind = msg.payload["kind"]
        if kind == "stage_one_outcome":
            self.pair.permute("B", swap_correction(msg.payload["value"], self.d))
        elif kind == "stage_two_outcome":
            self.pair.permute("B", cyclic_correction(msg.payload["value"], self.d))
        elif kind == "disentangle_outcome":
            self.pair.apply("B", phase_correction(msg.payload["value"], self.d))
        elif kind == "grid_code":
            code = self._read_code(msg.payload)
            _, approx = dz.decode(code)
            self.pair.apply("B", completion_unitary(approx))
            self.prepared = receiver_factor(self.pair.state)
        else:
            raise ValueError(f"unexpected message kind {kind!r}")

    def _read_code(self, payload: dict) -> dz.GridCode:
        code = dz.GridCode.from_dict(payload["code"])
        if "bits" in payload:
            code = dz.unpack_signed_varlen(payload["bits"], self.d, code.D)
        return code


def _as_alpha(alpha) -> SchmidtVector:
    return alpha if isinstance(alpha, SchmidtVector) else SchmidtVector(np.asarray(alpha, dtype=float))


def _as_beta(beta) -> PureState:
    return beta if isinstance(beta, PureState) else PureState(np.asarray(beta, dtype=complex))


def _check_dims(alpha: SchmidtVector, beta: PureState) -> None:
    if alpha.d != beta.d:
        raise ValueError(f"resource has d = {alpha.d} but target has d = {beta.d}")


def _execute(alpha: SchmidtVector, beta: PureState, plan: PreparerPlan, choose: Chooser, seed=None) -> RunResult:
    pair = SharedPair(BipartiteState.from_schmidt(alpha))
    preparer = Preparer(plan, pair, choose)
    receiver = Receiver(alpha.d, pair)
    transcript = Transcript()
    for msg in preparer.messages():
        transcript.append(msg)
        receiver.receive(msg)
    return RunResult(
        prepared=receiver.prepared,
        target=beta,
        fidelity_achieved=fidelity(beta, receiver.prepared),
        transcript=transcript,
        outcome_path=preparer.outcomes,
        rng_seed=seed,
        variant=plan.code.variant,
        probability=preparer.probability,
    )


def run(alpha, beta, variant: str = "plain", seed: int = 0) -> RunResult:
    """One execution with measurement outcomes drawn from ``default_rng(seed)``.

    Raises :class:`~exactrsp.statekit.SchmidtNumberError` if any resource
    coefficient is zero.
    """
    alpha = _as_alpha(alpha)
    beta = _as_beta(beta)
    dz._check_variant(variant)
    _check_dims(alpha, beta)
    plan = PreparerPlan.build(alpha, beta, variant)
    return _execute(alpha, beta, plan, rng_chooser(np.random.default_rng(seed)), seed)


def run_all_branches(alpha, beta, variant: str = "plain") -> list[RunResult]:
    """Every measurement-outcome triple with nonzero probability."""
    alpha = _as_alpha(alpha)
    beta = _as_beta(beta)
    dz._check_variant(variant)
    _check_dims(alpha, beta)
    d = alpha.d
    if d > 8:
        raise ValueError(f"exhaustive enumeration is limited to d <= 8, got {d}")
    plan = PreparerPlan.build(alpha, beta, variant)
    results = []
    for k1, k2, k3 in itertools.product(range(d), range(d - 1), range(d)):
        try:
            results.append(_execute(alpha, beta, plan, forced_chooser((k1, k2, k3))))
        except ZeroProbabilityBranch:
            continue
    return results


def sample_runs(alpha, beta, n: int, variant: str = "plain", seed: int = 0) -> Iterator[RunResult]:
    """``n`` independent executions sharing one preprocessing plan and one RNG stream."""
    alpha = _as_alpha(alpha)
    beta = _as_beta(beta)
    dz._check_variant(variant)
    _check_dims(alpha, beta)
    plan = PreparerPlan.build(alpha, beta, variant)
    choose = rng_chooser(np.random.default_rng(seed))
    for _ in range(n):
        yield _execute(alpha, beta, plan, choose, seed)


def ledger_total(d: int, step3_bits: float) -> float:
    return math.log2(d * d - d) + math.log2(d) + step3_bits
