"""Exact density-matrix simulation of the two-copy distillation round.

The joint 16-dimensional register is ordered ``(A_source, B_source,
A_ancilla, B_ancilla)``. Alice's qubits are the first factor of each pair.
Gates use the convention that ``|->`` is the active control value of the
CNOT, which is the only choice under which the strict ``+-`` outcome leaves
the source in a pure Bell state.

A round is:

1. a NOT (``sigma_x``) by Alice on the source or on the ancilla copy,
2. the bilateral CNOT, source qubits controlling the ancilla qubits,
3. a computational-basis measurement of both ancilla qubits,
4. post-selection on an accepted set of outcomes, and optionally
5. Alice's ``sigma_z`` on the surviving source.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Optional

import numpy as np

from .errors import DomainError, ProtocolFailure, ValidationError
from .linalg import I2, SX, SZ, TOL, as_matrix, tensor
from .states import DensityMatrix, concurrence

__all__ = [
    "Outcome",
    "NotTarget",
    "Policy",
    "ProtocolConfig",
    "Branch",
    "ProtocolResult",
    "unilateral_not",
    "sz_rotation",
    "bilateral_cnot_unitary",
    "bilateral_cnot",
    "measure_ancilla",
    "run_protocol",
    "predicted_rank2",
    "SOURCE_NOT_BOTH",
    "SOURCE_NOT_STRICT",
    "VACUUM_CONFIG",
]


class Outcome(enum.Enum):
    """Ancilla measurement result, Alice's qubit first (P is ``+``, M is ``-``)."""

    PP = "++"
    PM = "+-"
    MP = "-+"
    MM = "--"

    @property
    def index(self) -> int:
        return ("++", "+-", "-+", "--").index(self.value)


class NotTarget(enum.Enum):
    SOURCE = "source"
    ANCILLA = "ancilla"


class Policy(enum.Enum):
    STRICT_PM = "strict-pm"
    BOTH_PM_MP = "both"

    @property
    def accepted(self) -> frozenset:
        if self is Policy.STRICT_PM:
            return frozenset({Outcome.PM})
        return frozenset({Outcome.PM, Outcome.MP})


@dataclass(frozen=True)
class ProtocolConfig:
    not_target: NotTarget = NotTarget.SOURCE
    accepted: frozenset = frozenset({Outcome.PM})
    final_sz: bool = False

    def __post_init__(self):
        acc = frozenset(self.accepted)
        if not acc:
            raise ValidationError("the accepted outcome set must be nonempty")
        if not all(isinstance(o, Outcome) for o in acc):
            raise ValidationError(f"accepted outcomes must be Outcome members, got {sorted(map(str, acc))}")
        object.__setattr__(self, "accepted", acc)

    @classmethod
    def from_policy(cls, policy: Policy, not_target: NotTarget = NotTarget.SOURCE, final_sz: bool = False):
        return cls(not_target=not_target, accepted=policy.accepted, final_sz=final_sz)


# NOT on the source, keep +- only / keep +- and -+
SOURCE_NOT_STRICT = ProtocolConfig.from_policy(Policy.STRICT_PM)
SOURCE_NOT_BOTH = ProtocolConfig.from_policy(Policy.BOTH_PM_MP)
# NOT on the ancilla, keep +-, then sigma_z restores the singlet
VACUUM_CONFIG = ProtocolConfig(NotTarget.ANCILLA, frozenset({Outcome.PM}), final_sz=True)


class Branch(NamedTuple):
    """One measurement outcome: its probability and the conditional source.

    ``state`` is ``None`` when ``prob`` is below ``1e-14`` and the
    renormalised state is undefined.
    """

    prob: float
    state: Optional[DensityMatrix]


@dataclass(frozen=True, eq=False)
class ProtocolResult:
    outcome_probs: Mapping[Outcome, float]
    conditional_sources: Mapping[Outcome, Optional[DensityMatrix]]
    accepted: frozenset
    accepted_prob: float
    distilled: DensityMatrix
    distilled_concurrence: float


_X_A = tensor(SX, I2)
_Z_A = tensor(SZ, I2)


def _conjugate(op: np.ndarray, rho: DensityMatrix) -> DensityMatrix:
    return DensityMatrix(op @ rho.m @ op.conj().T)


def unilateral_not(rho: DensityMatrix) -> DensityMatrix:
    """Alice's ``sigma_x`` on her qubit."""
    return _conjugate(_X_A, rho)


def sz_rotation(rho: DensityMatrix) -> DensityMatrix:
    """Alice's ``sigma_z`` on her qubit (``|+> -> |+>``, ``|-> -> -|->``)."""
    return _conjugate(_Z_A, rho)


def bilateral_cnot_unitary(control_on_minus: bool = True) -> np.ndarray:
    """Permutation matrix for ``CNOT(A_s -> A_a) CNOT(B_s -> B_a)``.

    With ``control_on_minus=False`` the control is active on ``|+>``
    instead; that variant exists only to show the other convention fails.
    """
    u = np.zeros((16, 16), dtype=complex)
    active = 1 if control_on_minus else 0
    for i in range(16):
        a_s, b_s, a_a, b_a = (i >> 3) & 1, (i >> 2) & 1, (i >> 1) & 1, i & 1
        if a_s == active:
            a_a ^= 1
        if b_s == active:
            b_a ^= 1
        u[(a_s << 3) | (b_s << 2) | (a_a << 1) | b_a, i] = 1.0
    return u


_CNOT = bilateral_cnot_unitary(True)
_CNOT_PLUS = bilateral_cnot_unitary(False)


def _check_joint(joint) -> np.ndarray:
    joint = as_matrix(joint)
    if joint.shape != (16, 16):
        raise ValidationError(f"joint state must be 16x16, got {joint.shape}")
    return joint


def bilateral_cnot(joint, control_on_minus: bool = True) -> np.ndarray:
    joint = _check_joint(joint)
    u = _CNOT if control_on_minus else _CNOT_PLUS
    return u @ joint @ u.conj().T


def measure_ancilla(joint) -> dict[Outcome, Branch]:
    """Project the ancilla pair onto each computational outcome.

    The conditional source is the partial trace over the ancilla of the
    projected joint state, renormalised by the outcome probability.
    """
    joint = _check_joint(joint)
    blocks = joint.reshape(4, 4, 4, 4)
    out = {}
    for o in Outcome:
        k = o.index
        sub = blocks[:, k, :, k]
        prob = float(np.trace(sub).real)
        if prob < TOL.null_prob:
            out[o] = Branch(max(prob, 0.0), None)
        else:
            sub = sub / prob
            out[o] = Branch(prob, DensityMatrix(0.5 * (sub + sub.conj().T)))
    total = sum(b.prob for b in out.values())
    if abs(total - 1.0) > TOL.prob_sum * 10:
        raise ValidationError(f"outcome probabilities sum to {total:.15g}; joint state is not normalized")
    return out


def run_protocol(
    source: DensityMatrix,
    ancilla: DensityMatrix,
    cfg: ProtocolConfig = SOURCE_NOT_STRICT,
    control_on_minus: bool = True,
) -> ProtocolResult:
    """Run one distillation round and post-select on ``cfg.accepted``.

    Raises
    ------
    ProtocolFailure
        If the accepted outcomes have total probability below ``1e-14``.
    """
    if cfg.not_target is NotTarget.SOURCE:
        source = unilateral_not(source)
    else:
        ancilla = unilateral_not(ancilla)
    joint = bilateral_cnot(tensor(source.m, ancilla.m), control_on_minus)
    branches = measure_ancilla(joint)

    conditional = {}
    for o, br in branches.items():
        st = br.state
        if st is not None and cfg.final_sz and o in cfg.accepted:
            st = sz_rotation(st)
        conditional[o] = st

    accepted = sorted(cfg.accepted, key=lambda o: o.index)
    accepted_prob = sum(branches[o].prob for o in accepted)
    if accepted_prob < TOL.null_prob:
        raise ProtocolFailure(
            f"accepted outcomes {sorted(o.value for o in cfg.accepted)} have probability {accepted_prob:.3e}"
        )
    mixed = np.zeros((4, 4), dtype=complex)
    for o in accepted:
        if conditional[o] is not None:
            mixed += branches[o].prob * conditional[o].m
    distilled = DensityMatrix(mixed / accepted_prob)
    return ProtocolResult(
        outcome_probs={o: br.prob for o, br in branches.items()},
        conditional_sources=conditional,
        accepted=cfg.accepted,
        accepted_prob=accepted_prob,
        distilled=distilled,
        distilled_concurrence=concurrence(distilled),
    )


def predicted_rank2(p1: float, policy: Policy) -> tuple[float, float]:
    """Closed-form ``(success probability, distilled concurrence)`` for two rank-2 copies."""
    p1 = float(p1)
    if not 0.0 < p1 < 1.0:
        raise DomainError(f"p1 must lie in (0, 1), got {p1!r}")
    if policy is Policy.STRICT_PM:
        return p1 * p1 / 2.0, 1.0
    ps = (1.0 - p1) ** 2 + p1 * p1
    return ps, p1 * p1 / ps
