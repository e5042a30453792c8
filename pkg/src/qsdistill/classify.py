"""Quasi-separability classification of two-qubit states.

A state written as a mixture of fixed pure states is quasi-separable when
some reweighting of that same mixture (all weights kept strictly positive)
is separable. Two families are recognised: Bell-diagonal states and the
non-diagonal family ``1/2 [[b+c,0,0,0],[0,a-b,d,0],[0,d,a-c,0],[0,0,0,0]]``
with its four exclusive parameter conditions.

No verdict is produced for states outside both families. In particular the
thermal-bath states are known to be quasi-separable, but no constructive
certificate exists for them, so they classify as ``UNCLASSIFIED``.
"""

from __future__ import annotations

import enum
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .states import (
    BellState,
    DensityMatrix,
    NonDiagonalParams,
    PureStateMixture,
    from_mixture,
    ket,
    ppt_is_separable,
)

__all__ = [
    "DEFAULT_TOL",
    "FamilyClass",
    "Verdict",
    "reweight",
    "bell_weights",
    "family_params",
    "classify_family",
    "canonical_mixture",
    "verdict",
    "separable_witness",
    "classify",
]

DEFAULT_TOL = 1e-9

_BELL_ORDER = (BellState.PHI_PLUS, BellState.PHI_MINUS, BellState.PSI_PLUS, BellState.PSI_MINUS)
_BELL_BASIS = np.column_stack([b.vector for b in _BELL_ORDER])


class FamilyClass(enum.Enum):
    BELL_DIAGONAL = "BellDiagonal"
    CASE1_RANK3 = "Case1Rank3"
    CASE1_RANK2 = "Case1Rank2"
    CASE2 = "Case2"
    CASE3 = "Case3"
    CASE4 = "Case4"
    UNCLASSIFIED = "Unclassified"


class Verdict(enum.Enum):
    SEPARABLE = "Separable"
    QUASI_SEPARABLE = "QuasiSeparable"
    NON_QUASI_SEPARABLE = "NonQuasiSeparable"


def reweight(mix: PureStateMixture, new_probs: Sequence[float]) -> PureStateMixture:
    """Return the "new state" of ``mix`` with weights ``new_probs``.

    The pure components are kept as they are. Every new weight must be
    strictly positive; dropping a component is not a reweighting.
    """
    new_probs = [float(p) for p in new_probs]
    if len(new_probs) != len(mix):
        raise ValidationError(f"expected {len(mix)} probabilities, got {len(new_probs)}")
    bad = [p for p in new_probs if not p > 0.0]
    if bad:
        raise ValidationError(f"reweighting must keep every weight strictly positive, got {bad}")
    return PureStateMixture(tuple(zip(new_probs, mix.vectors)))


def bell_weights(rho: DensityMatrix) -> tuple[np.ndarray, float]:
    """Diagonal of ``rho`` in the Bell basis and its largest off-diagonal modulus."""
    b = _BELL_BASIS.conj().T @ rho.m @ _BELL_BASIS
    off = np.abs(b - np.diag(np.diag(b)))
    return np.diag(b).real.copy(), float(off.max())


def family_params(rho: DensityMatrix, tol: float = DEFAULT_TOL) -> Optional[NonDiagonalParams]:
    """Recover ``(a, b, c, d)`` if ``rho`` has the non-diagonal family's shape.

    Returns ``None`` when the ``|-->`` population or any entry outside the
    middle block is nonzero, or when the coherence ``d`` is not real.
    """
    m = rho.m
    mask = np.ones((4, 4), dtype=bool)
    for i, j in ((0, 0), (1, 1), (2, 2), (1, 2), (2, 1)):
        mask[i, j] = False
    if np.abs(m[mask]).max() > tol or abs(m[1, 2].imag) > tol:
        return None
    # a is fixed to 1 by the trace; b and c follow from the middle diagonal
    a = 1.0
    b = a - 2.0 * m[1, 1].real
    c = a - 2.0 * m[2, 2].real
    d = 2.0 * m[1, 2].real
    try:
        return NonDiagonalParams(a, b, c, d)
    except ValidationError:
        return None


def _close(x: float, y: float, tol: float) -> bool:
    return abs(x - y) <= tol


def classify_family(rho: DensityMatrix, tol: float = DEFAULT_TOL) -> FamilyClass:
    """Match ``rho`` against the Bell-diagonal class and the four non-diagonal cases.

    Overlapping degenerate parameters resolve in the order
    Case4 > Case2 > Case3 > Case1.
    """
    _, off = bell_weights(rho)
    if off <= tol:
        return FamilyClass.BELL_DIAGONAL

    p = family_params(rho, tol)
    if p is None:
        return FamilyClass.UNCLASSIFIED
    a, b, c, d = p.a, p.b, p.c, p.d
    if _close(d, 0, tol) and _close(a, b, tol) and _close(b, c, tol):
        return FamilyClass.CASE4
    if _close(d, 0, tol) and _close(c, 0, tol) and _close(a, b, tol):
        return FamilyClass.CASE2
    if _close(d, 0, tol) and _close(b, 0, tol) and _close(a, c, tol):
        return FamilyClass.CASE3
    # (1-P)|++> + P|Phi+> for any P sits at b = c = 1-P, d = P;
    # d = -(a-b) is its local sigma_z image
    if _close(b, c, tol) and _close(abs(d), a - b, tol) and b > tol:
        return FamilyClass.CASE1_RANK2
    if _close(b, a / 2, tol) and _close(c, a / 2, tol):
        return FamilyClass.CASE1_RANK3
    return FamilyClass.UNCLASSIFIED


def canonical_mixture(
    rho: DensityMatrix, fc: FamilyClass, tol: float = DEFAULT_TOL
) -> PureStateMixture:
    """Pure-state decomposition of ``rho`` in the form the family is written in.

    Bell-diagonal states decompose into the Bell projectors with nonzero
    weight. Case 1 states decompose into ``|++>``, ``|Phi+>`` and
    ``|Phi->``. Cases 2 to 4 are diagonal and decompose into basis
    products. This is deliberately not an eigendecomposition: "new states"
    are defined relative to a fixed decomposition.
    """
    m = rho.m
    if fc is FamilyClass.BELL_DIAGONAL:
        w, _ = bell_weights(rho)
        comps = [(wi, b.vector) for wi, b in zip(w, _BELL_ORDER) if wi > tol]
    elif fc in (FamilyClass.CASE1_RANK2, FamilyClass.CASE1_RANK3):
        diag, coh = m[1, 1].real, m[1, 2].real
        comps = [
            (m[0, 0].real, ket("++")),
            (diag + coh, BellState.PHI_PLUS.vector),
            (diag - coh, BellState.PHI_MINUS.vector),
        ]
        comps = [(w, v) for w, v in comps if w > tol]
    elif fc in (FamilyClass.CASE2, FamilyClass.CASE3, FamilyClass.CASE4):
        comps = [(m[i, i].real, ket(lbl)) for i, lbl in enumerate(("++", "+-", "-+", "--")) if m[i, i].real > tol]
    else:
        raise ValidationError(f"no canonical decomposition for family {fc.value}")
    total = sum(w for w, _ in comps)
    return PureStateMixture(tuple((w / total, v) for w, v in comps))


_VERDICTS = {
    FamilyClass.BELL_DIAGONAL: Verdict.QUASI_SEPARABLE,
    FamilyClass.CASE1_RANK3: Verdict.QUASI_SEPARABLE,
    FamilyClass.CASE1_RANK2: Verdict.NON_QUASI_SEPARABLE,
    FamilyClass.CASE2: Verdict.SEPARABLE,
    FamilyClass.CASE3: Verdict.SEPARABLE,
    FamilyClass.CASE4: Verdict.SEPARABLE,
}


def verdict(fc: FamilyClass, rho: Optional[DensityMatrix] = None) -> Verdict:
    """Quasi-separability verdict for a family class.

    Without ``rho`` the verdict is the family's. With ``rho``, a pure Bell
    state (the one Bell-diagonal state with no separable reweighting) is
    reported as non-quasi-separable.
    """
    if fc is FamilyClass.UNCLASSIFIED:
        raise ValidationError("no verdict: the state lies outside both recognised families")
    if fc is FamilyClass.BELL_DIAGONAL and rho is not None:
        if len(canonical_mixture(rho, fc)) == 1:
            return Verdict.NON_QUASI_SEPARABLE
    return _VERDICTS[fc]


def separable_witness(rho: DensityMatrix, fc: FamilyClass) -> Optional[PureStateMixture]:
    """Separable reweighting of ``rho``'s canonical decomposition, if one exists.

    Bell-diagonal states are reweighted to equal weights, Case 1 rank-3
    states to ``1/2 |++> + 1/4 |Phi+> + 1/4 |Phi->``. For Cases 2 to 4 the
    decomposition is already separable and is returned unchanged. Case 1
    rank-2 states and pure Bell states have no witness and give ``None``.
    Every returned mixture has been checked with the PPT test.
    """
    if fc in (FamilyClass.CASE1_RANK2, FamilyClass.UNCLASSIFIED):
        return None
    mix = canonical_mixture(rho, fc)
    if fc is FamilyClass.BELL_DIAGONAL:
        if len(mix) == 1:
            return None
        witness = reweight(mix, [1.0 / len(mix)] * len(mix))
    elif fc is FamilyClass.CASE1_RANK3:
        witness = reweight(mix, [0.5, 0.25, 0.25])
    else:
        witness = mix
    if not ppt_is_separable(from_mixture(witness)):
        return None
    return witness


def classify(rho: DensityMatrix, tol: float = DEFAULT_TOL):
    """Return ``(family, verdict or None, witness or None)`` for ``rho``."""
    fc = classify_family(rho, tol)
    if fc is FamilyClass.UNCLASSIFIED:
        return fc, None, None
    return fc, verdict(fc, rho), separable_witness(rho, fc)
