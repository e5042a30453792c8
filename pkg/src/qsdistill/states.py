"""Two-qubit density matrices, named state families and entanglement tests.

Basis order is fixed throughout the package as ``|++>, |+->, |-+>, |-->``,
with ``+`` stored at computational index 0 and ``-`` at index 1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError, NotPSDError, ValidationError
from .linalg import SY, TOL, as_matrix, check_hermitian, eigvalsh, hermitian_eigen, tensor
from .linalg import _psd_spectrum

__all__ = [
    "BASIS_LABELS",
    "ket",
    "BellState",
    "DensityMatrix",
    "PureStateMixture",
    "NonDiagonalParams",
    "projector",
    "from_mixture",
    "rank2_state",
    "nondiagonal_state",
    "concurrence",
    "x_state_concurrence",
    "partial_transpose",
    "ppt_is_separable",
    "fidelity_with_pure",
]

BASIS_LABELS = ("++", "+-", "-+", "--")

_SQ = 1.0 / np.sqrt(2.0)
_YY = tensor(SY, SY)


def ket(label: str) -> np.ndarray:
    """Computational basis vector for a label such as ``"+-"``."""
    try:
        idx = BASIS_LABELS.index(label)
    except ValueError:
        raise ValidationError(f"unknown basis label {label!r}; expected one of {BASIS_LABELS}") from None
    v = np.zeros(4, dtype=complex)
    v[idx] = 1.0
    return v


class BellState(enum.Enum):
    """The four Bell states.

    ``PHI_PLUS``/``PHI_MINUS`` live in the one-excitation sector
    ``(|+-> +/- |-+>)/sqrt 2``; ``PSI_PLUS``/``PSI_MINUS`` are
    ``(|++> +/- |-->)/sqrt 2``.
    """

    PHI_PLUS = "PhiPlus"
    PHI_MINUS = "PhiMinus"
    PSI_PLUS = "PsiPlus"
    PSI_MINUS = "PsiMinus"

    @property
    def vector(self) -> np.ndarray:
        v = np.zeros(4, dtype=complex)
        if self in (BellState.PHI_PLUS, BellState.PHI_MINUS):
            v[1] = _SQ
            v[2] = _SQ if self is BellState.PHI_PLUS else -_SQ
        else:
            v[0] = _SQ
            v[3] = _SQ if self is BellState.PSI_PLUS else -_SQ
        return v

    @property
    def projector(self) -> "DensityMatrix":
        return DensityMatrix(projector(self.vector))


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated 4x4 two-qubit state.

    Construction checks Hermiticity, unit trace and positivity, each to
    ``1e-10``; any violation raises :class:`ValidationError` (or
    :class:`NotPSDError`, which carries the offending eigenvalue).
    """

    m: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.m)
        if m.shape != (4, 4):
            raise ValidationError(f"two-qubit state must be 4x4, got {m.shape}")
        check_hermitian(m, TOL.herm)
        tr = np.trace(m)
        if abs(tr - 1.0) > TOL.trace:
            raise ValidationError(f"trace {tr.real:.12g}{tr.imag:+.3g}j differs from 1")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "m", m)
        lo = float(self.eigh[0][0])
        if lo < -TOL.psd:
            raise NotPSDError(f"state is not PSD: min eigenvalue {lo:.3e}", lo)

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        return hermitian_eigen(self.m)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eigh[0]

    def rank(self, tol: float = 1e-9) -> int:
        return int(np.sum(self.eigenvalues > tol))

    def is_close(self, other, atol: float = 1e-10) -> bool:
        other = other.m if isinstance(other, DensityMatrix) else np.asarray(other)
        return bool(np.max(np.abs(self.m - other)) <= atol)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.m, dtype=dtype)

    def __repr__(self):
        return f"DensityMatrix(\n{np.array2string(self.m, precision=6, suppress_small=True)})"


@dataclass(frozen=True, eq=False)
class PureStateMixture:
    """Explicit decomposition ``sum_i p_i |psi_i><psi_i|``.

    Every weight must be strictly positive; a mixture with a vanishing weight
    is a different decomposition, not a reweighting of this one.
    """

    components: tuple = field(default=())

    def __post_init__(self):
        comps = []
        for p, psi in self.components:
            p = float(p)
            psi = np.asarray(psi, dtype=complex).reshape(-1)
            if psi.shape != (4,):
                raise ValidationError(f"mixture component must be a 4-vector, got {psi.shape}")
            if not p > 0.0:
                raise ValidationError(f"mixture weight {p!r} is not strictly positive")
            norm = np.linalg.norm(psi)
            if abs(norm - 1.0) > 1e-12:
                raise ValidationError(f"mixture component has norm {norm:.15g}, expected 1")
            psi = psi.copy()
            psi.flags.writeable = False
            comps.append((p, psi))
        if not comps:
            raise ValidationError("mixture must have at least one component")
        total = sum(p for p, _ in comps)
        if abs(total - 1.0) > TOL.prob_sum:
            raise ValidationError(f"mixture weights sum to {total:.15g}, expected 1")
        object.__setattr__(self, "components", tuple(comps))

    @property
    def probabilities(self) -> tuple[float, ...]:
        return tuple(p for p, _ in self.components)

    @property
    def vectors(self) -> tuple[np.ndarray, ...]:
        return tuple(v for _, v in self.components)

    def __len__(self):
        return len(self.components)


@dataclass(frozen=True)
class NonDiagonalParams:
    """Entries of the non-diagonal family ``1/2 [[b+c,0,0,0],[0,a-b,d,0],[0,d,a-c,0],[0,0,0,0]]``."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        a, b, c = self.a, self.b, self.c
        tol = TOL.trace
        if b + c < -tol or a - b < -tol or a - c < -tol:
            raise ValidationError(f"negative diagonal entry for parameters {self}")
        if abs(a - 1.0) > tol:
            raise ValidationError(f"trace normalization requires a = 1, got a = {a!r}")

    def matrix(self) -> np.ndarray:
        a, b, c, d = self.a, self.b, self.c, self.d
        m = np.zeros((4, 4), dtype=complex)
        m[0, 0] = b + c
        m[1, 1] = a - b
        m[2, 2] = a - c
        m[1, 2] = m[2, 1] = d
        return 0.5 * m


def from_mixture(mix: PureStateMixture) -> DensityMatrix:
    m = np.zeros((4, 4), dtype=complex)
    for p, psi in mix.components:
        m += p * projector(psi)
    return DensityMatrix(0.5 * (m + m.conj().T))


def rank2_state(p1: float) -> DensityMatrix:
    """``(1 - p1)|++><++| + p1 |Phi+><Phi+|``, the non-quasi-separable family.

    The open interval is enforced; the endpoints are pure states and should
    be built with :func:`from_mixture`.
    """
    p1 = float(p1)
    if not 0.0 < p1 < 1.0:
        raise DomainError(f"p1 must lie in the open interval (0, 1), got {p1!r}")
    return from_mixture(PureStateMixture(((1.0 - p1, ket("++")), (p1, BellState.PHI_PLUS.vector))))


def nondiagonal_state(p: NonDiagonalParams) -> DensityMatrix:
    return DensityMatrix(p.matrix())


def _as_density(rho) -> DensityMatrix:
    return rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)


def concurrence(rho) -> float:
    """Wootters concurrence of a two-qubit state.

    The decreasing values ``l1..l4`` are the square roots of the spectrum of
    ``R = sqrt(rho) rho~ sqrt(rho)`` with ``rho~ = (Y x Y) rho* (Y x Y)``.
    They are the singular values of ``M = sqrt(rho) sqrt(rho~)``, and are
    read off as ``|M^dagger u_i|`` for the eigenvectors ``u_i`` of
    ``R = M M^dagger`` rather than as square roots of R's eigenvalues, which
    would turn rounding noise of order 1e-17 into errors of order 1e-9.
    """
    rho = _as_density(rho)
    vals, vecs = rho.eigh
    vals = _psd_spectrum(vals, TOL.psd)
    s = (vecs * np.sqrt(vals)) @ vecs.conj().T
    s = 0.5 * (s + s.conj().T)
    s_tilde = _YY @ s.conj() @ _YY
    mmat = s @ s_tilde
    r = mmat @ mmat.conj().T
    _, u = hermitian_eigen(0.5 * (r + r.conj().T))
    lam = np.sort(np.linalg.norm(mmat.conj().T @ u, axis=0))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def x_state_concurrence(rho) -> float:
    """Closed-form concurrence of an X-shaped state.

    Only the diagonal and the anti-diagonal corners of the two 2x2 blocks
    are read; the caller is responsible for the X shape.
    """
    m = np.asarray(rho.m if isinstance(rho, DensityMatrix) else rho)
    d = m.diagonal().real.clip(0.0)
    v1 = abs(m[1, 2]) - np.sqrt(d[0] * d[3])
    v2 = abs(m[0, 3]) - np.sqrt(d[1] * d[2])
    return float(2.0 * max(0.0, v1, v2))


def partial_transpose(m, subsystem: int = 1) -> np.ndarray:
    """Partial transpose of a 4x4 operator over qubit ``subsystem`` (0 or 1)."""
    m = np.asarray(m.m if isinstance(m, DensityMatrix) else m).reshape(2, 2, 2, 2)
    if subsystem == 1:
        out = m.transpose(0, 3, 2, 1)
    elif subsystem == 0:
        out = m.transpose(2, 1, 0, 3)
    else:
        raise ValidationError(f"subsystem must be 0 or 1, got {subsystem!r}")
    return out.reshape(4, 4)


def ppt_is_separable(rho, tol: float = TOL.psd) -> bool:
    """Peres-Horodecki test, exact for two qubits."""
    rho = _as_density(rho)
    return bool(eigvalsh(partial_transpose(rho.m)).min() >= -tol)


def fidelity_with_pure(rho, psi) -> float:
    """``<psi| rho |psi>`` for a unit vector ``psi``."""
    rho = _as_density(rho)
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.shape != (4,):
        raise ValidationError(f"expected a 4-vector, got shape {psi.shape}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > TOL.herm:
        raise ValidationError(f"state vector has norm {norm:.15g}, expected 1")
    return float(np.real(psi.conj() @ rho.m @ psi))
