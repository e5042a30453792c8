"""Singlet dynamics under independent vacuum or thermal baths on each qubit.

The excited level of each qubit is ``|+>`` and the ground level ``|->``, so
the lowering operator maps ``|+> -> |->``. The closed-form coefficients are
written in dimensionless time ``tau = gamma * t``.

The generator is, per qubit ``k``,

    gamma (n+1) D[s_k] rho + gamma n D[s_k^dagger] rho,
    D[L] rho = L rho L^dagger - (L^dagger L rho + rho L^dagger L) / 2,

and :func:`integrate_rk4` integrates it with a classical fixed-step RK4 as
an independent check on the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DomainError, IntegrationQualityError, ValidationError
from .linalg import I2, eigvalsh, tensor
from .states import BellState, DensityMatrix, ket, projector

__all__ = [
    "BathParams",
    "ThermalCoeffs",
    "DistilledClosedForms",
    "LOWERING",
    "vacuum_solution",
    "thermal_coeffs",
    "thermal_solution",
    "thermal_steady_state",
    "published_concurrence_c1",
    "lindblad_rhs",
    "lindblad_superoperator",
    "default_dt",
    "integrate_rk4",
    "rk4_trajectory",
    "published_distilled_forms",
    "published_distilled_matrix",
    "literal_p3_p4",
]

LOWERING = np.array([[0, 0], [1, 0]], dtype=complex)
_SA = tensor(LOWERING, I2)
_SB = tensor(I2, LOWERING)


@dataclass(frozen=True)
class BathParams:
    """Damping rate ``gamma`` (> 0) and mean thermal photon number ``nbar`` (>= 0)."""

    gamma: float = 1.0
    nbar: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise DomainError(f"gamma must be a positive finite rate, got {self.gamma!r}")
        if not (math.isfinite(self.nbar) and self.nbar >= 0):
            raise DomainError(f"nbar must be a nonnegative finite number, got {self.nbar!r}")


class ThermalCoeffs(NamedTuple):
    a: float
    c: float
    d: float
    t: float


class DistilledClosedForms(NamedTuple):
    p1: float
    p2: float
    p3: float
    p4: float
    P: float
    c2: float

    @property
    def cd(self) -> float:
        return max(0.0, self.c2)


def _check_time(t: float) -> float:
    t = float(t)
    if not (math.isfinite(t) and t >= 0):
        raise DomainError(f"time must be finite and nonnegative, got {t!r}")
    return t


def vacuum_solution(t: float, gamma: float = 1.0) -> DensityMatrix:
    """``(1 - e^{-gamma t}) |--><--| + e^{-gamma t} |Phi-><Phi-|``."""
    t = _check_time(t)
    BathParams(gamma)
    e = math.exp(-gamma * t)
    m = (1.0 - e) * projector(ket("--")) + e * projector(BellState.PHI_MINUS.vector)
    return DensityMatrix(m)


def thermal_coeffs(t: float, p: BathParams) -> ThermalCoeffs:
    t = _check_time(t)
    tau = p.gamma * t
    n = p.nbar
    k = 1.0 + 2.0 * n
    e = math.exp(-k * tau)
    d = (e - 1.0) / k
    a = -e
    # e^{-2k tau}(e^{2k tau} - 2 e^{k tau} - 4n(n+1)) / k^2, expanded to avoid overflow
    c = (1.0 - 2.0 * e - 4.0 * n * (n + 1.0) * e * e) / (k * k)
    return ThermalCoeffs(a, c, d, t)


def _thermal_matrix(co: ThermalCoeffs) -> np.ndarray:
    a, c, d = co.a, co.c, co.d
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = (1 + c) / 4 + d / 2
    m[1, 1] = m[2, 2] = (1 - c) / 4
    m[1, 2] = m[2, 1] = a / 2
    m[3, 3] = (1 + c) / 4 - d / 2
    return m


def thermal_solution(t: float, p: BathParams) -> DensityMatrix:
    """Closed-form state at time ``t`` for a singlet prepared at ``t = 0``."""
    try:
        return DensityMatrix(_thermal_matrix(thermal_coeffs(t, p)))
    except ValidationError as exc:
        raise ArithmeticError(f"closed-form thermal state invalid at t={t}, {p}: {exc}") from exc


def thermal_steady_state(p: BathParams) -> DensityMatrix:
    """Product of single-qubit Gibbs states, the fixed point of the generator."""
    n = p.nbar
    g = np.diag([n / (2 * n + 1), (n + 1) / (2 * n + 1)]).astype(complex)
    return DensityMatrix(np.kron(g, g))


def published_concurrence_c1(t: float, p: BathParams) -> float:
    """``max(0, -a - sqrt((1+c)^2 - 4 d^2) / 4)``, transcribed as published.

    The X-state concurrence of the same matrix carries ``1/2`` rather than
    ``1/4`` in front of the square root; this function keeps the published
    factor so the two can be compared.
    """
    a, c, d, _ = thermal_coeffs(t, p)
    root = math.sqrt(max(0.0, (1 + c) ** 2 - 4 * d * d))
    return max(0.0, -a - 0.25 * root)


def _dissipator(op: np.ndarray, rho: np.ndarray) -> np.ndarray:
    od = op.conj().T
    odo = od @ op
    return op @ rho @ od - 0.5 * (odo @ rho + rho @ odo)


def lindblad_rhs(rho, p: BathParams) -> np.ndarray:
    """Time derivative of ``rho`` under the two-bath generator.

    ``rho`` may be a :class:`DensityMatrix` or any 4x4 array (the RK4 stages
    are not valid states).
    """
    m = np.asarray(rho.m if isinstance(rho, DensityMatrix) else rho, dtype=complex)
    if m.shape != (4, 4):
        raise ValidationError(f"expected a 4x4 operator, got {m.shape}")
    down = p.gamma * (p.nbar + 1.0)
    up = p.gamma * p.nbar
    out = np.zeros((4, 4), dtype=complex)
    for s in (_SA, _SB):
        out += down * _dissipator(s, m)
        if up:
            out += up * _dissipator(s.conj().T, m)
    return out


def lindblad_superoperator(p: BathParams) -> np.ndarray:
    """16x16 matrix of :func:`lindblad_rhs` acting on row-major ``vec(rho)``."""
    sup = np.zeros((16, 16), dtype=complex)
    for k in range(16):
        basis = np.zeros(16, dtype=complex)
        basis[k] = 1.0
        sup[:, k] = lindblad_rhs(basis.reshape(4, 4), p).reshape(16)
    return sup


def default_dt(p: BathParams) -> float:
    return 1e-4 / (p.gamma * (1.0 + 2.0 * p.nbar))


def _quality_check(v: np.ndarray, t: float) -> None:
    m = v.reshape(4, 4)
    drift = abs(np.trace(m) - 1.0)
    asym = float(np.abs(m - m.conj().T).max())
    if drift > 1e-9 or asym > 1e-9:
        raise IntegrationQualityError(
            f"at t={t:.6g}: trace drift {drift:.2e}, asymmetry {asym:.2e}; reduce dt"
        )
    lo = float(eigvalsh(0.5 * (m + m.conj().T))[0])
    if lo < -1e-8:
        raise IntegrationQualityError(f"at t={t:.6g}: min eigenvalue {lo:.2e} < -1e-8; reduce dt")


def rk4_trajectory(
    rho0: DensityMatrix,
    p: BathParams,
    times: Sequence[float],
    dt: float | None = None,
    check_every: int = 100,
) -> list[DensityMatrix]:
    """Integrate from ``t = 0`` and return the states at ``times``.

    ``times`` must be nondecreasing. Each interval between consecutive
    output times is covered by an integer number of equal steps no longer
    than ``dt``. Trace, Hermiticity and positivity are checked every
    ``check_every`` steps and at every output time.
    """
    dt = default_dt(p) if dt is None else float(dt)
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt!r}")
    times = [_check_time(t) for t in times]
    if any(t1 < t0 for t0, t1 in zip(times, times[1:])):
        raise DomainError("output times must be nondecreasing")

    sup = lindblad_superoperator(p)
    v = np.array(rho0.m, dtype=complex).reshape(16)
    t_now = 0.0
    steps_done = 0
    out = []
    for t_target in times:
        span = t_target - t_now
        nsteps = max(0, math.ceil(span / dt - 1e-9))
        if nsteps:
            h = span / nsteps
            for i in range(1, nsteps + 1):
                k1 = sup @ v
                k2 = sup @ (v + (0.5 * h) * k1)
                k3 = sup @ (v + (0.5 * h) * k2)
                k4 = sup @ (v + h * k3)
                v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                steps_done += 1
                if steps_done % check_every == 0:
                    _quality_check(v, t_now + i * h)
        t_now = t_target
        if steps_done == 0:
            out.append(rho0)
            continue
        _quality_check(v, t_now)
        m = v.reshape(4, 4)
        out.append(DensityMatrix(0.5 * (m + m.conj().T)))
    return out


def integrate_rk4(
    rho0: DensityMatrix, p: BathParams, t_end: float, dt: float | None = None
) -> DensityMatrix:
    """State at ``t_end`` by fixed-step RK4; ``t_end = 0`` returns ``rho0`` itself."""
    return rk4_trajectory(rho0, p, [t_end], dt)[0]


def published_distilled_forms(t: float, p: BathParams) -> DistilledClosedForms:
    """Published eigenvalues, success probability and distilled concurrence.

    ``p3, p4`` are read as ``(1-c)/4 +/- a/2``, the eigenvalues of the middle
    block. ``P = 2 p1 p2 + (p3 - p4)^2 / 2`` and
    ``c2 = (p3 - p4)^2 / (2P) - p1 p2 / P`` are kept exactly as published
    for comparison against simulation.
    """
    a, c, d, _ = thermal_coeffs(t, p)
    p1 = (1 + c) / 4 + d / 2
    p2 = (1 + c) / 4 - d / 2
    p3 = (1 - c) / 4 + a / 2
    p4 = (1 - c) / 4 - a / 2
    big_p = 2 * p1 * p2 + (p3 - p4) ** 2 / 2
    c2 = (p3 - p4) ** 2 / (2 * big_p) - p1 * p2 / big_p
    return DistilledClosedForms(p1, p2, p3, p4, big_p, c2)


def literal_p3_p4(t: float, p: BathParams) -> tuple[float, float]:
    """The other grouping of the published typesetting, ``(1-c)/8 +/- a/2``."""
    a, c, _, _ = thermal_coeffs(t, p)
    return 0.5 * (1 - c) / 4 + a / 2, 0.5 * (1 - c) / 4 - a / 2


def published_distilled_matrix(t: float, p: BathParams) -> np.ndarray:
    """Published distilled-state matrix, entries divided by the published ``P``.

    Not a valid state in general: its trace differs from 1.
    """
    f = published_distilled_forms(t, p)
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = m[3, 3] = f.p1 * f.p2
    m[1, 1] = m[2, 2] = (f.p3 + f.p4) ** 2
    m[1, 2] = m[2, 1] = -((f.p3 - f.p4) ** 2) / 4
    return m / f.P
