"""Dense complex linear algebra for 2-, 4- and 16-dimensional operators.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; numpy is used as
the storage carrier and for products, while the Hermitian eigensolver is a
cyclic complex Jacobi iteration written out here. For matrices of this size
the Jacobi method is short, has no deflation logic, and returns exact zeros
for the block-structured states that show up in the protocol, which keeps
the concurrence of rank-deficient states accurate to machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotPSDError, ValidationError

__all__ = [
    "TOL",
    "Tolerances",
    "I2",
    "SX",
    "SY",
    "SZ",
    "as_matrix",
    "dagger",
    "tensor",
    "check_hermitian",
    "hermitian_eigen",
    "eigvalsh",
    "sqrt_psd",
    "is_psd",
]


@dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-10
    psd: float = 1e-10
    recon: float = 1e-9
    trace: float = 1e-10
    prob_sum: float = 1e-12
    # outcomes below this probability have no defined conditional state
    null_prob: float = 1e-14


TOL = Tolerances()

MAX_DIM = 16

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
for _m in (I2, SX, SY, SZ):
    _m.flags.writeable = False


def as_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a finite square complex array of dimension <= 16."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] == 0 or m.shape[0] > MAX_DIM:
        raise ValidationError(f"matrix dimension {m.shape[0]} outside 1..{MAX_DIM}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    return m


def dagger(a) -> np.ndarray:
    return np.asarray(a).conj().T


def tensor(a, b) -> np.ndarray:
    """Kronecker product with index convention ``i_a * dim(b) + i_b``.

    Raises
    ------
    ValidationError
        If the product would exceed dimension 16 (two copies of two qubits).
    """
    a = as_matrix(a)
    b = as_matrix(b)
    dim = a.shape[0] * b.shape[0]
    if dim > MAX_DIM:
        raise ValidationError(f"tensor product dimension {dim} exceeds {MAX_DIM}")
    return np.kron(a, b)


def check_hermitian(h, tol: float = TOL.herm) -> np.ndarray:
    """Return ``h`` as an array, raising if ``max |h - h^dagger| > tol``."""
    h = as_matrix(h)
    asym = np.abs(h - h.conj().T)
    worst = float(asym.max())
    if worst > tol:
        i, j = np.unravel_index(int(np.argmax(asym)), asym.shape)
        raise ValidationError(
            f"matrix is not Hermitian: |h[{i},{j}] - conj(h[{j},{i}])| = {worst:.3e} > {tol:.1e}"
        )
    return h


def _jacobi(h: np.ndarray, want_vectors: bool):
    n = h.shape[0]
    herm = 0.5 * (h + h.conj().T)
    a = [[complex(x) for x in row] for row in herm.tolist()]
    v = [[1.0 + 0j if i == j else 0j for j in range(n)] for i in range(n)]
    fro2 = sum(abs(x) ** 2 for row in a for x in row)
    stop = (1e-17 * math.sqrt(fro2)) ** 2 if fro2 > 0 else 0.0

    for sweep in range(60):
        off = 0.0
        for p in range(n - 1):
            row = a[p]
            for q in range(p + 1, n):
                off += abs(row[q]) ** 2
        if off <= stop:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                b = abs(apq)
                if b == 0.0:
                    continue
                app = a[p][p].real
                aqq = a[q][q].real
                if sweep > 3 and b <= 1e-18 * (abs(app) + abs(aqq)):
                    a[p][q] = a[q][p] = 0j
                    continue
                theta = (aqq - app) / (2.0 * b)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ecs = (apq / b).conjugate() * s
                ecc = (apq / b).conjugate() * c
                for k in range(n):
                    if k == p or k == q:
                        continue
                    akp = a[k][p]
                    akq = a[k][q]
                    nkp = c * akp - ecs * akq
                    nkq = s * akp + ecc * akq
                    a[k][p] = nkp
                    a[p][k] = nkp.conjugate()
                    a[k][q] = nkq
                    a[q][k] = nkq.conjugate()
                a[p][p] = complex(app - t * b)
                a[q][q] = complex(aqq + t * b)
                a[p][q] = a[q][p] = 0j
                if want_vectors:
                    for k in range(n):
                        vkp = v[k][p]
                        vkq = v[k][q]
                        v[k][p] = c * vkp - ecs * vkq
                        v[k][q] = s * vkp + ecc * vkq
    else:
        raise ArithmeticError("Jacobi eigensolver did not converge in 60 sweeps")

    vals = np.array([a[i][i].real for i in range(n)])
    order = np.argsort(vals, kind="stable")
    vecs = np.array(v, dtype=complex)[:, order] if want_vectors else None
    return vals[order], vecs


def hermitian_eigen(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Parameters
    ----------
    h : array_like
        Square Hermitian matrix, ``max |h - h^dagger| <= TOL.herm``.

    Returns
    -------
    eigenvalues : np.ndarray
        Real eigenvalues in ascending order. Near-degenerate values are
        reported as computed, without merging.
    eigenvectors : np.ndarray
        Unitary matrix whose columns are the matching eigenvectors, so that
        ``h = V @ diag(eigenvalues) @ V^dagger``.
    """
    h = check_hermitian(h)
    return _jacobi(h, want_vectors=True)


def eigvalsh(h) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix (no eigenvectors)."""
    h = check_hermitian(h)
    return _jacobi(h, want_vectors=False)[0]


def _psd_spectrum(vals: np.ndarray, tol: float) -> np.ndarray:
    lo = float(vals.min())
    if lo < -tol:
        raise NotPSDError(f"matrix is not PSD: min eigenvalue {lo:.3e} < -{tol:.1e}", lo)
    vals = np.clip(vals, 0.0, None)
    # eigenvalues at rounding-noise level are zeros; sqrt would amplify them to ~1e-8
    floor = 4.0 * np.finfo(float).eps * float(vals.max(initial=0.0))
    vals[vals <= floor] = 0.0
    return vals


def sqrt_psd(h, tol: float = TOL.psd) -> np.ndarray:
    """Principal square root of a Hermitian positive semidefinite matrix.

    Eigenvalues in ``[-tol, 0)`` are clamped to zero; anything more negative
    raises :class:`NotPSDError`.
    """
    vals, vecs = hermitian_eigen(h)
    vals = _psd_spectrum(vals, tol)
    s = (vecs * np.sqrt(vals)) @ vecs.conj().T
    return 0.5 * (s + s.conj().T)


def is_psd(h, tol: float = TOL.psd) -> bool:
    return bool(eigvalsh(h)[0] >= -tol)
