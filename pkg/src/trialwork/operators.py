"""Dense complex-matrix calculus for small quantum systems.

Units are hbar = k_B = 1. Time reversal is complex conjugation in the
computational basis, so a Theta-even operator is a real matrix and a
Theta-odd Hermitian operator is purely imaginary.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import DomainError, RangeError

HERMITIAN_RTOL = 1e-12
# exp() overflows a double just above this argument
_EXP_LIMIT = 709.0


def as_matrix(A) -> np.ndarray:
    """Return ``A`` as a square complex ndarray with finite entries."""
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError("matrix has non-finite entries")
    return M


def hermitian_defect(A) -> float:
    """Largest entry of |A - A^dagger| relative to the largest entry of |A|."""
    M = np.asarray(A)
    scale = np.max(np.abs(M)) if M.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(M - M.conj().T)) / scale)


def is_hermitian(A, rtol: float = HERMITIAN_RTOL) -> bool:
    return hermitian_defect(A) <= rtol


def hermitize(A) -> np.ndarray:
    """Hermitian part (A + A^dagger)/2; works on stacks of matrices."""
    M = np.asarray(A)
    return 0.5 * (M + np.conj(np.swapaxes(M, -1, -2)))


def dagger(A) -> np.ndarray:
    return np.conj(np.swapaxes(np.asarray(A), -1, -2))


def check_hermitian(A, name: str = "operator") -> np.ndarray:
    M = as_matrix(A)
    if not is_hermitian(M):
        raise DomainError(f"{name} is not Hermitian (defect {hermitian_defect(M):.3e})")
    return M


def _fix_phases(Q: np.ndarray) -> np.ndarray:
    # make the largest-magnitude component of every column real positive
    idx = np.argmax(np.abs(Q), axis=-2)
    pivots = np.take_along_axis(Q, idx[..., None, :], axis=-2)
    return Q * (np.conj(pivots) / np.abs(pivots))


def eig_hermitian(H) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and phase-fixed unitary eigenvectors of ``H``.

    Columns of the returned matrix are eigenvectors; each column is scaled so
    that its largest-magnitude entry is real and positive, which makes the
    result deterministic for a fixed input.
    """
    M = check_hermitian(H)
    w, Q = np.linalg.eigh(hermitize(M))
    return w, _fix_phases(Q)


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """A validated Hermitian matrix with a lazily computed spectrum."""

    matrix: np.ndarray

    def __post_init__(self):
        M = check_hermitian(self.matrix)
        M = hermitize(M)
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        w, Q = eig_hermitian(self.matrix)
        w.setflags(write=False)
        Q.setflags(write=False)
        return w, Q

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectrum[0]

    @property
    def eigenvectors(self) -> np.ndarray:
        return self.spectrum[1]

    def __add__(self, other):
        return HermitianOperator(self.matrix + np.asarray(other))

    def __sub__(self, other):
        return HermitianOperator(self.matrix - np.asarray(other))


def is_unitary(U, atol: float = 1e-10) -> bool:
    M = np.asarray(U)
    d = M.shape[0]
    return bool(np.linalg.norm(M.conj().T @ M - np.eye(d)) <= atol * np.sqrt(d))


def _is_normal(M: np.ndarray) -> bool:
    scale = max(np.linalg.norm(M), 1.0)
    return np.linalg.norm(M @ M.conj().T - M.conj().T @ M) <= 1e-12 * scale**2


def matrix_exponential(A) -> np.ndarray:
    """exp(A) for a square matrix.

    Hermitian and anti-Hermitian inputs go through ``eigh``; other normal
    matrices through a complex Schur form, which is diagonal for them. All
    remaining matrices use scaling and squaring with a Pade approximant.
    """
    M = as_matrix(A)
    if is_hermitian(M):
        w, Q = np.linalg.eigh(hermitize(M))
        if w.size and w[-1] > _EXP_LIMIT:
            raise RangeError(f"exp overflows: largest eigenvalue {w[-1]:.3g}")
        return (Q * np.exp(w)) @ Q.conj().T
    if is_hermitian(1j * M):
        w, Q = np.linalg.eigh(hermitize(1j * M))
        return (Q * np.exp(-1j * w)) @ Q.conj().T
    if _is_normal(M):
        T, Z = scipy.linalg.schur(M, output="complex")
        lam = np.diag(T)
        if np.max(lam.real) > _EXP_LIMIT:
            raise RangeError("exp overflows: eigenvalue real part too large")
        return (Z * np.exp(lam)) @ Z.conj().T
    with np.errstate(over="raise", invalid="raise"):
        try:
            E = scipy.linalg.expm(M)
        except FloatingPointError as exc:
            raise RangeError("exp overflows for this matrix") from exc
    if not np.all(np.isfinite(E)):
        raise RangeError("exp overflows for this matrix")
    return E


def unitary_step(H, dt: float) -> np.ndarray:
    """exp(-i H dt) for Hermitian ``H``."""
    w, Q = np.linalg.eigh(hermitize(as_matrix(H)))
    return (Q * np.exp(-1j * w * dt)) @ Q.conj().T


def operator_norm(A) -> float:
    """Largest singular value (spectral norm)."""
    return float(np.linalg.norm(as_matrix(A), 2))


def theta_conjugate(A) -> np.ndarray:
    """Theta A Theta with Theta = complex conjugation."""
    return np.conj(np.asarray(A, dtype=complex))


def theta_parity(A, atol: float = 1e-12) -> int | None:
    """+1 for real, -1 for purely imaginary, None when ``A`` has no definite parity."""
    M = np.asarray(A, dtype=complex)
    scale = max(np.max(np.abs(M)), 1.0) if M.size else 1.0
    if np.max(np.abs(M.imag), initial=0.0) <= atol * scale:
        return 1
    if np.max(np.abs(M.real), initial=0.0) <= atol * scale:
        return -1
    return None


def golden_thompson_slack(A, B) -> float:
    """Tr[e^A e^B] - Tr[e^(A+B)]; nonnegative for Hermitian A, B."""
    MA = check_hermitian(A, "A")
    MB = check_hermitian(B, "B")
    if MA.shape != MB.shape:
        raise DomainError(f"dimension mismatch: {MA.shape} vs {MB.shape}")
    lhs = np.trace(matrix_exponential(MA) @ matrix_exponential(MB)).real
    rhs = np.trace(matrix_exponential(MA + MB)).real
    return float(lhs - rhs)


def exp_norm_slack(A) -> float:
    """e^{||A||} - ||e^A||; nonnegative for every square matrix."""
    M = as_matrix(A)
    return float(np.exp(operator_norm(M)) - operator_norm(matrix_exponential(M)))


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    X = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * hermitize(X)


def random_real_symmetric(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    X = rng.normal(size=(dim, dim))
    return scale * 0.5 * (X + X.T)


def random_imaginary_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """i times a real antisymmetric matrix: Hermitian and Theta-odd."""
    X = rng.normal(size=(dim, dim))
    return 1j * scale * 0.5 * (X - X.T)
