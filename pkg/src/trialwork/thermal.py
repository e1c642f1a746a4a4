"""Canonical states, partition functions and the Gibbs-Bogoliubov bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError
from .operators import HermitianOperator, check_hermitian, eig_hermitian, is_unitary
from .reports import BoundReport, lower_bound_report, upper_bound_report


@dataclass(frozen=True, eq=False)
class GibbsState:
    """e^{-beta H} / Z, kept in spectral form.

    The partition function is stored as its logarithm, computed with the
    lowest eigenvalue factored out, so large ``beta * spread(H)`` stays finite.
    """

    hamiltonian: np.ndarray
    beta: float
    energies: np.ndarray
    basis: np.ndarray
    log_partition: float

    @cached_property
    def populations(self) -> np.ndarray:
        """Boltzmann weights in the energy eigenbasis."""
        return np.exp(-self.beta * self.energies - self.log_partition)

    @cached_property
    def rho(self) -> np.ndarray:
        Q = self.basis
        return (Q * self.populations) @ Q.conj().T

    @property
    def Z(self) -> float:
        return math.exp(self.log_partition)

    @property
    def F(self) -> float:
        return -self.log_partition / self.beta

    @property
    def dim(self) -> int:
        return self.energies.size

    def expectation(self, O) -> complex:
        """Tr[rho O], evaluated in the energy eigenbasis."""
        Q = self.basis
        diag = np.einsum("ji,jk,ki->i", Q.conj(), np.asarray(O), Q)
        return complex(np.dot(self.populations, diag))


def _log_partition(energies: np.ndarray, beta: float) -> float:
    e0 = energies[0]
    return float(-beta * e0 + math.log(np.sum(np.exp(-beta * (energies - e0)))))


def gibbs(H, beta: float) -> GibbsState:
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    if isinstance(H, HermitianOperator):
        M = H.matrix
        E, Q = H.spectrum
    else:
        M = check_hermitian(H, "Hamiltonian")
        E, Q = eig_hermitian(M)
    return GibbsState(M, float(beta), E, Q, _log_partition(E, beta))


def free_energy(H, beta: float) -> float:
    return gibbs(H, beta).F


@dataclass(frozen=True)
class DiagonalDistribution:
    """Diagonal of a density matrix in a given orthonormal basis."""

    probabilities: np.ndarray
    basis_labels: str = "computational"

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if np.any(p < -1e-12):
            raise DomainError("probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-10:
            raise DomainError(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "probabilities", np.clip(p, 0.0, None))

    def __len__(self) -> int:
        return self.probabilities.size


def diagonal_distribution(state: GibbsState, basis, label: str = "custom") -> DiagonalDistribution:
    """p_n = <psi_n| rho |psi_n> for the columns psi_n of ``basis``.

    ``basis`` may be a unitary matrix or a ``HermitianOperator`` whose
    eigenvectors are used.
    """
    if isinstance(basis, HermitianOperator):
        Q = basis.eigenvectors
    else:
        Q = np.asarray(basis, dtype=complex)
    if Q.shape != (state.dim, state.dim):
        raise DomainError(f"basis shape {Q.shape} does not match dimension {state.dim}")
    if not is_unitary(Q):
        raise DomainError("basis is not unitary")
    # rho = B diag(pop) B^dagger, so <q|rho|q> = sum_k pop_k |<b_k|q>|^2
    overlap = np.abs(state.basis.conj().T @ Q) ** 2
    return DiagonalDistribution(state.populations @ overlap, label)


def relative_entropy(p: DiagonalDistribution, q: DiagonalDistribution) -> float:
    """Kullback-Leibler divergence sum p ln(p/q); ``inf`` when p is not supported by q."""
    a = p.probabilities
    b = q.probabilities
    if a.shape != b.shape:
        raise DomainError("distributions have different lengths")
    mask = a > 0
    if np.any(b[mask] <= 0):
        return math.inf
    return float(max(np.sum(a[mask] * np.log(a[mask] / b[mask])), 0.0))


def _v_average(state: GibbsState, H_true, H_trial) -> float:
    return state.expectation(np.asarray(H_trial) - np.asarray(H_true)).real


def gbf_lower_bound(H_true, H_trial, beta: float, tol: float = 1e-9) -> BoundReport:
    """Z' >= Z exp(-beta Tr[rho (H' - H)]) with rho the true Gibbs state."""
    s = gibbs(H_true, beta)
    s_trial = gibbs(H_trial, beta)
    v = _v_average(s, H_true, H_trial)
    log_rhs = s.log_partition - beta * v
    return lower_bound_report(
        "gbf_lower", s_trial.Z, math.exp(log_rhs), tol,
        beta=beta, v_average=v, log_lhs=s_trial.log_partition, log_rhs=log_rhs,
    )


def gbf_upper_bound(H_true, H_trial, beta: float, tol: float = 1e-9) -> BoundReport:
    """Z' <= Z exp(-beta Tr[rho' (H' - H)]) with rho' the trial Gibbs state."""
    s = gibbs(H_true, beta)
    s_trial = gibbs(H_trial, beta)
    v = _v_average(s_trial, H_true, H_trial)
    log_rhs = s.log_partition - beta * v
    return upper_bound_report(
        "gbf_upper", s_trial.Z, math.exp(log_rhs), tol,
        beta=beta, v_average=v, log_lhs=s_trial.log_partition, log_rhs=log_rhs,
    )


def ratio_bound(H0, H0_trial, HT, HT_trial, beta: float, tol: float = 1e-9) -> BoundReport:
    """Z'(T)/Z'(0) <= Z(T)/Z(0) exp(beta [<V(0)>_{rho(0)} - <V(T)>_{rho'(T)}]).

    ``HT`` and ``HT_trial`` are the final Hamiltonians with reversed external
    parameters, i.e. the ones that start the backward process.
    """
    s0 = gibbs(H0, beta)
    sT = gibbs(HT, beta)
    s0t = gibbs(H0_trial, beta)
    sTt = gibbs(HT_trial, beta)
    v0 = _v_average(s0, H0, H0_trial)
    vT = _v_average(sTt, HT, HT_trial)
    log_lhs = sTt.log_partition - s0t.log_partition
    log_rhs = sT.log_partition - s0.log_partition + beta * (v0 - vT)
    return upper_bound_report(
        "ratio", math.exp(log_lhs), math.exp(log_rhs), tol,
        beta=beta, v0=v0, vT=vT, log_lhs=log_lhs, log_rhs=log_rhs,
    )
