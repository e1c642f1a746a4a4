"""Forward/backward work functionals, the Jarzynski identity and two-point-measurement statistics.

The functional ``exp(int lambda(t) A(t) dt)`` is taken as the plain matrix
exponential of the integrated Heisenberg observable, with the integral done by
the midpoint rule on the propagator grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Literal

import numpy as np

from .errors import DomainError
from .operators import dagger, hermitize, matrix_exponential
from .protocol import DrivingProtocol, Observable, PropagatorTable, build_propagators, hamiltonian_at
from .thermal import gibbs


@dataclass(frozen=True)
class FunctionalSpec:
    """Coupling ``lam(t)`` (vectorised over t) and the observable it multiplies.

    If ``slices`` is set, the spec is bound to that grid and is rejected by
    tables of any other size.
    """

    lam: Callable[[np.ndarray], np.ndarray]
    observable: Observable
    slices: int | None = None

    def values(self, t: np.ndarray) -> np.ndarray:
        out = np.broadcast_to(np.asarray(self.lam(np.asarray(t, dtype=float)), dtype=float), np.shape(t))
        if not np.all(np.isfinite(out)):
            raise DomainError("lambda(t) is not finite on the grid")
        return out


def sine_coupling(amplitude: float, duration: float) -> Callable[[np.ndarray], np.ndarray]:
    """lambda(t) = amplitude * sin(pi t / T)."""
    return lambda t: amplitude * np.sin(np.pi * np.asarray(t) / duration)


def zero_coupling(t):
    return np.zeros_like(np.asarray(t, dtype=float))


def identity_observable(dim: int) -> Observable:
    return Observable(np.eye(dim), 1)


def integrated_observable(spec: FunctionalSpec, table: PropagatorTable) -> np.ndarray:
    """Midpoint sum of lambda times the Heisenberg observable over the table's slices.

    Forward tables weight slice k by ``lam(t_k^mid)``; reverse tables by
    ``lam(T - t_k^mid)``.
    """
    if spec.slices is not None and spec.slices != table.slices:
        raise DomainError(f"functional is bound to {spec.slices} slices, table has {table.slices}")
    A = spec.observable.matrix
    if A.shape[0] != table.unitaries.shape[1]:
        raise DomainError("observable and propagators have different dimensions")
    mids = table.midpoints
    t_eval = mids if table.direction == "forward" else table.duration - mids
    lam = spec.values(t_eval)
    Um = table.midpoint_unitaries
    A_mid = dagger(Um) @ A @ Um
    return hermitize(np.tensordot(lam * table.dt, A_mid, axes=1))


def _forward_trace(p: DrivingProtocol, Lam: np.ndarray, U: np.ndarray, beta: float) -> complex:
    # Tr[rho(0) e^Lam e^{-beta H_F(T)} e^{beta H(0)}] in the eigenbasis of H(0);
    # the diagonal factors rho(0) and e^{beta H(0)} are combined in log space.
    s0 = gibbs(hamiltonian_at(p, 0.0, +1), beta)
    sT = gibbs(hamiltonian_at(p, p.duration, +1), beta)
    a = sT.energies[0]
    QT = dagger(U) @ sT.basis
    boltz_T = (QT * np.exp(-beta * (sT.energies - a))) @ dagger(QT)
    M = matrix_exponential(Lam) @ boltz_T
    Q0 = s0.basis
    diag = np.einsum("ji,jk,ki->i", Q0.conj(), M, Q0)
    log_w = (-beta * s0.energies - s0.log_partition) + beta * s0.energies - beta * a
    return complex(np.sum(np.exp(log_w) * diag))


def _real(z: complex, complex_result: bool):
    return z if complex_result else float(z.real)


def forward_functional_average(p: DrivingProtocol, spec: FunctionalSpec, beta: float, N: int, complex_result: bool = False):
    """<e^{int lam A_F} e^{-beta H_F(T)} e^{beta H(0)}> over rho(0)."""
    if not beta > 0:
        raise DomainError("beta must be positive")
    table = build_propagators(p, +1, "forward", N)
    Lam = integrated_observable(spec, table)
    return _real(_forward_trace(p, Lam, table.final(), beta), complex_result)


def reverse_functional_average(p: DrivingProtocol, spec: FunctionalSpec, beta: float, N: int, complex_result: bool = False):
    """<e^{+-int lam(T-t) A_R(t)}> over rho(T) in the backward process with -R."""
    if not beta > 0:
        raise DomainError("beta must be positive")
    table = build_propagators(p, -1, "reverse", N)
    Lam = spec.observable.parity * integrated_observable(spec, table)
    sT = gibbs(hamiltonian_at(p, p.duration, -1), beta)
    return _real(sT.expectation(matrix_exponential(Lam)), complex_result)


def free_energy_change(p: DrivingProtocol, beta: float) -> float:
    """F(T) - F(0) with F(T) from H(T, -R)."""
    return gibbs(hamiltonian_at(p, p.duration, -1), beta).F - gibbs(hamiltonian_at(p, 0.0, +1), beta).F


def log_partition_ratio(p: DrivingProtocol, beta: float) -> float:
    """ln Z(T)/Z(0) = -beta dF."""
    return gibbs(hamiltonian_at(p, p.duration, -1), beta).log_partition - gibbs(hamiltonian_at(p, 0.0, +1), beta).log_partition


def universal_relation_residual(
    p: DrivingProtocol,
    spec: FunctionalSpec,
    beta: float,
    N: int,
    reverse_slices: int | None = None,
) -> float:
    """|forward - e^{-beta dF} reverse| relative to the larger side.

    Both sides are positive in exact arithmetic, and at large beta they can be
    far below one, so an absolute floor would hide real discrepancies.

    ``reverse_slices`` evaluates the backward side on a different grid
    (negative control).
    """
    fwd = forward_functional_average(p, spec, beta, N)
    rev = reverse_functional_average(p, spec, beta, N if reverse_slices is None else reverse_slices)
    rhs = math.exp(log_partition_ratio(p, beta)) * rev
    return abs(fwd - rhs) / max(abs(fwd), abs(rhs), 1e-300)


def jarzynski_work_average(p: DrivingProtocol, U: np.ndarray, beta: float) -> float:
    """Tr[rho(0) e^{-beta U^dag H(T) U} e^{beta H(0)}] for an arbitrary unitary ``U``."""
    return _forward_trace(p, np.zeros((p.dim, p.dim), dtype=complex), U, beta).real


def jarzynski_exact(p: DrivingProtocol, beta: float, N: int) -> tuple[float, float]:
    """(exponential work average, e^{-beta dF}) for the discretised forward dynamics."""
    if not beta > 0:
        raise DomainError("beta must be positive")
    U = build_propagators(p, +1, "forward", N).final()
    return jarzynski_work_average(p, U, beta), math.exp(log_partition_ratio(p, beta))


@dataclass(frozen=True, eq=False)
class WorkDistribution:
    """Two-point-measurement work values.

    Enumerated mode pairs every ``W = E_m(T) - E_n(0)`` with its probability;
    sampled mode keeps raw draws and ``probabilities`` is None.
    """

    work: np.ndarray
    probabilities: np.ndarray | None
    beta: float
    mode: Literal["enumerated", "sampled"]

    def exp_average(self) -> float:
        """Mean of e^{-beta W}."""
        x = np.exp(-self.beta * self.work)
        if self.mode == "enumerated":
            return float(np.dot(self.probabilities, x))
        return float(np.mean(x))

    def standard_error(self) -> float:
        if self.mode != "sampled":
            return 0.0
        x = np.exp(-self.beta * self.work)
        return float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.inf

    def mass_near(self, w: float, atol: float = 1e-9) -> float:
        near = np.abs(self.work - w) <= atol
        if self.mode == "enumerated":
            return float(self.probabilities[near].sum())
        return float(near.mean())

    def write(self, path) -> None:
        """CSV ``W,probability`` (enumerated) or one W per line (sampled)."""
        with Path(path).open("w") as fh:
            if self.mode == "enumerated":
                fh.write("W,probability\n")
                for w, q in zip(self.work, self.probabilities):
                    fh.write(f"{w!r},{q!r}\n")
            else:
                fh.writelines(f"{w!r}\n" for w in self.work.tolist())


def _tpm_tables(p: DrivingProtocol, beta: float, N: int):
    s0 = gibbs(hamiltonian_at(p, 0.0, +1), beta)
    sT = gibbs(hamiltonian_at(p, p.duration, +1), beta)
    U = build_propagators(p, +1, "forward", N).final()
    # transition[n, m] = |<psi_m(T)| U |psi_n(0)>|^2
    transition = (np.abs(dagger(sT.basis) @ U @ s0.basis) ** 2).T
    transition /= transition.sum(axis=1, keepdims=True)
    return s0, sT, transition


def tpm_work_distribution(
    p: DrivingProtocol,
    beta: float,
    N: int,
    mode: Literal["enumerated", "sampled"] = "enumerated",
    samples: int | None = None,
    seed: int | None = None,
) -> WorkDistribution:
    """Work statistics from projective energy measurements at t = 0 and t = T.

    Sampling draws the initial level from the Boltzmann weights and the final
    level from the transition row, both by inverse CDF, from a Philox stream
    keyed by ``seed``.
    """
    if not beta > 0:
        raise DomainError("beta must be positive")
    s0, sT, transition = _tpm_tables(p, beta, N)
    W = sT.energies[None, :] - s0.energies[:, None]
    if mode == "enumerated":
        P = s0.populations[:, None] * transition
        return WorkDistribution(W.ravel(), P.ravel(), beta, "enumerated")
    if mode != "sampled":
        raise DomainError(f"unknown mode {mode!r}")
    if seed is None:
        raise DomainError("sampled mode needs an explicit seed")
    if samples is None or samples < 1:
        raise DomainError("sampled mode needs samples >= 1")
    rng = np.random.Generator(np.random.Philox(seed))
    u = rng.random((2, samples))
    d = s0.dim
    n = np.minimum(np.searchsorted(np.cumsum(s0.populations), u[0] * s0.populations.sum(), side="right"), d - 1)
    cdf = np.cumsum(transition, axis=1)
    m = np.empty(samples, dtype=np.intp)
    for level in range(d):
        sel = n == level
        m[sel] = np.searchsorted(cdf[level], u[1, sel] * cdf[level, -1], side="right")
    m = np.minimum(m, d - 1)
    return WorkDistribution(W[n, m], None, beta, "sampled")
