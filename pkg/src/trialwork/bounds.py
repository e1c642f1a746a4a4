"""Corrections to the work relations when a trial Hamiltonian drives the system.

Conventions: the difference operator is V(t) = H'(t, R') - H(t, R). At t = 0
both Hamiltonians carry the forward parameters (+R, +R'); at t = T, where the
backward process starts, both carry the reversed ones (-R, -R'). The initial
average of V is taken in the true Gibbs state, the final one in the trial
Gibbs state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .operators import matrix_exponential, operator_norm
from .protocol import DrivingProtocol, hamiltonian_at, random_protocol
from .reports import BoundReport, upper_bound_report
from .thermal import gibbs
from .work import (
    FunctionalSpec,
    forward_functional_average,
    jarzynski_exact,
    log_partition_ratio,
    reverse_functional_average,
)


@dataclass(frozen=True)
class TrialPair:
    true_protocol: DrivingProtocol
    trial_protocol: DrivingProtocol

    def __post_init__(self):
        a, b = self.true_protocol, self.trial_protocol
        if a.dim != b.dim:
            raise DomainError(f"dimension mismatch: {a.dim} vs {b.dim}")
        if not math.isclose(a.duration, b.duration, rel_tol=1e-12):
            raise DomainError(f"duration mismatch: {a.duration} vs {b.duration}")

    @property
    def dim(self) -> int:
        return self.true_protocol.dim

    @property
    def duration(self) -> float:
        return self.true_protocol.duration

    def with_trial(self, trial: DrivingProtocol) -> TrialPair:
        return TrialPair(self.true_protocol, trial)


def combine(a: DrivingProtocol, b: DrivingProtocol, scale: float = 1.0) -> DrivingProtocol:
    """Protocol with H_a(t) + scale * H_b(t), on the union of both node sets.

    Both paths are piecewise linear, so sampling them at the merged nodes is
    exact. The result keeps ``a``'s parameter sign and metadata.
    """
    if a.dim != b.dim or not math.isclose(a.duration, b.duration, rel_tol=1e-12):
        raise DomainError("protocols must share dimension and duration")
    times = np.union1d(a.times, b.times * (a.duration / b.duration))
    tb = times * (b.duration / a.duration)
    even = a._interp(a.even, times) + scale * b._interp(b.even, tb)
    odd = a._interp(a.odd, times) + scale * b.parameter_sign * a.parameter_sign * b._interp(b.odd, tb)
    return DrivingProtocol(times, even, odd, a.parameter_sign, a.seed, a.generator_config)


def perturbed_pair(
    true: DrivingProtocol,
    epsilon: float,
    seed: int,
    mode: str = "perturbation",
) -> TrialPair:
    """Trial pair from a random Theta-structured direction P(t).

    ``perturbation``: H' = H + epsilon P. ``independent_r``: the trial even part
    is perturbed by epsilon P_even and the odd part is driven with a different
    parameter magnitude, R' = (1 + epsilon) R.
    """
    if epsilon < 0:
        raise DomainError("epsilon must be >= 0")
    cfg = true.generator_config or {}
    direction = random_protocol(
        true.dim,
        seed,
        smoothness=int(cfg.get("smoothness", true.times.size)),
        even_scale=float(cfg.get("even_scale", 1.0)),
        odd_scale=float(cfg.get("odd_scale", 0.5)),
        duration=true.duration,
    )
    if mode == "perturbation":
        trial = combine(true, direction, epsilon)
    elif mode == "independent_r":
        even_only = direction.with_nodes(odd=np.zeros_like(direction.odd))
        shifted = combine(true, even_only, epsilon)
        trial = shifted.with_nodes(odd=(1.0 + epsilon) * shifted.odd)
    else:
        raise DomainError(f"unknown trial mode {mode!r}")
    return TrialPair(true, trial)


@dataclass(frozen=True)
class DifferenceOperator:
    t: float
    matrix: np.ndarray


def difference_operator(pair: TrialPair, t: float, sign_true: int = 1, sign_trial: int = 1) -> DifferenceOperator:
    """V(t) = H'(t, sign_trial R') - H(t, sign_true R)."""
    V = hamiltonian_at(pair.trial_protocol, t, sign_trial) - hamiltonian_at(pair.true_protocol, t, sign_true)
    return DifferenceOperator(float(t), V)


def _endpoints(pair: TrialPair):
    T = pair.duration
    return (
        hamiltonian_at(pair.true_protocol, 0.0, +1),
        hamiltonian_at(pair.trial_protocol, 0.0, +1),
        hamiltonian_at(pair.true_protocol, T, -1),
        hamiltonian_at(pair.trial_protocol, T, -1),
    )


def v_averages(pair: TrialPair, beta: float) -> tuple[float, float]:
    """(<V(0)> in rho(0), <V(T)> in rho'(T))."""
    H0, H0t, HT, HTt = _endpoints(pair)
    v0 = gibbs(H0, beta).expectation(H0t - H0).real
    vT = gibbs(HTt, beta).expectation(HTt - HT).real
    return v0, vT


def universal_inequality_report(pair: TrialPair, spec: FunctionalSpec, beta: float, N: int, tol: float = 1e-9) -> BoundReport:
    """Trial forward functional <= e^{-beta dF} e^{beta(v0 - vT)} trial reverse functional."""
    v0, vT = v_averages(pair, beta)
    lhs = forward_functional_average(pair.trial_protocol, spec, beta, N)
    rev = reverse_functional_average(pair.trial_protocol, spec, beta, N)
    log_factor = log_partition_ratio(pair.true_protocol, beta) + beta * (v0 - vT)
    return upper_bound_report(
        "universal_inequality", lhs, math.exp(log_factor) * rev, tol,
        beta=beta, slices=N, v0=v0, vT=vT, trial_reverse=rev, parity=spec.observable.parity,
    )


def jarzynski_inequality_report(pair: TrialPair, beta: float, N: int, tol: float = 1e-9) -> BoundReport:
    """e^{-beta dF'} <= e^{-beta dF} e^{beta(v0 - vT)}."""
    v0, vT = v_averages(pair, beta)
    log_ratio = log_partition_ratio(pair.true_protocol, beta)
    log_ratio_trial = log_partition_ratio(pair.trial_protocol, beta)
    work_average, _ = jarzynski_exact(pair.trial_protocol, beta, N)
    return upper_bound_report(
        "jarzynski_inequality", math.exp(log_ratio_trial), math.exp(log_ratio + beta * (v0 - vT)), tol,
        beta=beta, slices=N, dF=-log_ratio / beta, dF_trial=-log_ratio_trial / beta,
        v0=v0, vT=vT, trial_work_average=work_average,
    )


def matched_trial(pair: TrialPair, beta: float) -> TrialPair:
    """Shift the trial path by a scalar ramp so both endpoint averages of V vanish."""
    v0, vT = v_averages(pair, beta)
    return pair.with_trial(pair.trial_protocol.shifted(-v0, -vT))


def bogoliubov_report(pair: TrialPair, beta: float, N: int | None = None, tol: float = 1e-9, match_tol: float = 1e-10) -> BoundReport:
    """dF <= dF' for the matched-average version of the trial path.

    ``N`` is accepted for interface symmetry; the bound involves equilibrium
    quantities only.
    """
    v0, vT = v_averages(pair, beta)
    matched = matched_trial(pair, beta)
    m0, mT = v_averages(matched, beta)
    dF = -log_partition_ratio(pair.true_protocol, beta) / beta
    dF_matched = -log_partition_ratio(matched.trial_protocol, beta) / beta
    rep = upper_bound_report(
        "bogoliubov", dF, dF_matched, tol, scale=abs(dF_matched),
        beta=beta, v0=v0, vT=vT, matched_v0=m0, matched_vT=mT, match_tol=match_tol,
    )
    if max(abs(m0), abs(mT)) > match_tol:
        rep = BoundReport(rep.name, rep.lhs, rep.rhs, rep.slack, False, {**rep.context, "match_failed": True})
    return rep


class NormBounds(NamedTuple):
    final_partition: BoundReport
    initial_partition: BoundReport
    jarzynski: BoundReport

    def all_satisfied(self) -> bool:
        return all(r.satisfied for r in self)


def norm_bound_report(pair: TrialPair, beta: float, tol: float = 1e-9) -> NormBounds:
    """Operator-norm versions of the partition-function and Jarzynski bounds.

    Each report also records the intermediate trace Tr[e^{-beta H} e^{-beta V}]
    bounded via Golden-Thompson.
    """
    H0, H0t, HT, HTt = _endpoints(pair)
    V0 = H0t - H0
    VT = HTt - HT
    n0 = operator_norm(V0)
    nT = operator_norm(VT)
    s0, s0t, sT, sTt = (gibbs(H, beta) for H in (H0, H0t, HT, HTt))

    def shifted_trace(H, V, e0):
        # Tr[e^{-beta (H - e0)} e^{-beta V}] with the shift e0 taken out
        return np.trace(matrix_exponential(-beta * (H - e0 * np.eye(H.shape[0]))) @ matrix_exponential(-beta * V)).real

    gt_T = math.log(shifted_trace(HT, VT, sT.energies[0])) - beta * sT.energies[0]
    gt_0 = math.log(shifted_trace(H0t, -V0, s0t.energies[0])) - beta * s0t.energies[0]
    final = upper_bound_report(
        "norm_final_partition", sTt.Z, math.exp(sT.log_partition + beta * nT), tol,
        beta=beta, norm_V=nT, log_golden_thompson=gt_T,
    )
    initial = upper_bound_report(
        "norm_initial_partition", s0.Z, math.exp(s0t.log_partition + beta * n0), tol,
        beta=beta, norm_V=n0, log_golden_thompson=gt_0,
    )
    log_ratio = sT.log_partition - s0.log_partition
    log_ratio_trial = sTt.log_partition - s0t.log_partition
    jar = upper_bound_report(
        "norm_jarzynski", math.exp(log_ratio_trial), math.exp(log_ratio + beta * (n0 + nT)), tol,
        beta=beta, norm_V0=n0, norm_VT=nT,
    )
    return NormBounds(final, initial, jar)
