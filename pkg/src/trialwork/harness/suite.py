"""Verification suites and parameter sweeps over seeded random ensembles."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..bounds import (
    TrialPair,
    bogoliubov_report,
    jarzynski_inequality_report,
    norm_bound_report,
    perturbed_pair,
    universal_inequality_report,
)
from ..operators import exp_norm_slack, golden_thompson_slack, matrix_exponential, operator_norm
from ..protocol import (
    DrivingProtocol,
    hamiltonian_at,
    microreversibility_residual,
    parity_residual,
    random_observable,
    random_protocol,
)
from ..reports import BoundReport
from ..thermal import gbf_lower_bound, gbf_upper_bound, ratio_bound
from ..work import (
    FunctionalSpec,
    jarzynski_exact,
    sine_coupling,
    tpm_work_distribution,
    universal_relation_residual,
)
from .config import ExperimentConfig
from .seeds import derive_seed

# check name -> (suite, kind, tolerance); identities compare a residual with
# the tolerance, bounds compare the relative slack with -tolerance
CHECKS: dict[str, tuple[str, str, float]] = {
    "microreversibility": ("identities", "identity", 1e-9),
    "parity_even": ("identities", "identity", 1e-9),
    "parity_odd": ("identities", "identity", 1e-9),
    "jarzynski": ("identities", "identity", 1e-10),
    "universal_relation_even": ("identities", "identity", 1e-9),
    "universal_relation_odd": ("identities", "identity", 1e-9),
    "trial_universal_relation": ("identities", "identity", 1e-9),
    "tpm_normalization": ("identities", "identity", 1e-12),
    "tpm_jarzynski": ("identities", "identity", 1e-10),
    "gbf_lower": ("bounds", "bound", 1e-9),
    "gbf_upper": ("bounds", "bound", 1e-9),
    "ratio": ("bounds", "bound", 1e-9),
    "universal_inequality_even": ("bounds", "bound", 1e-9),
    "universal_inequality_odd": ("bounds", "bound", 1e-9),
    "jarzynski_inequality": ("bounds", "bound", 1e-9),
    "bogoliubov": ("bounds", "bound", 1e-9),
    "norm_final_partition": ("norms", "bound", 1e-9),
    "norm_initial_partition": ("norms", "bound", 1e-9),
    "norm_jarzynski": ("norms", "bound", 1e-9),
    "golden_thompson": ("norms", "bound", 1e-9),
    "exp_norm": ("norms", "bound", 1e-9),
}


@dataclass
class CheckResult:
    name: str
    value: float
    passed: bool
    context: dict[str, Any] = field(default_factory=dict)


@dataclass
class TrialInputs:
    index: int
    seed: int
    protocol: DrivingProtocol
    even_observable: object
    odd_observable: object
    trial_seed: int
    matrix_rng_seed: int


def trial_inputs(config: ExperimentConfig, index: int) -> TrialInputs:
    seed = derive_seed(config.master_seed, index, "protocol")
    pp = config.protocol
    p = random_protocol(config.dim, seed, pp.smoothness, pp.even_scale, pp.odd_scale, config.duration)
    rng = np.random.default_rng(derive_seed(config.master_seed, index, "observable"))
    even = random_observable(config.dim, 1, rng)
    odd = random_observable(config.dim, -1, rng)
    return TrialInputs(
        index, seed, p, even, odd,
        derive_seed(config.master_seed, index, "trial"),
        derive_seed(config.master_seed, index, "matrices"),
    )


def _identity(name: str, residual: float, **context) -> CheckResult:
    tol = CHECKS[name][2]
    return CheckResult(name, float(residual), bool(residual <= tol), context)


def _bound(name: str, report: BoundReport, **context) -> CheckResult:
    return CheckResult(name, report.relative_slack, report.satisfied, {**report.context, "lhs": report.lhs, "rhs": report.rhs, **context})


def _slack_check(name: str, slack: float, scale: float, **context) -> CheckResult:
    tol = CHECKS[name][2]
    rel = slack / scale
    return CheckResult(name, rel, bool(rel >= -tol), {"slack": slack, "scale": scale, **context})


def run_trial(config: ExperimentConfig, index: int) -> list[CheckResult]:
    inp = trial_inputs(config, index)
    p = inp.protocol
    N = config.slices
    T = p.duration
    suites = set(config.suites)
    out: list[CheckResult] = []
    lam = sine_coupling(config.lambda_amplitude, T)
    spec_even = FunctionalSpec(lam, inp.even_observable)
    spec_odd = FunctionalSpec(lam, inp.odd_observable)

    if "identities" in suites:
        out.append(_identity("microreversibility", microreversibility_residual(p, N)))
        out.append(_identity("parity_even", parity_residual(p, inp.even_observable, N)))
        out.append(_identity("parity_odd", parity_residual(p, inp.odd_observable, N)))

    for beta in config.beta:
        ctx = {"beta": beta}
        if "identities" in suites:
            work_avg, fe_side = jarzynski_exact(p, beta, N)
            out.append(_identity("jarzynski", abs(work_avg - fe_side) / fe_side, **ctx))
            out.append(_identity("universal_relation_even", universal_relation_residual(p, spec_even, beta, N), **ctx))
            out.append(_identity("universal_relation_odd", universal_relation_residual(p, spec_odd, beta, N), **ctx))
            dist = tpm_work_distribution(p, beta, N)
            out.append(_identity("tpm_normalization", abs(dist.probabilities.sum() - 1.0), **ctx))
            out.append(_identity("tpm_jarzynski", abs(dist.exp_average() - fe_side) / fe_side, **ctx))

        for eps in config.trial.epsilon:
            pair = perturbed_pair(p, eps, inp.trial_seed, config.trial.mode)
            ectx = {**ctx, "epsilon": eps}
            if "identities" in suites:
                out.append(_identity(
                    "trial_universal_relation",
                    universal_relation_residual(pair.trial_protocol, spec_even, beta, N), **ectx,
                ))
            if "bounds" in suites:
                out.extend(_bound_checks(pair, spec_even, spec_odd, beta, N, ectx))
            if "norms" in suites:
                out.extend(_norm_checks(pair, beta, inp.matrix_rng_seed, ectx))
    for r in out:
        r.context = {"trial": index, "seed": inp.seed, **r.context}
    return out


def _bound_checks(pair: TrialPair, spec_even, spec_odd, beta, N, ctx) -> list[CheckResult]:
    T = pair.duration
    H0 = hamiltonian_at(pair.true_protocol, 0.0, +1)
    H0t = hamiltonian_at(pair.trial_protocol, 0.0, +1)
    HT = hamiltonian_at(pair.true_protocol, T, -1)
    HTt = hamiltonian_at(pair.trial_protocol, T, -1)
    return [
        _bound("gbf_lower", gbf_lower_bound(H0, H0t, beta), **ctx),
        _bound("gbf_upper", gbf_upper_bound(HT, HTt, beta), **ctx),
        _bound("ratio", ratio_bound(H0, H0t, HT, HTt, beta), **ctx),
        _bound("universal_inequality_even", universal_inequality_report(pair, spec_even, beta, N), **ctx),
        _bound("universal_inequality_odd", universal_inequality_report(pair, spec_odd, beta, N), **ctx),
        _bound("jarzynski_inequality", jarzynski_inequality_report(pair, beta, N), **ctx),
        _bound("bogoliubov", bogoliubov_report(pair, beta, N), **ctx),
    ]


def _norm_checks(pair: TrialPair, beta, seed, ctx) -> list[CheckResult]:
    nb = norm_bound_report(pair, beta)
    T = pair.duration
    HT = hamiltonian_at(pair.true_protocol, T, -1)
    VT = hamiltonian_at(pair.trial_protocol, T, -1) - HT
    A, B = -beta * HT, -beta * VT
    gt_scale = max(1.0, abs(np.trace(matrix_exponential(A + B)).real))
    rng = np.random.default_rng(seed)
    d = HT.shape[0]
    # a generic non-normal matrix, so the norm inequality is not trivially tight
    X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return [
        _bound("norm_final_partition", nb.final_partition, **ctx),
        _bound("norm_initial_partition", nb.initial_partition, **ctx),
        _bound("norm_jarzynski", nb.jarzynski, **ctx),
        _slack_check("golden_thompson", golden_thompson_slack(A, B), gt_scale, **ctx),
        _slack_check("exp_norm", exp_norm_slack(X), math.exp(operator_norm(X)), **ctx),
    ]


@dataclass
class SuiteReport:
    config: dict
    checks: dict[str, dict]
    failures: list[dict]
    timings: dict[str, float]

    @property
    def all_passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "checks": self.checks,
            "failures": self.failures,
            "all_passed": self.all_passed,
            "timings": self.timings,
        }


def _map_trials(config: ExperimentConfig, fn):
    indices = range(config.trials)
    if config.workers == 1:
        return [fn(config, i) for i in indices]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(lambda i: fn(config, i), indices))


def run_suite(config: ExperimentConfig) -> SuiteReport:
    start = time.perf_counter()
    per_trial = _map_trials(config, run_trial)
    elapsed = time.perf_counter() - start

    checks: dict[str, dict] = {}
    failures: list[dict] = []
    for results in per_trial:
        for r in results:
            suite, kind, tol = CHECKS[r.name]
            agg = checks.setdefault(r.name, {"suite": suite, "kind": kind, "tol": tol, "count": 0, "passed": 0})
            agg["count"] += 1
            agg["passed"] += int(r.passed)
            if kind == "identity":
                agg["max_abs_residual"] = max(agg.get("max_abs_residual", 0.0), abs(r.value))
            else:
                agg["min_slack"] = min(agg.get("min_slack", math.inf), r.value)
            if not r.passed:
                failures.append({"check": r.name, "value": r.value, "context": r.context})
    timings = {"total_seconds": elapsed, "seconds_per_trial": elapsed / config.trials}
    return SuiteReport(config.to_dict(), dict(sorted(checks.items())), failures, timings)


SWEEP_COLUMNS = ["trial_id", "seed", "d", "beta", "epsilon", "bound_name", "lhs", "rhs", "slack", "satisfied"]


def sweep_columns(axis: str) -> list[str]:
    """CSV header; the slice count only gets a column when it is the swept variable."""
    return SWEEP_COLUMNS + ["slices"] if axis == "N" else list(SWEEP_COLUMNS)


def sweep(config: ExperimentConfig, axis: str, values) -> list[dict]:
    """One row per (trial, axis value, bound) for the trial-path bounds.

    The ``N`` axis also emits Jarzynski and universal-relation identity rows,
    whose ``slack`` is ``rhs - lhs``.
    """
    if axis not in ("epsilon", "beta", "N"):
        raise ValueError(f"unknown sweep axis {axis!r}")
    values = list(values)
    if not values:
        raise ValueError("sweep grid is empty")

    def rows_for(cfg: ExperimentConfig, index: int) -> list[dict]:
        inp = trial_inputs(cfg, index)
        p = inp.protocol
        spec = FunctionalSpec(sine_coupling(cfg.lambda_amplitude, p.duration), inp.even_observable)
        rows = []
        for v in values:
            beta = float(v) if axis == "beta" else cfg.beta[0]
            eps = float(v) if axis == "epsilon" else cfg.trial.epsilon[0]
            N = int(v) if axis == "N" else cfg.slices
            pair = perturbed_pair(p, eps, inp.trial_seed, cfg.trial.mode)
            reports = [
                universal_inequality_report(pair, spec, beta, N),
                jarzynski_inequality_report(pair, beta, N),
                bogoliubov_report(pair, beta, N),
                norm_bound_report(pair, beta).jarzynski,
            ]
            if axis == "N":
                work_avg, fe_side = jarzynski_exact(p, beta, N)
                reports.append(BoundReport("jarzynski_identity", work_avg, fe_side, fe_side - work_avg,
                                           abs(work_avg - fe_side) <= 1e-10 * fe_side, {}))
                res = universal_relation_residual(p, spec, beta, N)
                reports.append(BoundReport("universal_relation", res, 0.0, -res, res <= 1e-9, {}))
            for r in reports:
                rows.append({
                    "trial_id": index, "seed": inp.seed, "d": cfg.dim, "beta": beta, "epsilon": eps,
                    "bound_name": r.name, "lhs": r.lhs, "rhs": r.rhs, "slack": r.slack,
                    "satisfied": bool(r.satisfied), "slices": N,
                })
        return rows

    return [row for rows in _map_trials(config, rows_for) for row in rows]
