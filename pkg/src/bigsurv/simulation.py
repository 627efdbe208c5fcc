"""Monte Carlo harness for the two bundled studies.

Study one stresses measurement error: a continuous-outcome universe
(``generate_population_sim1``) with a stratified big-data selection and
three scenarios -- proxies nowhere, proxies in the big source, proxies
in the probability sample.  Study two stresses unknown membership: a
categorical universe (``generate_population_sim2``) where membership
must be classified before integrating.

One population is built per study seed; each replicate redraws the
samples (study one: the design sample and the big-data selection; study
two: the design sample and the Bernoulli membership, holding the
outcomes fixed).  Replicate streams are keyed by
``(master_seed, replicate, attempt, role)``, so results are independent
of evaluation order and safe to compute concurrently.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import classifier
from .calibration import build_controls, solve_weights
from .estimators import BigDataTotals, DegenerateStratumError, pdi_total
from .linalg import SingularControlsError
from .measurement import MeasurementFitError, fit_measurement_model
from .population import (
    BigSample,
    FinitePopulation,
    ProbabilitySample,
    SRSJointInclusion,
    big_data_inclusion_probabilities,
    generate_population_sim1,
    generate_population_sim2,
)
from .rng import substream
from .variance import ht_variance_quadratic, regdi_residuals, variance_relative_bias

__all__ = [
    "SimConfig",
    "EstimatorSummary",
    "MonteCarloSummary",
    "summarize",
    "run_sim1",
    "run_sim2",
    "summary_rows",
]

# replicate-level failures that are redrawn with the next attempt stream
RETRYABLE = (
    DegenerateStratumError,
    SingularControlsError,
    MeasurementFitError,
    classifier.DegenerateFitError,
)

SIM1_ESTIMATORS = ("mean_a", "mean_b", "pdi", "regdi")
SIM2_ESTIMATORS = ("mean_a", "mean_b", "naive_di", "proposed_di", "original_di")


@dataclass(frozen=True)
class SimConfig:
    """Configuration for one study run.

    ``scenario`` only matters for study one.  ``stratum_sizes`` is the
    per-stratum big-data selection for study one; ``big_n`` the expected
    big-data size for study two.  ``regenerate_population`` rebuilds the
    universe every replicate instead of once per study.
    """

    study: str = "sim1"
    scenario: int = 1
    n_a: int = 1000
    replicates: int = 1000
    master_seed: int = 18
    pop_n: int | None = None
    big_n: int | None = None
    stratum_sizes: tuple[int, int] | None = None
    regenerate_population: bool = False
    workers: int = 1
    max_attempts: int = 100

    def resolved(self) -> "SimConfig":
        """Fill study-specific defaults."""
        if self.study not in ("sim1", "sim2"):
            raise ValueError("study must be 'sim1' or 'sim2'")
        pop_n = self.pop_n or (1_000_000 if self.study == "sim1" else 10_000)
        changes = {"pop_n": pop_n}
        if self.study == "sim1":
            if self.scenario not in (1, 2, 3):
                raise ValueError("scenario must be 1, 2, or 3")
            if self.stratum_sizes is None:
                changes["stratum_sizes"] = (
                    int(round(0.3 * pop_n)),
                    int(round(0.2 * pop_n)),
                )
        else:
            changes["big_n"] = self.big_n or pop_n // 2
        return replace(self, **changes)


@dataclass(frozen=True)
class EstimatorSummary:
    estimator: str
    bias: float
    se: float
    rmse: float


@dataclass(frozen=True)
class MonteCarloSummary:
    study: str
    scenario: str
    truth: float
    replicates: int
    rows: tuple[EstimatorSummary, ...]
    var_rel_bias: float | None
    failures: int

    def row(self, estimator: str) -> EstimatorSummary:
        for r in self.rows:
            if r.estimator == estimator:
                return r
        raise KeyError(estimator)


def summarize(estimates, truth: float) -> tuple[float, float, float]:
    """Monte Carlo ``(bias, se, rmse)`` of a sequence of estimates.

    ``se`` is the sample standard deviation across replicates (R - 1
    divisor) and ``rmse = sqrt(bias^2 + se^2)``.
    """
    est = np.asarray(list(estimates), float)
    if est.size < 2:
        raise ValueError("need at least two replicates")
    bias = float(est.mean()) - truth
    se = float(est.std(ddof=1))
    return bias, se, math.sqrt(bias * bias + se * se)


def _run_replicates(config: SimConfig, one_replicate):
    """Evaluate ``one_replicate(rep) -> (record, failures)`` for every rep."""
    reps = range(config.replicates)
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(one_replicate, reps))
    else:
        results = [one_replicate(r) for r in reps]
    records = [r for r, _ in results]
    failures = sum(f for _, f in results)
    return records, failures


def _with_attempts(config: SimConfig, attempt_fn, rep: int):
    failures = 0
    for attempt in range(config.max_attempts):
        try:
            return attempt_fn(rep, attempt), failures
        except RETRYABLE:
            failures += 1
    raise RuntimeError(
        f"replicate {rep} failed {config.max_attempts} times in a row"
    )


def _summaries(records, names, truths):
    rows = []
    for name in names:
        errors = np.array([rec[name] for rec in records]) - truths
        bias, se, rmse = summarize(errors, 0.0)
        rows.append(EstimatorSummary(name, bias, se, rmse))
    return tuple(rows)


# ---------------------------------------------------------------------------
# study one
# ---------------------------------------------------------------------------

def _sim1_replicate(pop: FinitePopulation, config: SimConfig, rep: int, attempt: int):
    seed = (config.master_seed, rep, attempt)
    if config.regenerate_population:
        pop = generate_population_sim1(config.pop_n, substream(seed, 9))
    n1, n2 = config.stratum_sizes
    rng_b = substream(seed, 1)
    delta = np.zeros(pop.N, np.int64)
    for label, n_h in ((1, n1), (2, n2)):
        pool = np.flatnonzero(pop.stratum == label)
        if n_h > pool.size:
            raise ValueError(f"stratum {label} holds {pool.size} < {n_h} units")
        keys = rng_b.random(pool.size)
        delta[pool[np.argpartition(keys, n_h)[:n_h]]] = 1

    sample = _draw_srs_fast(pop, config.n_a, substream(seed, 0), delta)
    mask = delta.astype(bool)
    N, N_b = pop.N, int(n1 + n2)
    t_b_y = float(pop.y[mask].sum())
    scen = config.scenario

    if scen == 1:
        observed_a, observed_b = sample.y, pop.y[mask]
        big_totals = BigDataTotals(T_b=t_b_y, N_b=N_b, N=N)
        spec = build_controls(
            "standard", delta=sample.delta, y=sample.y, N=N, N_b=N_b, T_b=t_b_y
        )
        cal = solve_weights(sample, spec.x, spec.totals, names=spec.names)
        regdi = float(np.dot(cal.w, sample.y))
        resid = regdi_residuals(sample, sample.y, spec.x)
        pdi = pdi_total(sample, sample.delta, sample.y, big_totals)
    elif scen == 2:
        t_b_star = float(pop.y_star[mask].sum())
        observed_a, observed_b = sample.y, pop.y_star[mask]
        big_totals = BigDataTotals(T_b=t_b_star, N_b=N_b, N=N)
        spec = build_controls(
            "proxy_ystar",
            delta=sample.delta,
            y_star=sample.y_star,
            N=N,
            N_b=N_b,
            T_b=t_b_star,
        )
        cal = solve_weights(sample, spec.x, spec.totals, names=spec.names)
        regdi = float(np.dot(cal.w, sample.y))
        resid = regdi_residuals(sample, sample.y, spec.x)
        pdi = pdi_total(sample, sample.delta, sample.y, big_totals)
    else:
        observed_a, observed_b = sample.y_star, pop.y[mask]
        big_totals = BigDataTotals(T_b=t_b_y, N_b=N_b, N=N)
        matched = sample.delta > 0
        model = fit_measurement_model(
            sample.y[matched], sample.y_star[matched], sample.d[matched]
        )
        y_hat = model.invert(sample.y_star)
        spec = build_controls(
            "standard", delta=sample.delta, y=sample.y, N=N, N_b=N_b, T_b=t_b_y
        )
        cal = solve_weights(sample, spec.x, spec.totals, names=spec.names)
        regdi = float(np.dot(cal.w, y_hat))
        resid = regdi_residuals(sample, y_hat, spec.x, kind="two_step")
        pdi = pdi_total(sample, sample.delta, sample.y_star, big_totals)

    vhat_mean = ht_variance_quadratic(sample, resid.e_hat) / (N * N)
    return {
        "mean_a": float(observed_a.mean()),
        "mean_b": float(observed_b.mean()),
        "pdi": pdi.mean,
        "regdi": regdi / N,
        "vhat_regdi": vhat_mean,
        "truth": float(pop.y.mean()),
    }


def _draw_srs_fast(pop, n, rng, delta):
    """SRS draw that reuses an externally materialised membership column."""
    idx = np.sort(rng.choice(pop.N, size=n, replace=False))
    return ProbabilitySample(
        unit_ids=idx + 1,
        d=np.full(n, pop.N / n),
        pi=np.full(n, n / pop.N),
        joint_pi=SRSJointInclusion(n=n, N=pop.N),
        N=pop.N,
        design="srs",
        y=pop.y[idx],
        y_star=None if pop.y_star is None else pop.y_star[idx],
        delta=delta[idx],
        z=None if pop.z is None else pop.z[idx],
    )


def run_sim1(config: SimConfig) -> MonteCarloSummary:
    """Run study one and summarise every estimator against the truth."""
    config = config.resolved()
    pop = generate_population_sim1(config.pop_n, substream(config.master_seed, 9))

    def attempt(rep, att):
        return _sim1_replicate(pop, config, rep, att)

    records, failures = _run_replicates(
        config, lambda rep: _with_attempts(config, attempt, rep)
    )
    truths = np.array([rec["truth"] for rec in records])
    rows = _summaries(records, SIM1_ESTIMATORS, truths)
    rb = variance_relative_bias(
        [(rec["regdi"], rec["vhat_regdi"]) for rec in records]
    )
    return MonteCarloSummary(
        study="sim1",
        scenario=str(config.scenario),
        truth=float(truths.mean()),
        replicates=config.replicates,
        rows=rows,
        var_rel_bias=rb,
        failures=failures,
    )


# ---------------------------------------------------------------------------
# study two
# ---------------------------------------------------------------------------

def _sim2_replicate(pop, probs, levels, config: SimConfig, rep: int, attempt: int):
    seed = (config.master_seed, rep, attempt)
    rng_b = substream(seed, 1)
    delta = (rng_b.random(pop.N) < probs).astype(np.int64)
    N_b = int(delta.sum())
    if N_b == 0 or N_b == pop.N:
        raise DegenerateStratumError("membership draw covered none or all units")
    mask = delta.astype(bool)
    y_b = pop.y[mask]
    z_b = pop.z[mask]
    t_b = float(y_b.sum())

    sample = _draw_srs_fast(pop, config.n_a, substream(seed, 0), delta)
    big = BigSample(
        unit_ids=np.flatnonzero(mask) + 1,
        values=y_b,
        multiplicity=delta[mask],
        N=pop.N,
        z=z_b,
    )

    m_tables = classifier.estimate_m(big, levels)
    u0 = classifier.initial_u(sample.z, sample.d, levels)
    fitted, post = classifier.em_fit(
        sample, classifier.ClassifierModel(pi=N_b / pop.N, m=m_tables, u=u0)
    )

    big_totals = BigDataTotals(T_b=t_b, N_b=N_b, N=pop.N)
    naive = pdi_total(sample, post.delta_hat, sample.y, big_totals)
    original = pdi_total(sample, sample.delta, sample.y, big_totals)
    proposed = classifier.pdi2_total(sample, big, fitted, N=pop.N)

    return {
        "mean_a": float(sample.y.mean()),
        "mean_b": float(y_b.mean()),
        "naive_di": naive.mean,
        "proposed_di": proposed.mean,
        "original_di": original.mean,
        "truth": float(pop.y.mean()),
        "em_iterations": len(post.loglik_trace) - 1,
    }


def run_sim2(config: SimConfig) -> MonteCarloSummary:
    """Run study two: classify membership, then integrate."""
    config = config.resolved()
    pop = generate_population_sim2(
        config.pop_n, config.big_n, substream(config.master_seed, 9)
    )
    probs = big_data_inclusion_probabilities(pop.z[:, 0], config.big_n)
    levels = tuple(int(pop.z[:, k].max()) for k in range(pop.z.shape[1]))

    def attempt(rep, att):
        return _sim2_replicate(pop, probs, levels, config, rep, att)

    records, failures = _run_replicates(
        config, lambda rep: _with_attempts(config, attempt, rep)
    )
    truths = np.array([rec["truth"] for rec in records])
    rows = _summaries(records, SIM2_ESTIMATORS, truths)
    return MonteCarloSummary(
        study="sim2",
        scenario=f"n_a={config.n_a}",
        truth=float(truths.mean()),
        replicates=config.replicates,
        rows=rows,
        var_rel_bias=None,
        failures=failures,
    )


def summary_rows(summary: MonteCarloSummary) -> list[dict]:
    """Flatten a summary into CSV-ready dictionaries."""
    out = []
    for row in summary.rows:
        out.append(
            {
                "study": summary.study,
                "scenario": summary.scenario,
                "estimator": row.estimator,
                "bias": row.bias,
                "se": row.se,
                "rmse": row.rmse,
                "var_rel_bias": (
                    summary.var_rel_bias
                    if row.estimator == "regdi" and summary.var_rel_bias is not None
                    else ""
                ),
                "failures": summary.failures,
            }
        )
    return out
