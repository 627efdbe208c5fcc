"""Semi-supervised naive-Bayes classification of big-data membership.

When the probability sample cannot be matched to the big source by id,
membership is predicted from shared categorical variables ``z``.  The
class-conditional level frequencies inside the big source (``m``) are
observed directly; the frequencies outside (``u``) are estimated by an
EM run over the probability sample with the membership prior
``pi = N_b / N`` held fixed.  Posteriors then correct the big-data
totals by inverse-propensity weighting.

The E-step posterior for a unit with levels ``z`` is

    p(z) = pi * prod_k m_k[z_k] / (pi * prod_k m_k[z_k]
                                   + (1 - pi) * prod_k u_k[z_k])

and the M-step re-estimates each ``u_k`` as the design-weighted,
posterior-(1-p)-weighted level frequencies.  The design-weighted
observed-data log-likelihood is non-decreasing across iterations; the
fitter enforces that invariant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimators import DegenerateStratumError, EstimateReport
from .population import BigSample, ProbabilitySample

__all__ = [
    "DegenerateFitError",
    "AscentViolationError",
    "ClassifierModel",
    "PosteriorSet",
    "PropensityTotals",
    "estimate_m",
    "initial_u",
    "posterior",
    "classify",
    "em_fit",
    "propensity_totals",
    "pdi2_total",
]

# tolerated floating-point slack when asserting log-likelihood ascent
ASCENT_SLACK = 1e-10


class DegenerateFitError(RuntimeError):
    """EM collapsed: no posterior mass left outside the big source."""


class AscentViolationError(RuntimeError):
    """The observed-data log-likelihood decreased across an EM iteration."""


def _check_tables(tables, what: str):
    out = []
    for k, t in enumerate(tables):
        t = np.asarray(t, float)
        if t.ndim != 1 or t.size == 0:
            raise ValueError(f"{what}[{k}] must be a non-empty vector")
        if (t < -1e-12).any() or (t > 1 + 1e-12).any():
            raise ValueError(f"{what}[{k}] entries must lie in [0, 1]")
        if abs(t.sum() - 1.0) > 1e-10:
            raise ValueError(f"{what}[{k}] must sum to one")
        t = t.copy()
        t.setflags(write=False)
        out.append(t)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class ClassifierModel:
    """Naive-Bayes membership model: prior plus per-variable level tables."""

    pi: float
    m: tuple[np.ndarray, ...]
    u: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not 0.0 < self.pi < 1.0:
            raise ValueError("pi must lie strictly between 0 and 1")
        m = _check_tables(self.m, "m")
        u = _check_tables(self.u, "u")
        if len(m) != len(u) or any(a.size != b.size for a, b in zip(m, u)):
            raise ValueError("m and u must have matching shapes")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "u", u)

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(t.size for t in self.m)


@dataclass(frozen=True, eq=False)
class PosteriorSet:
    """Per-unit membership posteriors and hard labels."""

    p_hat: np.ndarray
    delta_hat: np.ndarray
    loglik_trace: tuple[float, ...] = ()
    design_weighted_mean: float | None = None


@dataclass(frozen=True)
class PropensityTotals:
    """Inverse-propensity-corrected big-data totals."""

    N_b2: float
    T_b2: float
    classified: int


def _validate_z(z, levels) -> np.ndarray:
    z = np.asarray(z, np.int64)
    z = z[:, None] if z.ndim == 1 else z
    if z.shape[1] != len(levels):
        raise ValueError(f"z has {z.shape[1]} columns, model has {len(levels)}")
    for k, D in enumerate(levels):
        col = z[:, k]
        if col.min() < 1 or col.max() > D:
            raise ValueError(f"z column {k + 1} outside 1..{D}")
    return z


def estimate_m(big: BigSample, levels=None) -> tuple[np.ndarray, ...]:
    """Level frequencies of each matching variable inside the big source.

    ``levels`` enumerates the domain sizes ``D_k``; by default they are
    inferred from the observed maxima.  Levels never seen in the big
    source keep frequency zero -- that is what the available data say.
    """
    if big.z is None or len(big) == 0:
        raise ValueError("big sample must carry z rows")
    z = big.z[:, None] if big.z.ndim == 1 else big.z
    if levels is None:
        levels = tuple(int(z[:, k].max()) for k in range(z.shape[1]))
    out = []
    for k, D in enumerate(levels):
        counts = np.bincount(z[:, k] - 1, minlength=D).astype(float)
        out.append(counts / z.shape[0])
    return tuple(out)


def initial_u(z, d, levels, jitter_seed=None) -> tuple[np.ndarray, ...]:
    """Starting tables for EM: smoothed design-weighted frequencies.

    Each cell receives ``1 / (2 n)`` before normalisation so every
    enumerated level starts with support.  ``jitter_seed`` perturbs the
    start multiplicatively for multi-start exploration.
    """
    z = _validate_z(z, levels)
    d = np.asarray(d, float)
    n = z.shape[0]
    rng = None if jitter_seed is None else np.random.default_rng(jitter_seed)
    out = []
    for k, D in enumerate(levels):
        freq = np.bincount(z[:, k] - 1, weights=d, minlength=D)
        freq = freq / freq.sum() + 1.0 / (2 * n)
        if rng is not None:
            freq = freq * rng.uniform(0.8, 1.2, D)
        out.append(freq / freq.sum())
    return tuple(out)


def _products(tables, z: np.ndarray) -> np.ndarray:
    out = tables[0][z[:, 0] - 1].copy()
    for k in range(1, z.shape[1]):
        out *= tables[k][z[:, k] - 1]
    return out


def _posterior_from_products(pi: float, m_prod: np.ndarray, u_prod: np.ndarray):
    a = pi * m_prod
    b = (1.0 - pi) * u_prod
    denom = a + b
    if (denom <= 0.0).any():
        raise DegenerateFitError(
            "posterior undefined: a level has zero frequency in both sources"
        )
    return a / denom, denom


def posterior(model: ClassifierModel, z) -> np.ndarray:
    """Membership posterior for each row of ``z`` under ``model``."""
    z = _validate_z(z, model.levels)
    p, _ = _posterior_from_products(
        model.pi, _products(model.m, z), _products(model.u, z)
    )
    return p


def classify(posteriors) -> np.ndarray:
    """Hard labels: 1 when the posterior strictly exceeds one half."""
    p = np.asarray(getattr(posteriors, "p_hat", posteriors), float)
    return (p > 0.5).astype(np.int64)


def em_fit(
    sample: ProbabilitySample,
    model: ClassifierModel,
    tol: float = 1e-8,
    max_iter: int = 1000,
) -> tuple[ClassifierModel, PosteriorSet]:
    """Estimate the outside-source tables ``u`` by EM on the design sample.

    ``model`` supplies the fixed prior ``pi``, the fixed inside tables
    ``m``, and the starting ``u``.  Iterates until the largest ``u``
    change falls below ``tol`` or ``max_iter`` is reached.  Raises
    :class:`AscentViolationError` if the design-weighted log-likelihood
    ever decreases beyond floating slack, and
    :class:`DegenerateFitError` if the posterior mass outside the big
    source vanishes.
    """
    if sample.z is None:
        raise ValueError("sample must carry z rows")
    z = _validate_z(sample.z, model.levels)
    # collapse to unique z rows: the posterior is a function of the cell,
    # so EM cost scales with distinct cells rather than sample size
    rows, inverse = np.unique(z, axis=0, return_inverse=True)
    w = np.bincount(inverse, weights=sample.d)
    m_prod = _products(model.m, rows)
    u = [t.copy() for t in model.u]
    levels = model.levels

    trace: list[float] = []
    p_cells = None
    for _ in range(max_iter):
        p_cells, cell_lik = _posterior_from_products(model.pi, m_prod, _products(u, rows))
        ll = float(np.dot(w, np.log(cell_lik)))
        if trace and ll < trace[-1] - ASCENT_SLACK * max(1.0, abs(trace[-1])):
            raise AscentViolationError(
                f"log-likelihood decreased from {trace[-1]!r} to {ll!r}"
            )
        trace.append(ll)
        out_mass = w * (1.0 - p_cells)
        denom = out_mass.sum()
        if denom <= 0.0:
            raise DegenerateFitError("no design weight left outside the big source")
        biggest = 0.0
        new_u = []
        for k, D in enumerate(levels):
            table = np.bincount(rows[:, k] - 1, weights=out_mass, minlength=D) / denom
            biggest = max(biggest, float(np.max(np.abs(table - u[k]))))
            new_u.append(table)
        u = new_u
        if biggest <= tol:
            break

    # final E-step so the returned posteriors match the returned tables
    p_cells, cell_lik = _posterior_from_products(model.pi, m_prod, _products(u, rows))
    ll = float(np.dot(w, np.log(cell_lik)))
    if trace and ll < trace[-1] - ASCENT_SLACK * max(1.0, abs(trace[-1])):
        raise AscentViolationError(
            f"log-likelihood decreased from {trace[-1]!r} to {ll!r}"
        )
    trace.append(ll)
    p_hat = p_cells[inverse]
    fitted = ClassifierModel(pi=model.pi, m=model.m, u=tuple(u))
    posteriors = PosteriorSet(
        p_hat=p_hat,
        delta_hat=classify(p_hat),
        loglik_trace=tuple(trace),
        design_weighted_mean=float(np.dot(sample.d, p_hat) / sample.d.sum()),
    )
    return fitted, posteriors


def propensity_totals(big: BigSample, model: ClassifierModel) -> PropensityTotals:
    """Inverse-propensity totals over the big source.

    Units the model labels as members contribute ``(1, y) / p_hat``;
    units it mislabels contribute nothing, and the division by the
    posterior compensates on average.
    """
    if big.z is None:
        raise ValueError("big sample must carry z rows")
    p = posterior(model, big.z)
    labels = classify(p)
    keep = labels == 1
    inv = big.multiplicity[keep] / p[keep]
    return PropensityTotals(
        N_b2=float(inv.sum()),
        T_b2=float(np.dot(inv, big.values[keep])),
        classified=int(keep.sum()),
    )


def pdi2_total(
    sample: ProbabilitySample, big: BigSample, model: ClassifierModel, N: int | None = None
) -> EstimateReport:
    """Post-stratified data integration with classified membership.

    Replaces the unknown matched membership with model labels on the
    design sample and the big-data totals with their
    inverse-propensity-corrected versions.  Valid when membership is
    ignorable given the matching variables.
    """
    if sample.z is None or sample.y is None:
        raise ValueError("sample must carry z rows and y values")
    if N is None:
        N = big.N
    delta_hat = classify(posterior(model, sample.z))
    pt = propensity_totals(big, model)
    # the corrected big-data size N_b2 is real-valued, so the
    # post-stratified formula is applied directly here
    out_mask = delta_hat == 0
    denom = float(sample.d[out_mask].sum())
    if denom <= 0.0:
        raise DegenerateStratumError(
            "no sampled units classified outside the big-data source"
        )
    out_weighted = float(np.dot(sample.d[out_mask], sample.y[out_mask]))
    total = pt.T_b2 + (float(N) - pt.N_b2) * out_weighted / denom
    return EstimateReport(
        estimator="pdi2",
        total=total,
        population_size=int(N),
        notes=("assumes membership is ignorable given the matching variables",),
    )
