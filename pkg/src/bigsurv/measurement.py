"""Linear measurement-error model between a proxy and the true outcome.

The proxy is modelled as ``y* = beta0 + beta1 * y + error`` and fitted
by the design-weighted estimating equation

    sum_i d_i (y*_i - beta0 - beta1 y_i) (1, y_i) = (0, 0)

over the units observed in both sources.  Once fitted, proxies are
converted back to the outcome scale by inversion, and the two-step
regression data-integration estimator calibrates the inverted values
against the standard controls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import build_controls, solve_weights
from .estimators import EstimateReport
from .population import BigSample, ProbabilitySample

__all__ = [
    "MeasurementFitError",
    "MeasurementModel",
    "LinearizationTerms",
    "fit_measurement_model",
    "invert_measurement",
    "linearization_terms",
    "two_step_regdi",
]

# slopes this small make inversion numerically meaningless
MIN_SLOPE = 1e-6


class MeasurementFitError(ValueError):
    """The matched subsample cannot identify the measurement model."""


@dataclass(frozen=True)
class MeasurementModel:
    """Fitted linear map from outcome to proxy scale."""

    beta0: float
    beta1: float
    sigma2: float
    n_fit: int

    def forward(self, y):
        """Proxy-scale prediction ``beta0 + beta1 * y``."""
        return self.beta0 + self.beta1 * np.asarray(y, float)

    def invert(self, y_star):
        """Outcome-scale value solving ``y* = beta0 + beta1 * y``."""
        if abs(self.beta1) < MIN_SLOPE:
            raise MeasurementFitError(
                f"slope {self.beta1:.2e} too close to zero to invert"
            )
        return (np.asarray(y_star, float) - self.beta0) / self.beta1

    def regressors(self, y) -> np.ndarray:
        """Estimating-equation regressors ``(1, y)`` as rows."""
        y = np.asarray(y, float)
        return np.column_stack([np.ones_like(y), y])


@dataclass(frozen=True, eq=False)
class LinearizationTerms:
    """Pieces needed to linearize estimators built on inverted proxies.

    ``q`` is the inverted value per unit and ``q_dot`` its derivative in
    the model parameters, ``(-1/beta1, -q/beta1)`` for the linear model.
    ``m_dot`` and ``h`` (both ``(1, y)`` rows) are present when the true
    outcome was supplied.
    """

    q: np.ndarray
    q_dot: np.ndarray
    m_dot: np.ndarray | None = None
    h: np.ndarray | None = None


def fit_measurement_model(y, y_star, d=None) -> MeasurementModel:
    """Fit the proxy model on units where both scales are observed.

    ``sigma2`` is the design-weighted mean squared residual, reported
    for diagnostics only.
    """
    y = np.asarray(y, float)
    y_star = np.asarray(y_star, float)
    if y.shape != y_star.shape or y.ndim != 1:
        raise ValueError("y and y_star must be matched one-dimensional arrays")
    if y.size < 2:
        raise MeasurementFitError("need at least two matched units")
    d = np.ones_like(y) if d is None else np.asarray(d, float)
    wsum = d.sum()
    ybar = float(np.dot(d, y)) / wsum
    sbar = float(np.dot(d, y_star)) / wsum
    syy = float(np.dot(d, (y - ybar) ** 2))
    if syy <= 0.0:
        raise MeasurementFitError("matched outcome values are constant; slope not identified")
    beta1 = float(np.dot(d, (y - ybar) * (y_star - sbar))) / syy
    beta0 = sbar - beta1 * ybar
    resid = y_star - beta0 - beta1 * y
    return MeasurementModel(
        beta0=beta0,
        beta1=beta1,
        sigma2=float(np.dot(d, resid**2)) / wsum,
        n_fit=int(y.size),
    )


def invert_measurement(y_star, model: MeasurementModel):
    """Convert proxy values to the outcome scale (see ``MeasurementModel.invert``)."""
    return model.invert(y_star)


def linearization_terms(y_star, model: MeasurementModel, y=None) -> LinearizationTerms:
    q = model.invert(y_star)
    q_dot = np.column_stack([np.full_like(q, -1.0 / model.beta1), -q / model.beta1])
    if y is None:
        return LinearizationTerms(q=q, q_dot=q_dot)
    rows = model.regressors(y)
    return LinearizationTerms(q=q, q_dot=q_dot, m_dot=rows, h=rows)


def two_step_regdi(
    sample: ProbabilitySample, big: BigSample, N: int | None = None
) -> EstimateReport:
    """Two-step estimator for a proxy-measured probability sample.

    Step one fits the measurement model on the matched units (``delta
    == 1`` in the sample, true outcome known from the big source) and
    inverts every sampled proxy.  Step two calibrates on the standard
    controls -- which only involve the matched true outcomes -- and sums
    the calibrated weights against the inverted values.
    """
    if sample.y_star is None or sample.delta is None or sample.y is None:
        raise ValueError("sample must carry y_star, delta, and matched y values")
    if N is None:
        N = big.N
    matched = sample.delta > 0
    model = fit_measurement_model(
        sample.y[matched], sample.y_star[matched], sample.d[matched]
    )
    y_hat = model.invert(sample.y_star)
    # the standard controls only touch delta * y, so unmatched entries
    # (which may be missing) are zeroed rather than propagating NaN
    spec = build_controls(
        "standard",
        delta=sample.delta,
        y=np.where(matched, sample.y, 0.0),
        N=N,
        N_b=big.N_b,
        T_b=big.total,
    )
    result = solve_weights(sample, spec.x, spec.totals, names=spec.names)
    return EstimateReport(
        estimator="two_step_regdi",
        total=float(np.dot(result.w, y_hat)),
        population_size=int(N),
        controls=spec.variant,
        notes=(f"measurement model fitted on {model.n_fit} matched units",),
    )
