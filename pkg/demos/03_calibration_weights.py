"""
Calibration weighting and its post-stratification identity
==========================================================

Calibration perturbs the design weights as little as possible
(chi-square distance) subject to hitting known control totals.  With
the standard controls -- overall count, covered count, covered outcome
total -- the calibrated estimator reproduces post-stratified
integration exactly, while the weight view adds diagnostics and
generalizes to richer controls.
"""

import numpy as np

from bigsurv import (
    BigDataTotals,
    build_controls,
    draw_srs,
    generate_population_sim1,
    pdi_total,
    regdi_total,
    select_big_data_stratified,
    solve_weights,
)

# Tiny worked example first: two units with weight 2 each, one control
# (the population size, 6).  The solver scales both weights to 3.
from bigsurv import ProbabilitySample

toy = ProbabilitySample(
    unit_ids=np.array([1, 2]),
    d=np.array([2.0, 2.0]),
    pi=np.array([0.5, 0.5]),
    joint_pi=None,
    N=6,
)
result = solve_weights(toy, np.ones((2, 1)), [6.0])
print(f"toy weights: {result.w}  (design weights were {toy.d})")
print(f"achieved total: {result.achieved_totals[0]:.1f} (wanted 6)")

# Now the real thing.
pop = generate_population_sim1(100_000, seed=20_250_816)
marked = select_big_data_stratified(pop, {1: 30_000, 2: 20_000}, seed=11)
big = marked.big_sample()
sample = draw_srs(marked, n=1_000, seed=7)

spec = build_controls(
    "standard",
    delta=sample.delta,
    y=sample.y,
    N=pop.N,
    N_b=big.N_b,
    T_b=big.total,
)
print(f"\ncontrol names:  {spec.names}")
print(f"control totals: {np.asarray(spec.totals).round(1)}")

weights = solve_weights(sample, spec.x, spec.totals, names=spec.names)
print(f"weight range:   [{weights.w.min():.1f}, {weights.w.max():.1f}]")
print(f"negative:       {weights.negative_weights}")

# The algebraic identity: calibrated total == post-stratified total.
regdi = regdi_total(sample, sample.y, spec)
pdi = pdi_total(
    sample,
    sample.delta,
    sample.y,
    BigDataTotals(T_b=big.total, N_b=big.N_b, N=pop.N),
)
print(f"\ncalibrated      {regdi.mean:.10f}")
print(f"post-stratified {pdi.mean:.10f}")
print(f"difference      {abs(regdi.total - pdi.total):.2e}")

# Richer controls drop straight in.  Here: calibrate the proxy outcome
# against the big source's proxy total (useful when the big source only
# records the distorted scale).
proxy_spec = build_controls(
    "proxy_ystar",
    delta=sample.delta,
    y_star=sample.y_star,
    N=pop.N,
    N_b=big.N_b,
    T_b=float(marked.big_sample(value="y_star").total),
)
proxy = regdi_total(sample, sample.y, proxy_spec)
print(f"\nproxy-control calibration, true-scale answer: {proxy.mean:.4f}")
print(f"truth: {pop.y.mean():.4f}")
