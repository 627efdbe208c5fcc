"""Finite populations, synthetic study populations, and sampling designs.

The package works with three kinds of objects:

* :class:`FinitePopulation` -- a columnar store of every unit in the
  universe (ids are implicitly ``1..N``),
* :class:`ProbabilitySample` -- a design sample with weights and a
  joint-inclusion-probability provider, and
* :class:`BigSample` -- the non-probability ("big data") source: a large
  subset of the universe observed without design weights.

Two synthetic populations are bundled.  ``generate_population_sim1``
builds a continuous-outcome universe with a proxy measurement and two
strata split on the latent covariate; ``generate_population_sim2``
builds a categorical-covariate universe where big-data membership is a
Bernoulli draw whose rate depends on the first covariate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .rng import substream

__all__ = [
    "EmptyPopulationError",
    "InfeasibleSelectionError",
    "UnitRecord",
    "FinitePopulation",
    "BigSample",
    "ProbabilitySample",
    "SRSJointInclusion",
    "generate_population_sim1",
    "generate_population_sim2",
    "big_data_inclusion_probabilities",
    "draw_srs",
    "select_big_data_stratified",
]


class EmptyPopulationError(ValueError):
    """Raised when an operation requires a non-empty population."""


class InfeasibleSelectionError(ValueError):
    """Raised when requested big-data inclusion rates leave ``(0, 1]``."""


def _frozen(a, dtype) -> np.ndarray:
    out = np.asarray(a, dtype=dtype)
    if out is a and out.flags.writeable:
        out = out.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class UnitRecord:
    """One population unit; mainly for inspection and file round-trips."""

    id: int
    y: float
    y_star: float | None
    z: tuple[int, ...]
    delta: int
    stratum: int | None


@dataclass(frozen=True, eq=False)
class FinitePopulation:
    """Columnar store of a finite universe.

    Parameters
    ----------
    y : array of float
        Study variable, one entry per unit.
    y_star : array of float, optional
        Proxy (possibly mismeasured) version of ``y``.
    z : int array of shape (N, K), optional
        Categorical matching variables, coded ``1..D_k``.
    delta : int array, optional
        Big-data membership per unit.  Zero means "not in the big
        source"; values above one are duplication multiplicities.
    stratum : int array, optional
        Stratum labels used by stratified selection.
    """

    y: np.ndarray
    y_star: np.ndarray | None = None
    z: np.ndarray | None = None
    delta: np.ndarray | None = None
    stratum: np.ndarray | None = None

    def __post_init__(self):
        y = _frozen(self.y, np.float64)
        if y.ndim != 1 or y.size == 0:
            raise EmptyPopulationError("population must hold at least one unit")
        object.__setattr__(self, "y", y)
        n = y.size
        for name, dtype, ndim in (
            ("y_star", np.float64, 1),
            ("z", np.int64, 2),
            ("delta", np.int64, 1),
            ("stratum", np.int64, 1),
        ):
            col = getattr(self, name)
            if col is None:
                continue
            col = _frozen(col, dtype)
            if col.ndim != ndim or col.shape[0] != n:
                raise ValueError(f"{name} must have {n} rows")
            object.__setattr__(self, name, col)
        if self.delta is None:
            object.__setattr__(self, "delta", _frozen(np.zeros(n, np.int64), np.int64))
        if (self.delta < 0).any():
            raise ValueError("delta entries must be non-negative")

    def __len__(self) -> int:
        return self.y.size

    @property
    def N(self) -> int:
        return self.y.size

    @property
    def N_b(self) -> int:
        """Big-data size counted with multiplicity."""
        return int(self.delta.sum())

    @property
    def W_b(self) -> float:
        return self.N_b / self.N

    @property
    def ids(self) -> np.ndarray:
        return np.arange(1, self.N + 1)

    def with_delta(self, delta) -> "FinitePopulation":
        """Copy of the population with a new membership column."""
        return replace(self, delta=np.asarray(delta, np.int64))

    def unit(self, unit_id: int) -> UnitRecord:
        i = int(unit_id) - 1
        if not 0 <= i < self.N:
            raise IndexError(f"unit id {unit_id} outside 1..{self.N}")
        return UnitRecord(
            id=int(unit_id),
            y=float(self.y[i]),
            y_star=None if self.y_star is None else float(self.y_star[i]),
            z=() if self.z is None else tuple(int(v) for v in self.z[i]),
            delta=int(self.delta[i]),
            stratum=None if self.stratum is None else int(self.stratum[i]),
        )

    def big_sample(self, value: str = "y") -> "BigSample":
        """View the ``delta >= 1`` units as a :class:`BigSample`.

        ``value`` picks which column is observed in the big source
        (``"y"`` or ``"y_star"``).
        """
        if value not in ("y", "y_star"):
            raise ValueError("value must be 'y' or 'y_star'")
        col = self.y if value == "y" else self.y_star
        if col is None:
            raise ValueError(f"population has no {value} column")
        idx = np.flatnonzero(self.delta > 0)
        return BigSample(
            unit_ids=idx + 1,
            values=col[idx],
            multiplicity=self.delta[idx],
            N=self.N,
            z=None if self.z is None else self.z[idx],
        )


@dataclass(frozen=True, eq=False)
class BigSample:
    """Non-probability source: observed units with no design weights."""

    unit_ids: np.ndarray
    values: np.ndarray
    multiplicity: np.ndarray
    N: int
    z: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "unit_ids", _frozen(self.unit_ids, np.int64))
        object.__setattr__(self, "values", _frozen(self.values, np.float64))
        object.__setattr__(self, "multiplicity", _frozen(self.multiplicity, np.int64))
        if self.z is not None:
            object.__setattr__(self, "z", _frozen(self.z, np.int64))
        k = self.unit_ids.size
        if self.values.size != k or self.multiplicity.size != k:
            raise ValueError("big-sample columns must have equal length")
        if (self.multiplicity < 1).any():
            raise ValueError("multiplicities must be >= 1")

    def __len__(self) -> int:
        return self.unit_ids.size

    @property
    def N_b(self) -> int:
        return int(self.multiplicity.sum())

    @property
    def W_b(self) -> float:
        return self.N_b / self.N

    @property
    def total(self) -> float:
        """Multiplicity-weighted total of the observed values."""
        return float(np.dot(self.multiplicity, self.values))


@dataclass(frozen=True)
class SRSJointInclusion:
    """Joint inclusion probabilities under simple random sampling."""

    n: int
    N: int

    def __call__(self, i: int, j: int) -> float:
        if i == j:
            return self.n / self.N
        return self.n * (self.n - 1) / (self.N * (self.N - 1))

    def pairwise(self, unit_ids) -> np.ndarray:
        k = len(unit_ids)
        off = self.n * (self.n - 1) / (self.N * (self.N - 1))
        out = np.full((k, k), off)
        np.fill_diagonal(out, self.n / self.N)
        return out


@dataclass(frozen=True, eq=False)
class ProbabilitySample:
    """Design sample: unit ids, weights, and joint inclusion metadata.

    ``joint_pi`` maps a pair of unit ids to their joint inclusion
    probability; it may also expose ``pairwise(unit_ids)`` returning the
    full matrix, which the variance code prefers.  Observed columns
    (``y``, ``y_star``, ``delta``, ``z``) are optional views of the
    parent population restricted to the drawn units.
    """

    unit_ids: np.ndarray
    d: np.ndarray
    pi: np.ndarray
    joint_pi: object
    N: int
    design: str = "generic"
    y: np.ndarray | None = None
    y_star: np.ndarray | None = None
    delta: np.ndarray | None = None
    z: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "unit_ids", _frozen(self.unit_ids, np.int64))
        object.__setattr__(self, "d", _frozen(self.d, np.float64))
        object.__setattr__(self, "pi", _frozen(self.pi, np.float64))
        k = self.unit_ids.size
        if self.d.size != k or self.pi.size != k:
            raise ValueError("weight columns must match the number of units")
        if k == 0:
            raise EmptyPopulationError("sample must hold at least one unit")
        if (self.pi <= 0).any() or (self.pi > 1).any():
            raise ValueError("inclusion probabilities must lie in (0, 1]")
        if np.max(np.abs(self.d * self.pi - 1.0)) > 1e-9:
            raise ValueError("design weights must be reciprocal inclusion probabilities")
        for name in ("y", "y_star"):
            col = getattr(self, name)
            if col is not None:
                object.__setattr__(self, name, _frozen(col, np.float64))
        if self.delta is not None:
            object.__setattr__(self, "delta", _frozen(self.delta, np.int64))
        if self.z is not None:
            object.__setattr__(self, "z", _frozen(self.z, np.int64))

    @property
    def n(self) -> int:
        return self.unit_ids.size

    @property
    def indices(self) -> np.ndarray:
        """Zero-based positions of the drawn units in the population."""
        return self.unit_ids - 1


# ---------------------------------------------------------------------------
# synthetic study populations
# ---------------------------------------------------------------------------

def generate_population_sim1(N: int, seed) -> FinitePopulation:
    """First bundled study population (continuous outcome with a proxy).

    A latent covariate ``x ~ Normal(2, 1)`` drives the outcome
    ``y = 3 + 0.7 (x - 2) + e`` with ``e ~ Normal(0, 0.51)`` (0.51 is the
    *variance*, chosen so that ``Var(y) = 1``).  The proxy is
    ``y* = 2 + 0.9 (y - 3) + u`` with ``u ~ Normal(0, 0.5^2)``.  Units
    split into stratum 1 (``x <= 2``, ties included) and stratum 2.
    """
    if N < 1:
        raise EmptyPopulationError("N must be positive")
    rng = substream(seed)
    x = rng.normal(2.0, 1.0, N)
    e = rng.normal(0.0, math.sqrt(0.51), N)
    y = 3.0 + 0.7 * (x - 2.0) + e
    u = rng.normal(0.0, 0.5, N)
    y_star = 2.0 + 0.9 * (y - 3.0) + u
    stratum = np.where(x <= 2.0, 1, 2).astype(np.int64)
    return FinitePopulation(y=y, y_star=y_star, stratum=stratum)


def big_data_inclusion_probabilities(z1, target_size: int) -> np.ndarray:
    """Per-unit big-data membership rates for the second study design.

    Units with ``z1 <= 10`` enter at rate ``c`` and units with
    ``z1 > 10`` at rate ``2c``, with ``c`` calibrated against the
    *realized* ``z1`` counts so the expected big-data size equals
    ``target_size`` exactly.
    """
    z1 = np.asarray(z1)
    if z1.size == 0:
        raise EmptyPopulationError("z1 must be non-empty")
    if target_size < 0:
        raise ValueError("target_size must be non-negative")
    n_hi = int((z1 > 10).sum())
    n_lo = z1.size - n_hi
    c = target_size / (n_lo + 2 * n_hi)
    if 2 * c > 1.0:
        raise InfeasibleSelectionError(
            f"target size {target_size} needs rate {2 * c:.3f} > 1 in the high arm"
        )
    return np.where(z1 <= 10, c, 2 * c)


def generate_population_sim2(N: int, N_B: int, seed) -> FinitePopulation:
    """Second bundled study population (categorical matching variables).

    ``z1 ~ Uniform{1..20}`` drives both membership and the outcome
    regime; ``z2 ~ Uniform{1..10}`` is an extra matching variable that
    is independent of membership given ``z1``.  The high-propensity arm
    (``z1 > 10``, rate ``2c``) carries the flatter, lower-mean outcome
    ``y = 4 + 0.5 (z2 + e)`` while the low-propensity arm carries
    ``y = 6 + 0.3 (z2 + e)``, with ``e ~ Uniform(0, 1)`` -- so a raw
    big-data mean understates the population mean.  Membership ``delta``
    is one Bernoulli draw per unit at the calibrated rates.
    """
    if N < 1:
        raise EmptyPopulationError("N must be positive")
    rng = substream(seed)
    z1 = rng.integers(1, 21, N)
    z2 = rng.integers(1, 11, N)
    e = rng.uniform(0.0, 1.0, N)
    y = np.where(z1 <= 10, 6.0 + 0.3 * (z2 + e), 4.0 + 0.5 * (z2 + e))
    probs = big_data_inclusion_probabilities(z1, N_B)
    delta = (rng.random(N) < probs).astype(np.int64)
    z = np.column_stack([z1, z2])
    return FinitePopulation(y=y, z=z, delta=delta)


# ---------------------------------------------------------------------------
# designs
# ---------------------------------------------------------------------------

def draw_srs(pop: FinitePopulation, n: int, seed) -> ProbabilitySample:
    """Draw a simple random sample (without replacement) of size ``n``.

    The returned sample carries design weights ``N/n``, the SRS joint
    inclusion provider, and views of the population columns for the
    drawn units (sorted by unit id).
    """
    N = pop.N
    if not 1 <= n <= N:
        raise ValueError(f"sample size {n} outside 1..{N}")
    rng = substream(seed)
    idx = np.sort(rng.choice(N, size=n, replace=False))
    return ProbabilitySample(
        unit_ids=idx + 1,
        d=np.full(n, N / n),
        pi=np.full(n, n / N),
        joint_pi=SRSJointInclusion(n=n, N=N),
        N=N,
        design="srs",
        y=pop.y[idx],
        y_star=None if pop.y_star is None else pop.y_star[idx],
        delta=pop.delta[idx],
        z=None if pop.z is None else pop.z[idx],
    )


def _srs_positions(m: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Positions of a uniform k-subset of range(m)."""
    if k == m:
        return np.arange(m)
    # keeping the k smallest of iid uniform keys is an exact SRS and is
    # cheaper than a full permutation when k is a large share of m
    keys = rng.random(m)
    return np.argpartition(keys, k)[:k]


def select_big_data_stratified(
    pop: FinitePopulation, sizes: Mapping[int, int], seed
) -> FinitePopulation:
    """Mark a stratified simple random selection as the big-data source.

    ``sizes`` maps stratum label to the number of units selected within
    that stratum.  Returns a population copy whose ``delta`` column is 1
    exactly on the selected units.
    """
    if pop.stratum is None:
        raise ValueError("population has no stratum column")
    rng = substream(seed)
    delta = np.zeros(pop.N, np.int64)
    for label in sorted(sizes):
        n_h = int(sizes[label])
        pool = np.flatnonzero(pop.stratum == label)
        if pool.size == 0:
            raise ValueError(f"stratum {label} has no units")
        if not 0 <= n_h <= pool.size:
            raise ValueError(
                f"stratum {label}: requested {n_h} of {pool.size} units"
            )
        if n_h:
            delta[pool[_srs_positions(pool.size, n_h, rng)]] = 1
    return pop.with_delta(delta)
