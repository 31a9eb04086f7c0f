"""Model parameters and the stateless physical/economic primitives.

A :class:`Scenario` bundles every exogenous parameter of one orbit-use
world; :class:`TaxSchedule` carries the sector-by-market rates that
markets impose as conditions for access. The functions here are pure:
the debris law, the survival probability, and sector profit. Solvers
live in :mod:`orbituse.open_access` and above.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Scenario:
    """Immutable economic/physical parameter bundle.

    Vectors are stored as tuples so instances hash, compare by value,
    and can be shared freely between concurrent workers.
    """

    n_markets: int                  # markets (nations) receiving services
    n_sectors: int                  # spacefaring sectors, <= n_markets
    prices: tuple[float, ...]       # per-market service price, each > 0
    costs: tuple[float, ...]        # per-sector cost efficiency, each > 0
    collision_coeff: float          # collision probability per unit of debris
    debris_per_sat: float           # debris created over one satellite lifecycle
    legacy_debris: float            # debris unrelated to ongoing orbit use
    catastrophe_threshold: float    # debris level that tips runaway growth
    catastrophe_damages: float      # lump-sum damages once the threshold is crossed
    abatement_cost: float           # quadratic abatement cost coefficient
    treaty_parties: int | None = None   # defaults to n_markets

    def __post_init__(self):
        object.__setattr__(self, "prices", tuple(float(p) for p in self.prices))
        object.__setattr__(self, "costs", tuple(float(m) for m in self.costs))
        if self.treaty_parties is None:
            object.__setattr__(self, "treaty_parties", self.n_markets)

    @cached_property
    def price_array(self) -> np.ndarray:
        arr = np.array(self.prices, dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def cost_array(self) -> np.ndarray:
        arr = np.array(self.costs, dtype=float)
        arr.setflags(write=False)
        return arr


@dataclass(frozen=True)
class TaxSchedule:
    """Sector-by-market matrix of access-tax rates.

    Rate 1.0 means the market denies the sector access entirely. Rates
    are not clamped here: derivative stencils probe slightly outside
    [0, 1], and :func:`validate_taxes` reports range violations.
    """

    rates: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "rates", tuple(tuple(float(v) for v in row) for row in self.rates)
        )

    @classmethod
    def zeros(cls, n_sectors: int, n_markets: int) -> "TaxSchedule":
        return cls(tuple((0.0,) * n_markets for _ in range(n_sectors)))

    @classmethod
    def from_array(cls, rates) -> "TaxSchedule":
        arr = np.atleast_2d(np.asarray(rates, dtype=float))
        return cls(tuple(tuple(row) for row in arr))

    @cached_property
    def as_array(self) -> np.ndarray:
        arr = np.array(self.rates, dtype=float)
        arr.setflags(write=False)
        return arr

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rates), len(self.rates[0]) if self.rates else 0)

    def rate(self, sector: int, market: int) -> float:
        return self.rates[sector][market]

    def with_rate(self, sector: int, market: int, value: float) -> "TaxSchedule":
        rows = [list(row) for row in self.rates]
        rows[sector][market] = float(value)
        return TaxSchedule(tuple(tuple(row) for row in rows))

    def with_column(self, market: int, column) -> "TaxSchedule":
        rows = [list(row) for row in self.rates]
        for sector, value in enumerate(column):
            rows[sector][market] = float(value)
        return TaxSchedule(tuple(tuple(row) for row in rows))


@dataclass(frozen=True)
class AbatementProfile:
    """Per-party debris abatement contributions and their total."""

    contributions: tuple[float, ...]
    total: float

    def __post_init__(self):
        object.__setattr__(
            self, "contributions", tuple(float(q) for q in self.contributions)
        )
        if abs(self.total - sum(self.contributions)) > 1e-12:
            raise ValueError("total must equal the sum of contributions to 1e-12")

    @classmethod
    def from_contributions(cls, contributions) -> "AbatementProfile":
        contributions = tuple(float(q) for q in contributions)
        return cls(contributions, sum(contributions))


@dataclass(frozen=True)
class DebrisState:
    """Long-run debris stock with its survival and catastrophe flags."""

    stock: float
    survival: float
    catastrophe: bool
    physically_valid: bool


def validate_scenario(scenario: Scenario) -> list[str]:
    """Return every violated scenario constraint; empty list iff valid."""
    report = []
    if scenario.n_markets < 1:
        report.append("n_markets must be a positive integer")
    if scenario.n_sectors < 1:
        report.append("n_sectors must be a positive integer")
    if scenario.n_sectors > scenario.n_markets:
        report.append("n_sectors must be <= n_markets")
    if len(scenario.prices) != scenario.n_markets:
        report.append(
            f"prices must have length n_markets={scenario.n_markets}, "
            f"got {len(scenario.prices)}"
        )
    if len(scenario.costs) != scenario.n_sectors:
        report.append(
            f"costs must have length n_sectors={scenario.n_sectors}, "
            f"got {len(scenario.costs)}"
        )
    if any(p <= 0 for p in scenario.prices):
        report.append("prices must be > 0")
    if any(m <= 0 for m in scenario.costs):
        report.append("costs must be > 0")
    if scenario.collision_coeff < 0:
        report.append("collision_coeff must be >= 0")
    if scenario.debris_per_sat < 0:
        report.append("debris_per_sat must be >= 0")
    if scenario.legacy_debris < 0:
        report.append("legacy_debris must be >= 0")
    if scenario.catastrophe_threshold <= 0:
        report.append("catastrophe_threshold must be > 0")
    if scenario.catastrophe_damages < 0:
        report.append("catastrophe_damages must be >= 0")
    if scenario.abatement_cost <= 0:
        report.append("abatement_cost must be > 0")
    if scenario.treaty_parties is not None and scenario.treaty_parties < 1:
        report.append("treaty_parties must be a positive integer")
    return report


def validate_taxes(scenario: Scenario, taxes: TaxSchedule) -> list[str]:
    """Return every violated tax-schedule constraint; empty list iff valid."""
    report = []
    n_s, n_m = taxes.shape
    if (n_s, n_m) != (scenario.n_sectors, scenario.n_markets):
        report.append(
            f"tax matrix must be {scenario.n_sectors}x{scenario.n_markets}, "
            f"got {n_s}x{n_m}"
        )
        return report
    for i, row in enumerate(taxes.rates):
        for j, rate in enumerate(row):
            if not 0.0 <= rate <= 1.0:
                report.append(f"tax rate [{i}][{j}]={rate} outside [0, 1]")
    return report


class ScenarioShapeError(ValueError):
    """Tax matrix shape does not match the scenario dimensions."""

    def __init__(self, scenario: Scenario, shape):
        super().__init__(
            f"tax matrix shape {shape} does not match scenario "
            f"({scenario.n_sectors} sectors x {scenario.n_markets} markets)"
        )


def effective_prices(scenario: Scenario, taxes: TaxSchedule) -> np.ndarray:
    """Per-sector revenue weight: sum over markets of price times (1 - tax)."""
    rates = taxes.as_array
    if rates.shape != (scenario.n_sectors, scenario.n_markets):
        raise ScenarioShapeError(scenario, rates.shape)
    return (1.0 - rates) @ scenario.price_array


def debris_stock(scenario: Scenario, total_fleet: float, abatement: float) -> DebrisState:
    """Long-run debris stock for a total fleet and net abatement level.

    Invalid survival (outside [0, 1]) flags the state rather than raising:
    sweeps record invalid corners, solvers refuse them.
    """
    stock = scenario.debris_per_sat * total_fleet + scenario.legacy_debris - abatement
    survival = 1.0 - scenario.collision_coeff * stock
    return DebrisState(
        stock=float(stock),
        survival=float(survival),
        catastrophe=bool(stock > scenario.catastrophe_threshold),
        physically_valid=0.0 <= survival <= 1.0,
    )


def survival_probability(scenario: Scenario, debris: float) -> tuple[float, bool]:
    """Raw survival probability at a debris stock, plus its validity flag."""
    value = 1.0 - scenario.collision_coeff * debris
    return value, 0.0 <= value <= 1.0


def sector_profit(
    scenario: Scenario,
    taxes: TaxSchedule,
    fleets,
    abatement: float,
    sector: int,
) -> float:
    """Net profit of one sector given the full fleet vector.

    Zero at any open-access equilibrium; meaningful off equilibrium too.
    """
    fleets = np.asarray(fleets, dtype=float)
    if not 0 <= sector < scenario.n_sectors:
        raise IndexError(f"sector index {sector} out of range [0, {scenario.n_sectors})")
    state = debris_stock(scenario, float(fleets.sum()), abatement)
    revenue_weight = effective_prices(scenario, taxes)[sector]
    size = fleets[sector]
    return state.survival * revenue_weight * size - scenario.costs[sector] * size**2


# Reference scenarios used across the test and verification suites.
# Symmetric parameters keep every quantity hand-checkable in closed form.
SOLO = Scenario(
    n_markets=1,
    n_sectors=1,
    prices=(1.0,),
    costs=(1.0,),
    collision_coeff=0.0,
    debris_per_sat=1.0,
    legacy_debris=0.0,
    catastrophe_threshold=2.0,
    catastrophe_damages=1.0,
    abatement_cost=1.0,
)

SYM2 = Scenario(
    n_markets=2,
    n_sectors=2,
    prices=(1.0, 1.0),
    costs=(1.0, 1.0),
    collision_coeff=0.1,
    debris_per_sat=1.0,
    legacy_debris=0.0,
    catastrophe_threshold=2.0,
    catastrophe_damages=1.0,
    abatement_cost=1.0,
)

HIDEB = replace(SYM2, legacy_debris=5.0)
