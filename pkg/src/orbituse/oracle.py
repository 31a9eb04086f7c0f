"""Independent brute-force verifiers for the solvers.

Everything here deliberately avoids the code paths it audits: the fleet
iteration applies the raw best-response formula instead of the dense
solve, the grid maximizer enumerates instead of calling the local
optimizer, and the deviation search spells out the abatement payoff
inline. A passing grid report certifies optimality on the grid only,
which is weaker than continuous optimality; tests state the radius they
certify.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError, NoConvergenceError
from .scenario import AbatementProfile, Scenario, TaxSchedule

GRID_BUDGET = 10**8
IMPROVEMENT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class OracleReport:
    """Outcome of one brute-force check."""

    target: str
    max_residual: float
    counterexamples: tuple
    passed: bool


def iterate_open_access(
    scenario: Scenario,
    taxes: TaxSchedule,
    abatement: float = 0.0,
    damping: float = 0.5,
    tolerance: float = 1e-12,
    max_iterations: int = 100_000,
) -> np.ndarray:
    """Damped synchronous best-response iteration from an empty orbit.

    Negative best responses clamp to zero. Converges whenever the damped
    map contracts; strongly coupled many-sector systems can cycle instead,
    which surfaces as NoConvergenceError rather than a wrong answer.
    """
    rates = taxes.as_array
    prices = scenario.price_array
    costs = scenario.cost_array
    k = scenario.collision_coeff
    d = scenario.debris_per_sat
    revenue = (1.0 - rates) @ prices
    denom = k * d * revenue + costs

    fleets = np.zeros(scenario.n_sectors)
    delta = np.inf
    for _ in range(max_iterations):
        rest = fleets.sum() - fleets
        response = revenue * (
            1.0 - k * (d * rest + scenario.legacy_debris - abatement)
        ) / denom
        np.maximum(response, 0.0, out=response)
        updated = (1.0 - damping) * fleets + damping * response
        delta = float(np.max(np.abs(updated - fleets)))
        fleets = updated
        if delta < tolerance:
            return fleets
    raise NoConvergenceError(
        f"best-response iteration still moving {delta:.3e} after "
        f"{max_iterations} iterations",
        last_iterate=fleets,
        update_norm=delta,
    )


def _grid_axis(step: float, lower: float, upper: float) -> np.ndarray:
    count = int(np.floor((upper - lower) / step + 1e-9)) + 1
    axis = lower + step * np.arange(count)
    if axis[-1] < upper - 1e-12:
        axis = np.append(axis, upper)
    return axis


def grid_maximize(
    func,
    dims: int,
    step: float,
    lower: float = 0.0,
    upper: float = 1.0,
) -> tuple[np.ndarray, float]:
    """Exhaustive maximization on a regular grid over a box.

    The grid always contains both box corners. Ties break to the
    lexicographically smallest argmax. Guards: at most 3 dimensions and
    at most 10^8 grid points.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    if dims > 3:
        raise ValueError("grid maximization is guarded to at most 3 dimensions")
    axis = _grid_axis(step, lower, upper)
    if float(axis.size) ** dims > GRID_BUDGET:
        raise BudgetExceededError(
            f"{axis.size}^{dims} grid points exceed the {GRID_BUDGET:.0e} budget"
        )
    best_point = None
    best_value = -np.inf
    for point in itertools.product(axis, repeat=dims):
        value = func(np.array(point))
        if value > best_value:
            best_value = value
            best_point = np.array(point)
    return best_point, float(best_value)


def finite_difference(func, x, index: int = 0) -> float:
    """Central difference of a scalar function along one coordinate."""
    point = np.atleast_1d(np.asarray(x, dtype=float)).copy()
    h = 1e-6 * max(1.0, abs(point[index]))
    hi = point.copy()
    lo = point.copy()
    hi[index] += h
    lo[index] -= h
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return (func(float(hi[0])) - func(float(lo[0]))) / (2.0 * h)
    return (func(hi) - func(lo)) / (2.0 * h)


def _payoff(alpha, beta, c, damages, own, total, qbar):
    # Abatement payoff written out so this check shares nothing with the
    # treaty module.
    averted = total >= qbar - 1e-12 * max(1.0, abs(qbar))
    benefit = np.where(averted, alpha - beta * qbar, alpha - beta * total - damages)
    return benefit - 0.5 * c * own**2


def deviation_search_abatement(
    scenario: Scenario,
    coefficients,
    profile: AbatementProfile,
    qbar: float,
    step: float = 1e-3,
) -> OracleReport:
    """Scan unilateral abatement deviations for every party on a grid.

    For each party, candidate contributions run over [0, qbar + 1] at the
    given step; any deviation improving that party's payoff by more than
    1e-9 is a counterexample. A pass certifies grid optimality at the
    scanned step only.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    c = scenario.abatement_cost
    damages = scenario.catastrophe_damages
    grid = _grid_axis(step, 0.0, qbar + 1.0)
    counterexamples = []
    worst = 0.0
    for party, coeff in enumerate(coefficients):
        own = profile.contributions[party]
        total = profile.total
        baseline = float(_payoff(coeff.alpha, coeff.beta, c, damages, own, total, qbar))
        totals = total - own + grid
        payoffs = _payoff(coeff.alpha, coeff.beta, c, damages, grid, totals, qbar)
        gains = payoffs - baseline
        best = int(np.argmax(gains))
        worst = max(worst, float(gains[best]))
        if gains[best] > IMPROVEMENT_TOLERANCE:
            counterexamples.append(
                (party, float(grid[best]), float(gains[best]))
            )
    return OracleReport(
        target="deviation_search_abatement",
        max_residual=worst,
        counterexamples=tuple(counterexamples),
        passed=not counterexamples,
    )
