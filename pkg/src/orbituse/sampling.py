"""Random scenario generation for verification batches and property suites.

Draw ranges: prices and costs in [0.1, 10], collision coefficient in
[0, 0.3], debris per satellite in [0.5, 2], legacy debris in [0, 8].
Draws are rejected until they satisfy the structural conditions the
comparative statics need: bounded marginal risk (kd < 1/2), valid survival
at the equilibrium, every sector interior, a strictly positive abatement
intercept, and a best-response map the iteration oracle can actually
contract on (spectral radius of the damped map below one; the slope bounds
alone do not guarantee this once four or more sectors interact strongly).
"""

from __future__ import annotations

import numpy as np

from .errors import OrbitUseError
from .open_access import _interaction_matrix, _system_arrays, solve_equilibrium
from .scenario import Scenario, TaxSchedule, validate_scenario

PRICE_RANGE = (0.1, 10.0)
COST_RANGE = (0.1, 10.0)
COLLISION_RANGE = (0.0, 0.3)
DEBRIS_PER_SAT_RANGE = (0.5, 2.0)
LEGACY_RANGE = (0.0, 8.0)
DAMAGES_RANGE = (0.05, 3.0)
ABATEMENT_COST_RANGE = (0.2, 5.0)

CONTRACTION_LIMIT = 0.99
INTERIOR_MARGIN = 1e-6
SURVIVAL_MARGIN = 1e-4
PHI_MARGIN = 1e-3


class SamplingExhausted(OrbitUseError):
    """Rejection sampling failed to produce a scenario within its budget."""


def _damped_spectral_radius(slopes: np.ndarray, damping: float = 0.5) -> float:
    matrix = (1.0 - damping) * np.eye(slopes.size) + damping * _interaction_matrix(slopes)
    return float(np.max(np.abs(np.linalg.eigvals(matrix))))


def sample_scenario(
    rng: np.random.Generator,
    n_sectors: int | None = None,
    sector_range: tuple[int, int] = (1, 6),
    collision_range: tuple[float, float] = COLLISION_RANGE,
    with_taxes: bool = False,
    tax_cap: float = 0.3,
    require_interior: bool = True,
    require_kessler_risk: bool = False,
    abatement: float = 0.0,
    max_tries: int = 1000,
) -> tuple[Scenario, TaxSchedule]:
    """Draw one scenario (and tax schedule) passing the validity filters.

    ``require_kessler_risk`` places the catastrophe threshold strictly
    below the zero-abatement debris stock, keeps enough debris headroom
    for the abatement stencils used by the treaty analyses, and is meant
    for treaty-facing batches. Strict-sign suites pass a ``collision_range``
    bounded away from zero, since every collision-mediated effect vanishes
    identically at k = 0.
    """
    for _ in range(max_tries):
        n_s = n_sectors if n_sectors is not None else int(rng.integers(sector_range[0], sector_range[1] + 1))
        n_m = n_s + int(rng.integers(0, 2))
        prices = tuple(rng.uniform(*PRICE_RANGE, size=n_m))
        costs = tuple(rng.uniform(*COST_RANGE, size=n_s))
        k = float(rng.uniform(*collision_range))
        d = float(rng.uniform(*DEBRIS_PER_SAT_RANGE))
        if k * d >= 0.5:
            continue
        legacy = float(rng.uniform(*LEGACY_RANGE))
        if 1.0 + k * (abatement - legacy) <= PHI_MARGIN:
            continue
        damages = float(rng.uniform(*DAMAGES_RANGE))
        cost_coeff = float(rng.uniform(*ABATEMENT_COST_RANGE))

        scenario = Scenario(
            n_markets=n_m,
            n_sectors=n_s,
            prices=prices,
            costs=costs,
            collision_coeff=k,
            debris_per_sat=d,
            legacy_debris=legacy,
            catastrophe_threshold=1.0,  # placeholder, repositioned below
            catastrophe_damages=damages,
            abatement_cost=cost_coeff,
        )
        if validate_scenario(scenario):
            continue
        if with_taxes:
            taxes = TaxSchedule.from_array(rng.uniform(0.0, tax_cap, size=(n_s, n_m)))
        else:
            taxes = TaxSchedule.zeros(n_s, n_m)

        _, _, _, _, _, slopes = _system_arrays(scenario, taxes, abatement)
        if _damped_spectral_radius(slopes) > CONTRACTION_LIMIT:
            continue
        try:
            equilibrium = solve_equilibrium(scenario, taxes, abatement)
        except OrbitUseError:
            continue
        fleets = equilibrium.fleet_array
        if require_interior and (
            not all(equilibrium.active)
            or fleets.min() <= INTERIOR_MARGIN * max(1.0, fleets.max())
        ):
            continue
        survival = equilibrium.debris.survival
        if not SURVIVAL_MARGIN <= survival <= 1.0:
            continue

        stock = equilibrium.debris.stock
        if require_kessler_risk:
            # Threshold strictly below today's debris, with room to probe
            # welfare at abatement levels up to 2 without the stock (and
            # with it the survival bound) leaving the valid range.
            if stock <= 2.2:
                continue
            threshold = float(rng.uniform(0.35, 0.85) * stock)
            if stock - threshold < 0.05:
                continue
        else:
            threshold = float(rng.uniform(0.5, 1.5) * max(stock, 1.0))
        scenario = Scenario(
            n_markets=n_m,
            n_sectors=n_s,
            prices=prices,
            costs=costs,
            collision_coeff=k,
            debris_per_sat=d,
            legacy_debris=legacy,
            catastrophe_threshold=threshold,
            catastrophe_damages=damages,
            abatement_cost=cost_coeff,
        )
        return scenario, taxes
    raise SamplingExhausted(f"no admissible scenario after {max_tries} draws")
