"""Verification suites: every structural claim checked against brute force.

Each checker takes a batch of (scenario, taxes, abatement) bundles and
returns an :class:`~orbituse.oracle.OracleReport`. The `verify` CLI
command runs all of them on the loaded scenario plus seeded random
batches; the acceptance tests run the same checkers at their full batch
sizes.
"""

from __future__ import annotations

import numpy as np

from .errors import OrbitUseError
from .open_access import (
    ANALYTIC,
    FINITE_DIFFERENCE,
    decompose,
    reduce_two_player,
    sensitivities,
    solve_equilibrium,
)
from .oracle import (
    OracleReport,
    deviation_search_abatement,
    grid_maximize,
    iterate_open_access,
)
from .regulation import national_welfare, welfare_channels
from .sampling import sample_scenario
from .scenario import Scenario, TaxSchedule, sector_profit
from .treaty import (
    MODEL_DERIVED,
    CLOSED_FORM,
    abatement_payoff,
    analyze_treaty,
)

Bundle = tuple[Scenario, TaxSchedule, float]


def _report(target, residual, counterexamples) -> OracleReport:
    return OracleReport(
        target=target,
        max_residual=float(residual),
        counterexamples=tuple(counterexamples),
        passed=not counterexamples,
    )


def check_equilibrium_agreement(bundles: list[Bundle]) -> OracleReport:
    """Matrix solve vs damped iteration, plus the zero-profit condition."""
    worst = 0.0
    bad = []
    for index, (scenario, taxes, abatement) in enumerate(bundles):
        solved = solve_equilibrium(scenario, taxes, abatement)
        iterated = iterate_open_access(scenario, taxes, abatement)
        gap = float(np.max(np.abs(solved.fleet_array - iterated)))
        profit = max(
            abs(sector_profit(scenario, taxes, solved.fleets, abatement, i))
            for i in range(scenario.n_sectors)
            if solved.active[i]
        ) if any(solved.active) else 0.0
        residual = max(gap, profit, solved.max_profit_residual)
        worst = max(worst, residual)
        if gap > 1e-9 or profit > 1e-9:
            bad.append((index, gap, profit))
    return _report("equilibrium_agreement", worst, bad)


def check_reduction(bundles: list[Bundle]) -> OracleReport:
    """Two-player collapse preserves each sector and the complement total."""
    worst = 0.0
    bad = []
    for index, (scenario, taxes, abatement) in enumerate(bundles):
        full = solve_equilibrium(scenario, taxes, abatement)
        fleets = full.fleet_array
        for sector in range(scenario.n_sectors):
            pair = reduce_two_player(scenario, taxes, abatement, sector)
            own_gap = abs(pair.fleets[0] - fleets[sector])
            rest_gap = abs(pair.fleets[1] - (fleets.sum() - fleets[sector]))
            residual = max(own_gap, rest_gap)
            worst = max(worst, residual)
            if residual > 1e-9:
                bad.append((index, sector, residual))
    return _report("two_player_reduction", worst, bad)


def check_decomposition(bundles: list[Bundle]) -> OracleReport:
    """r is abatement-free bitwise; fleets = sigma * r; sigma affine in Q."""
    worst = 0.0
    bad = []
    for index, (scenario, taxes, abatement) in enumerate(bundles):
        probes = (abatement, abatement + 0.35, abatement + 0.7)
        solutions = [solve_equilibrium(scenario, taxes, q) for q in probes]
        r_values = [decompose(eq)[1] for eq in solutions]
        if any(not np.array_equal(r_values[0], other) for other in r_values[1:]):
            bad.append((index, "r not bitwise identical across abatement"))
            continue
        for eq in solutions:
            sigma, r = decompose(eq)
            recon = float(np.max(np.abs(sigma * r - eq.fleet_array)))
            worst = max(worst, recon)
            if recon > 1e-12:
                bad.append((index, "fleets != sigma*r", recon))
        sigmas = [np.array(eq.sigma) for eq in solutions]
        collinear = float(np.max(np.abs(sigmas[0] - 2.0 * sigmas[1] + sigmas[2])))
        worst = max(worst, collinear)
        if collinear > 1e-10:
            bad.append((index, "sigma not affine in abatement", collinear))
    return _report("decomposition", worst, bad)


def check_sensitivity_agreement(bundles: list[Bundle]) -> OracleReport:
    """Analytic and finite-difference sensitivities agree entrywise."""
    worst = 0.0
    bad = []
    for index, (scenario, taxes, abatement) in enumerate(bundles):
        analytic = sensitivities(scenario, taxes, abatement, method=ANALYTIC)
        numeric = sensitivities(scenario, taxes, abatement, method=FINITE_DIFFERENCE)
        for name in ("dfleet_dtax", "dfleet_dabatement", "drequired_dtax"):
            a = np.asarray(getattr(analytic, name), dtype=float)
            b = np.asarray(getattr(numeric, name), dtype=float)
            scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8)
            gap = float(np.max(np.abs(a - b) / scale))
            worst = max(worst, gap)
            if gap > 1e-5:
                bad.append((index, name, gap))
        gap = abs(analytic.ddebris_dabatement - numeric.ddebris_dabatement) / max(
            abs(analytic.ddebris_dabatement), abs(numeric.ddebris_dabatement), 1e-8
        )
        worst = max(worst, gap)
        if gap > 1e-5:
            bad.append((index, "ddebris_dabatement", gap))
    return _report("sensitivity_agreement", worst, bad)


def _fd_fleets_tax(scenario, taxes, abatement, sector, market):
    rate = taxes.rate(sector, market)
    h = 1e-6 * max(1.0, abs(rate))
    hi = solve_equilibrium(scenario, taxes.with_rate(sector, market, rate + h), abatement)
    lo = solve_equilibrium(scenario, taxes.with_rate(sector, market, rate - h), abatement)
    return (hi.fleet_array - lo.fleet_array) / (2.0 * h)


def _fd_fleets_abatement(scenario, taxes, abatement):
    h = 1e-6 * max(1.0, abs(abatement))
    hi = solve_equilibrium(scenario, taxes, abatement + h)
    lo = solve_equilibrium(scenario, taxes, abatement - h)
    return (
        (hi.fleet_array - lo.fleet_array) / (2.0 * h),
        (hi.debris.stock - lo.debris.stock) / (2.0 * h),
    )


def check_sign_suite(bundles: list[Bundle]) -> OracleReport:
    """Finite-difference comparative statics sign pattern.

    Own-tax contraction, cross-sector rebound, dominated rebound (total
    fleet and required abatement fall), abatement-driven expansion with a
    tax-damped slope, and debris falling in abatement.
    """
    bad = []
    for index, (scenario, taxes, abatement) in enumerate(bundles):
        d_ab, d_debris = _fd_fleets_abatement(scenario, taxes, abatement)
        if not np.all(d_ab > 0.0):
            bad.append((index, "dfleet_dabatement not positive"))
        if d_debris >= 0.0:
            bad.append((index, "ddebris_dabatement not negative"))
        for sector in range(scenario.n_sectors):
            for market in range(scenario.n_markets):
                grad = _fd_fleets_tax(scenario, taxes, abatement, sector, market)
                if grad[sector] >= 0.0:
                    bad.append((index, sector, market, "own fleet does not fall"))
                others = np.delete(grad, sector)
                if others.size and not np.all(others > 0.0):
                    bad.append((index, sector, market, "rebound not positive"))
                if grad.sum() >= 0.0:
                    bad.append((index, sector, market, "total fleet does not fall"))
                # Cross effect: abatement expansion flattens as the tax rises.
                rate = taxes.rate(sector, market)
                h = 1e-4 * max(1.0, abs(rate))
                up, _ = _fd_fleets_abatement(
                    scenario, taxes.with_rate(sector, market, rate + h), abatement
                )
                down, _ = _fd_fleets_abatement(
                    scenario, taxes.with_rate(sector, market, rate - h), abatement
                )
                if (up[sector] - down[sector]) / (2.0 * h) >= 0.0:
                    bad.append((index, sector, market, "cross derivative not negative"))
    return _report("comparative_statics_signs", float(len(bad)), bad)


def _fd_welfare_tax(scenario, taxes, abatement, sector, market) -> float:
    """Richardson-extrapolated central difference of one market's welfare.

    The plain central difference at h = 1e-6 cannot resolve the 1e-9
    absolute identity tolerance once welfare reaches O(100); two stencils
    at h and h/2 combined to fourth order can.
    """
    rate = taxes.rate(sector, market)
    h = 1e-3 * max(1.0, abs(rate))

    def central(step: float) -> float:
        hi = national_welfare(
            scenario, taxes.with_rate(sector, market, rate + step), abatement
        ).welfare[market]
        lo = national_welfare(
            scenario, taxes.with_rate(sector, market, rate - step), abatement
        ).welfare[market]
        return (hi - lo) / (2.0 * step)

    return (4.0 * central(h / 2.0) - central(h)) / 3.0


def check_channel_identity(bundles: list[Bundle]) -> OracleReport:
    """cleanup + expansion - reduction equals the FD welfare derivative."""
    worst = 0.0
    bad = []
    for index, (scenario, taxes, abatement) in enumerate(bundles):
        for sector in range(scenario.n_sectors):
            for market in range(scenario.n_markets):
                channels = welfare_channels(scenario, taxes, abatement, sector, market)
                fd = _fd_welfare_tax(scenario, taxes, abatement, sector, market)
                gap = abs(channels.total - fd)
                worst = max(worst, gap)
                if gap > 1e-9:
                    bad.append((index, sector, market, gap))
    return _report("welfare_channel_identity", worst, bad)


def check_welfare_quadratic(bundles: list[Bundle]) -> OracleReport:
    """Welfare is exactly quadratic in abatement: constant second differences."""
    worst = 0.0
    bad = []
    step = 0.5
    for index, (scenario, taxes, abatement) in enumerate(bundles):
        stencil = [abatement + step * n for n in range(5)]
        for market in range(scenario.n_markets):
            values = [
                national_welfare(scenario, taxes, q).welfare[market] for q in stencil
            ]
            second = [
                values[n] - 2.0 * values[n + 1] + values[n + 2] for n in range(3)
            ]
            spread = max(second) - min(second)
            worst = max(worst, spread)
            if spread > 1e-10:
                bad.append((index, market, spread))
    return _report("welfare_quadratic_in_abatement", worst, bad)


def check_treaty_consistency(bundles: list[Bundle]) -> OracleReport:
    """Threshold treaty conditions match their payoff-level counterparts."""
    worst = 0.0
    bad = []
    guard = 1e-9
    for index, (scenario, taxes, abatement) in enumerate(bundles):
        for variant in (MODEL_DERIVED, CLOSED_FORM):
            analysis = analyze_treaty(scenario, taxes, variant)
            qbar = analysis.qbar
            burden = analysis.per_party_burden
            for party, coeff in enumerate(analysis.coefficients):
                bound = coeff.beta * burden + 0.5 * scenario.abatement_cost * burden**2
                margin = scenario.catastrophe_damages - bound
                stay = abatement_payoff(scenario, coeff, burden, qbar, qbar)
                drop = abatement_payoff(scenario, coeff, 0.0, qbar - burden, qbar)
                if abs(margin) > guard and (margin > 0.0) != (stay - drop > 0.0):
                    bad.append((index, variant, party, "no-defection bound vs payoffs"))
                response = analysis.responses[party]
                in_treaty = coeff.marginal_benefit(qbar) - 0.5 * scenario.abatement_cost * burden**2
                avert_raw = coeff.marginal_benefit(qbar) - 0.5 * scenario.abatement_cost * (
                    qbar - response.raw
                ) ** 2
                cond_margin = in_treaty - avert_raw
                if abs(cond_margin) > guard and analysis.condition27[party] != (
                    cond_margin > 0.0
                ):
                    bad.append((index, variant, party, "self-enforcement vs payoffs"))
                if not response.clamped and qbar > 0.0:
                    residual = abs(
                        coeff.marginal_benefit(qbar)
                        - 0.5 * scenario.abatement_cost * (qbar - response.q_rest) ** 2
                        - coeff.marginal_benefit(response.q_rest)
                        + scenario.catastrophe_damages
                    )
                    worst = max(worst, residual)
                    if residual > 1e-9:
                        bad.append((index, variant, party, "indifference residual", residual))
    return _report("treaty_condition_consistency", worst, bad)


def check_nash_certification(bundles: list[Bundle], step: float = 1e-3) -> OracleReport:
    """Every listed Nash profile survives the exhaustive deviation search."""
    worst = 0.0
    bad = []
    for index, (scenario, taxes, abatement) in enumerate(bundles):
        for variant in (MODEL_DERIVED, CLOSED_FORM):
            analysis = analyze_treaty(scenario, taxes, variant)
            for profile in analysis.nash_equilibria:
                report = deviation_search_abatement(
                    scenario, analysis.coefficients, profile, analysis.qbar, step
                )
                worst = max(worst, report.max_residual)
                if not report.passed:
                    bad.append((index, variant, profile.contributions, report.counterexamples))
    return _report("nash_certification", worst, bad)


def certify_regulatory_equilibrium(
    scenario: Scenario,
    taxes: TaxSchedule,
    abatement: float = 0.0,
    coordinate_step: float = 1e-3,
    joint_step: float = 0.2,
    max_gain: float = 1e-6,
) -> OracleReport:
    """Unilateral grid-deviation probe for a converged tax schedule.

    For each market: a per-coordinate sweep of that market's column at
    ``coordinate_step``, plus a coarse joint grid at ``joint_step`` when
    the column has at most three entries. A pass certifies no market can
    gain more than ``max_gain`` on the probed grid, which is weaker than
    continuous optimality.
    """
    worst = 0.0
    bad = []
    base_welfare = national_welfare(scenario, taxes, abatement).welfare
    for market in range(scenario.n_markets):
        incumbent = base_welfare[market]

        def deviation_value(column) -> float:
            try:
                report = national_welfare(
                    scenario, taxes.with_column(market, column), abatement
                )
            except OrbitUseError:
                return -np.inf
            return report.welfare[market]

        column = np.array([taxes.rate(i, market) for i in range(scenario.n_sectors)])
        axis = np.arange(0.0, 1.0 + coordinate_step / 2.0, coordinate_step)
        for coord in range(scenario.n_sectors):
            for value in axis:
                probe = column.copy()
                probe[coord] = value
                gain = deviation_value(probe) - incumbent
                worst = max(worst, gain)
                if gain > max_gain:
                    bad.append((market, coord, float(value), float(gain)))
        if scenario.n_sectors <= 3:
            _, best = grid_maximize(
                deviation_value, dims=scenario.n_sectors, step=joint_step
            )
            gain = best - incumbent
            worst = max(worst, gain)
            if gain > max_gain:
                bad.append((market, "joint", float(gain)))
    return _report("regulatory_deviation_probe", worst, bad)


def _batch(rng, count, **kwargs) -> list[Bundle]:
    bundles = []
    for _ in range(count):
        scenario, taxes = sample_scenario(rng, **kwargs)
        bundles.append((scenario, taxes, 0.0))
    return bundles


def run_verification(
    scenario: Scenario,
    taxes: TaxSchedule,
    abatement: float,
    seed: int,
    random_count: int = 40,
) -> list[OracleReport]:
    """Full oracle battery on one scenario plus seeded random batches."""
    rng = np.random.default_rng(seed)
    loaded: list[Bundle] = [(scenario, taxes, abatement)]
    general = _batch(rng, random_count, with_taxes=True)
    interior = _batch(rng, random_count, with_taxes=True, sector_range=(2, 6))
    multi = _batch(rng, max(10, random_count // 2), with_taxes=True, sector_range=(3, 6))
    treaty = _batch(
        rng, max(10, random_count // 2), with_taxes=True, require_kessler_risk=True,
        sector_range=(1, 4),
    )

    def attempt(checker, bundles, name):
        try:
            return checker(bundles)
        except OrbitUseError as error:
            return OracleReport(
                target=name,
                max_residual=float("nan"),
                counterexamples=((type(error).__name__, str(error)),),
                passed=False,
            )

    loaded_ok: list[Bundle] = []
    try:
        solve_equilibrium(scenario, taxes, abatement)
        loaded_ok = loaded
    except OrbitUseError:
        pass

    reports = [
        attempt(check_equilibrium_agreement, loaded_ok + general, "equilibrium_agreement"),
        attempt(check_reduction, [b for b in loaded_ok if b[0].n_sectors >= 2] + multi, "two_player_reduction"),
        attempt(check_decomposition, loaded_ok + general, "decomposition"),
        attempt(check_sensitivity_agreement, interior, "sensitivity_agreement"),
        attempt(check_sign_suite, interior, "comparative_statics_signs"),
        attempt(check_channel_identity, interior[: max(5, random_count // 4)], "welfare_channel_identity"),
        attempt(check_welfare_quadratic, treaty, "welfare_quadratic_in_abatement"),
        attempt(check_treaty_consistency, treaty, "treaty_condition_consistency"),
        attempt(check_nash_certification, treaty, "nash_certification"),
    ]
    return reports
