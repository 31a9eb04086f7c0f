"""Debris-abatement game: benefit coefficients, Nash profiles, treaty design.

Every party's marginal benefit from total abatement is linear because
welfare is exactly quadratic in abatement. Two coefficient variants ship
side by side: the model-derived pair extracted from the welfare curve
itself, and the closed-form pair the two-player analysis prescribes. The
variants disagree (in sign of the slope, not just magnitude) on symmetric
desk cases, so every treaty analysis carries a divergence report and never
silently prefers one. Payoffs, Nash certification, the defection response,
and the self-enforcement condition all follow from the chosen pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ActiveSetChangeError
from .open_access import _system_arrays, required_abatement, solve_equilibrium
from .regulation import national_welfare
from .scenario import AbatementProfile, Scenario, TaxSchedule

MODEL_DERIVED = "model-derived"
CLOSED_FORM = "closed-form"

COEFFICIENT_AGREEMENT = 1e-6
NASH_GAIN_TOLERANCE = 1e-9
BRANCH_TOLERANCE = 1e-12


@dataclass(frozen=True)
class BenefitCoefficients:
    """Marginal abatement benefit b(Q) = alpha - beta * Q for one party."""

    alpha: float
    beta: float
    variant: str
    fit_residual: float | None = None   # model-derived only

    def marginal_benefit(self, total_abatement: float) -> float:
        return self.alpha - self.beta * total_abatement


@dataclass(frozen=True)
class CoefficientDivergence:
    """Side-by-side comparison of the two coefficient variants for one party."""

    party: int
    model: BenefitCoefficients
    closed_form: BenefitCoefficients
    alpha_gap: float
    beta_gap: float
    agree: bool


@dataclass(frozen=True)
class TreatyResponse:
    """Abatement the remaining signatories supply after one party defects."""

    raw: float          # smallest root of the defector's indifference equation
    q_rest: float       # raw clamped into [0, required abatement]
    clamped: bool


@dataclass(frozen=True)
class TreatyAnalysis:
    """Full abatement-game analysis for one scenario and coefficient variant."""

    variant: str
    qbar: float
    per_party_burden: float
    coefficients: tuple[BenefitCoefficients, ...]
    divergences: tuple[CoefficientDivergence, ...]
    nash_equilibria: tuple[AbatementProfile, ...]
    zero_profile_is_nash: bool
    symmetric_profile_is_nash: bool
    no_defection_bound: float
    averting_sustainable: bool
    responses: tuple[TreatyResponse, ...]
    condition27: tuple[bool, ...]
    self_enforcing: bool
    payoff_prefers_treaty: tuple[bool, ...]


def _market_welfare(scenario: Scenario, taxes: TaxSchedule, abatement: float, market: int):
    report = national_welfare(scenario, taxes, abatement)
    return report.welfare[market]


def _model_coefficients(
    scenario: Scenario, taxes: TaxSchedule, party: int
) -> BenefitCoefficients:
    if party >= scenario.n_markets:
        return BenefitCoefficients(0.0, 0.0, MODEL_DERIVED, 0.0)
    stencil = (0.0, 1.0, 2.0)
    masks = []
    values = []
    for q in stencil:
        equilibrium = solve_equilibrium(scenario, taxes, q)
        masks.append(equilibrium.active)
        kept = (1.0 - taxes.as_array[:, party]) @ equilibrium.fleet_array
        values.append(
            equilibrium.debris.survival * scenario.prices[party] * kept
        )
    if len(set(masks)) != 1:
        raise ActiveSetChangeError(
            "sector activity changed across the abatement stencil; "
            "the welfare curve is only piecewise quadratic there"
        )
    w0, w1, w2 = values
    beta = 2.0 * w1 - w0 - w2                  # minus the curvature
    alpha = (-3.0 * w0 + 4.0 * w1 - w2) / 2.0  # slope at zero abatement
    predicted = w0 + alpha * 0.5 - beta * 0.125
    residual = abs(_market_welfare(scenario, taxes, 0.5, party) - predicted)
    return BenefitCoefficients(float(alpha), float(beta), MODEL_DERIVED, float(residual))


def _complement_r(scenario: Scenario, taxes: TaxSchedule, sector: int | None) -> float:
    """Sustainable-size factor of the aggregated rest-of-world player."""
    _, _, r, _, _, slopes = _system_arrays(scenario, taxes, 0.0)
    kd = scenario.collision_coeff * scenario.debris_per_sat
    others = [j for j in range(scenario.n_sectors) if j != sector]
    if not others:
        return 0.0
    v = sum(slopes[j] / (1.0 + slopes[j]) for j in others)
    if kd > 0.0:
        return float(-(v / (1.0 - v)) / kd)
    return float(sum(r[j] for j in others))


def _closed_form_coefficients(
    scenario: Scenario, taxes: TaxSchedule, party: int
) -> BenefitCoefficients:
    sector = party if party < scenario.n_sectors else None
    kd = scenario.collision_coeff * scenario.debris_per_sat
    k = scenario.collision_coeff
    if sector is None:
        # A party without a sector enters the two-group form with a null
        # own player: both coefficients collapse to zero.
        return BenefitCoefficients(0.0, 0.0, CLOSED_FORM)
    _, _, r, _, _, _ = _system_arrays(scenario, taxes, 0.0)
    r_own = float(r[sector])
    r_rest = _complement_r(scenario, taxes, sector)
    denominator = 1.0 - (kd**2) * r_own * r_rest
    alpha = r_own**2 * k * (1.0 - kd * r_rest) ** 2 / denominator
    beta = 2.0 * k * alpha * kd * r_own
    return BenefitCoefficients(float(alpha), float(beta), CLOSED_FORM)


def benefit_coefficients(
    scenario: Scenario,
    taxes: TaxSchedule,
    party: int,
    variant: str = MODEL_DERIVED,
) -> BenefitCoefficients:
    """Linear marginal-benefit coefficients for one party.

    The model-derived variant fits the exact quadratic through welfare at
    abatement levels {0, 1, 2}; the closed-form variant evaluates the
    closed two-player expressions with the rest of the world aggregated.
    """
    if variant == MODEL_DERIVED:
        return _model_coefficients(scenario, taxes, party)
    if variant == CLOSED_FORM:
        return _closed_form_coefficients(scenario, taxes, party)
    raise ValueError(f"unknown coefficient variant {variant!r}")


def coefficient_divergence(
    scenario: Scenario, taxes: TaxSchedule, party: int
) -> CoefficientDivergence:
    """Both coefficient variants for one party, with their gaps."""
    model = _model_coefficients(scenario, taxes, party)
    closed = _closed_form_coefficients(scenario, taxes, party)
    alpha_gap = abs(model.alpha - closed.alpha)
    beta_gap = abs(model.beta - closed.beta)
    return CoefficientDivergence(
        party=party,
        model=model,
        closed_form=closed,
        alpha_gap=alpha_gap,
        beta_gap=beta_gap,
        agree=bool(alpha_gap <= COEFFICIENT_AGREEMENT and beta_gap <= COEFFICIENT_AGREEMENT),
    )


def abatement_payoff(
    scenario: Scenario,
    coefficients: BenefitCoefficients,
    own_abatement: float,
    total_abatement: float,
    qbar: float,
) -> float:
    """One party's payoff from its contribution given total abatement.

    Benefits accrue at the threshold level once catastrophe is averted;
    below the threshold, damages hit and benefits accrue at the realized
    total. The quadratic cost is always paid on the own contribution.
    """
    cost = 0.5 * scenario.abatement_cost * own_abatement**2
    averted = total_abatement >= qbar - BRANCH_TOLERANCE * max(1.0, abs(qbar))
    if averted:
        return coefficients.marginal_benefit(qbar) - cost
    return (
        coefficients.marginal_benefit(total_abatement)
        - scenario.catastrophe_damages
        - cost
    )


def treaty_response(
    scenario: Scenario, coefficients: BenefitCoefficients, qbar: float
) -> TreatyResponse:
    """Remaining-signatory abatement that leaves a defector indifferent.

    Solves (c/2) x^2 + beta x - X = 0 for the shortfall x = qbar - response
    and keeps the larger root (the smaller response). Negative raw
    responses are clamped to zero: the defector would then avert alone.
    """
    c = scenario.abatement_cost
    beta = coefficients.beta
    raw = qbar + (beta - math.sqrt(beta**2 + 2.0 * c * scenario.catastrophe_damages)) / c
    clamped_value = min(max(raw, 0.0), qbar)
    return TreatyResponse(
        raw=float(raw), q_rest=float(clamped_value), clamped=bool(raw < 0.0)
    )


def _best_zero_profile_gain(
    scenario: Scenario, coeff: BenefitCoefficients, qbar: float
) -> float:
    """Best unilateral payoff gain available from the all-zero profile."""
    c = scenario.abatement_cost
    damages = scenario.catastrophe_damages
    if qbar <= 0.0:
        return 0.0
    gains = [damages - coeff.beta * qbar - 0.5 * c * qbar**2]  # avert alone
    if coeff.beta < 0.0:
        q = min(-coeff.beta / c, qbar)
        gains.append(-coeff.beta * q - 0.5 * c * q**2)         # free-ride uphill
    return max(0.0, *gains)


def _best_symmetric_deviation_gain(
    scenario: Scenario, coeff: BenefitCoefficients, qbar: float, parties: int
) -> float:
    """Best unilateral payoff gain from the equal-burden averting profile."""
    c = scenario.abatement_cost
    damages = scenario.catastrophe_damages
    if qbar <= 0.0:
        return 0.0
    burden = qbar / parties
    candidates = [0.0]
    if coeff.beta < 0.0:
        candidates.append(min(-coeff.beta / c, burden))
    best = 0.0
    for q in candidates:
        if q >= burden:
            continue
        gain = (
            coeff.beta * (burden - q)
            - damages
            + 0.5 * c * (burden**2 - q**2)
        )
        best = max(best, gain)
    return best


def analyze_treaty(
    scenario: Scenario,
    taxes: TaxSchedule,
    variant: str = MODEL_DERIVED,
    qbar: float | None = None,
) -> TreatyAnalysis:
    """Full abatement-game analysis: Nash profiles, responses, enforcement.

    Candidate Nash profiles (all-zero and equal-burden) are listed only
    when they survive exact unilateral-deviation analysis; the textbook
    no-defection bound is reported regardless so the two can be compared.
    """
    parties = scenario.treaty_parties
    c = scenario.abatement_cost
    damages = scenario.catastrophe_damages
    if qbar is None:
        qbar = required_abatement(scenario, taxes)
    burden = qbar / parties

    coefficients = tuple(
        benefit_coefficients(scenario, taxes, p, variant) for p in range(parties)
    )
    divergences = tuple(
        coefficient_divergence(scenario, taxes, p) for p in range(parties)
    )

    zero_ok = all(
        _best_zero_profile_gain(scenario, coeff, qbar) <= NASH_GAIN_TOLERANCE
        for coeff in coefficients
    )
    symmetric_ok = all(
        _best_symmetric_deviation_gain(scenario, coeff, qbar, parties)
        <= NASH_GAIN_TOLERANCE
        for coeff in coefficients
    )

    profiles: list[AbatementProfile] = []
    if zero_ok:
        profiles.append(AbatementProfile.from_contributions((0.0,) * parties))
    if symmetric_ok and qbar > 0.0:
        # at qbar == 0 the averting profile IS the zero profile
        profiles.append(AbatementProfile.from_contributions((burden,) * parties))

    bounds = [coeff.beta * burden + 0.5 * c * burden**2 for coeff in coefficients]
    no_defection_bound = max(bounds) if bounds else 0.0
    averting_sustainable = damages >= no_defection_bound

    responses = tuple(
        treaty_response(scenario, coeff, qbar) for coeff in coefficients
    )
    condition27 = tuple(
        bool(
            burden
            < (math.sqrt(coeff.beta**2 + 2.0 * c * damages) - coeff.beta) / c
        )
        for coeff in coefficients
    )

    payoff_prefers = []
    for coeff, response in zip(coefficients, responses):
        in_treaty = coeff.marginal_benefit(qbar) - 0.5 * c * burden**2
        avert_alone = coeff.marginal_benefit(qbar) - 0.5 * c * (qbar - response.q_rest) ** 2
        best_defection = avert_alone
        room = qbar - response.q_rest
        if room > 0.0:
            free_ride_qs = [0.0]
            if coeff.beta < 0.0:
                free_ride_qs.append(min(-coeff.beta / c, room * (1.0 - 1e-12)))
            for q in free_ride_qs:
                if q < room:
                    value = (
                        coeff.marginal_benefit(response.q_rest + q)
                        - damages
                        - 0.5 * c * q**2
                    )
                    best_defection = max(best_defection, value)
        payoff_prefers.append(bool(in_treaty >= best_defection - 1e-12))

    return TreatyAnalysis(
        variant=variant,
        qbar=float(qbar),
        per_party_burden=float(burden),
        coefficients=coefficients,
        divergences=divergences,
        nash_equilibria=tuple(profiles),
        zero_profile_is_nash=zero_ok,
        symmetric_profile_is_nash=symmetric_ok,
        no_defection_bound=float(no_defection_bound),
        averting_sustainable=bool(averting_sustainable),
        responses=responses,
        condition27=condition27,
        self_enforcing=bool(all(condition27)),
        payoff_prefers_treaty=tuple(payoff_prefers),
    )


def nash_abatement(
    scenario: Scenario, taxes: TaxSchedule, variant: str = MODEL_DERIVED
) -> TreatyAnalysis:
    """Nash abatement profiles and the no-defection bound."""
    return analyze_treaty(scenario, taxes, variant)


def self_enforcing_check(
    scenario: Scenario, taxes: TaxSchedule, variant: str = MODEL_DERIVED
) -> TreatyAnalysis:
    """Treaty responses and the per-party self-enforcement condition."""
    return analyze_treaty(scenario, taxes, variant)


@dataclass(frozen=True)
class BetaSensitivityEntry:
    """One derivative of the closed-form beta: finite difference vs formula."""

    name: str
    finite_difference: float
    analytic: float
    sign_agrees: bool
    relative_gap: float
    flagged: bool


@dataclass(frozen=True)
class BetaSensitivityReport:
    entries: tuple[BetaSensitivityEntry, ...]

    def entry(self, name: str) -> BetaSensitivityEntry:
        for item in self.entries:
            if item.name == name:
                return item
        raise KeyError(name)


def _closed_form_beta_value(scenario: Scenario, taxes: TaxSchedule, sector: int) -> float:
    return _closed_form_coefficients(scenario, taxes, sector).beta


def beta_sensitivity(
    scenario: Scenario, taxes: TaxSchedule, party: int
) -> BetaSensitivityReport:
    """Closed-form beta derivatives: finite differences vs analytic formulas.

    Defined for two-sector scenarios, where the other player's taxes are
    primitive quantities. Disagreements between the finite differences and
    the hand-derived formulas are flagged, not asserted away: the finite
    differences are the arbiter.
    """
    if scenario.n_sectors != 2:
        raise ValueError("beta sensitivity is defined for two-sector scenarios")
    if not 0 <= party < 2:
        raise IndexError("party must index one of the two sectors")
    i, j = party, 1 - party
    k = scenario.collision_coeff
    kd = k * scenario.debris_per_sat
    d = scenario.debris_per_sat
    m_i, m_j = scenario.costs[i], scenario.costs[j]
    rates = taxes.as_array
    rev_i = float((1.0 - rates[i]) @ scenario.price_array)
    rev_j = float((1.0 - rates[j]) @ scenario.price_array)
    den_i = kd * rev_i + m_i
    den_j = kd * rev_j + m_j

    shared = kd * m_j * rev_i + m_i * den_j
    if rev_i > 0.0 and rev_j > 0.0:
        t_own = (
            2.0 * k**3 * d * m_i * m_j**2 * rev_i**2
            * (3.0 * m_i * rev_j + kd * rev_i * (3.0 * m_j + kd * rev_j))
            / (den_i**3 * den_j * shared**2)
        )
        t_other = (
            2.0 * k**4 * d**2 * m_j**2 * rev_i**3
            * (kd * m_j * rev_i + 2.0 * m_i * den_j)
            / ((rev_i * rev_j * shared) ** 2)
        )
        d_cost = (
            -2.0 * k**3 * d * m_j**2 * rev_i**3
            * (3.0 * m_i * den_j + kd * rev_i * (3.0 * m_j + kd * rev_j))
            / (den_i**3 * den_j * shared**2)
        )
    else:
        t_own = t_other = d_cost = 0.0

    analytic = {
        "tax_own_home": -scenario.prices[i] * t_own,      # tax on sector i in market i
        "tax_own_away": -scenario.prices[j] * t_own,      # tax on sector i in market j
        "tax_other_home": -scenario.prices[i] * t_other,  # tax on sector j in market i
        "tax_other_away": -scenario.prices[j] * t_other,  # tax on sector j in market j
        "own_cost": d_cost,
    }

    def fd_tax(sector: int, market: int) -> float:
        rate = taxes.rate(sector, market)
        h = 1e-6 * max(1.0, abs(rate))
        hi = _closed_form_beta_value(scenario, taxes.with_rate(sector, market, rate + h), i)
        lo = _closed_form_beta_value(scenario, taxes.with_rate(sector, market, rate - h), i)
        return (hi - lo) / (2.0 * h)

    h_m = 1e-6 * max(1.0, m_i)
    costs_hi = list(scenario.costs)
    costs_lo = list(scenario.costs)
    costs_hi[i] += h_m
    costs_lo[i] -= h_m
    fd_cost = (
        _closed_form_beta_value(replace(scenario, costs=tuple(costs_hi)), taxes, i)
        - _closed_form_beta_value(replace(scenario, costs=tuple(costs_lo)), taxes, i)
    ) / (2.0 * h_m)

    finite = {
        "tax_own_home": fd_tax(i, i),
        "tax_own_away": fd_tax(i, j),
        "tax_other_home": fd_tax(j, i),
        "tax_other_away": fd_tax(j, j),
        "own_cost": fd_cost,
    }

    entries = []
    for name, fd_value in finite.items():
        formula = analytic[name]
        scale = max(abs(fd_value), abs(formula), 1e-12)
        gap = abs(fd_value - formula) / scale
        sign_agrees = bool(np.sign(fd_value) == np.sign(formula))
        entries.append(
            BetaSensitivityEntry(
                name=name,
                finite_difference=float(fd_value),
                analytic=float(formula),
                sign_agrees=sign_agrees,
                relative_gap=float(gap),
                flagged=bool(not sign_agrees or gap > 1e-5),
            )
        )
    return BetaSensitivityReport(entries=tuple(entries))


@dataclass(frozen=True)
class TreatySupportReport:
    """How a foreign tax on one party shifts its treaty incentives."""

    aversion_slope: float     # derivative of the no-defection bound's RHS
    defection_slope: float    # derivative of the punishment margin
    side_condition: bool      # sqrt(beta^2 + 2cX) - c*beta > 0


def treaty_support_check(
    scenario: Scenario, taxes: TaxSchedule, party: int, market: int
) -> TreatySupportReport:
    """Finite-difference slopes of the treaty conditions in one tax.

    Restricted to two-sector scenarios for the same reason as
    :func:`beta_sensitivity`.
    """
    if scenario.n_sectors != 2:
        raise ValueError("treaty support check is defined for two-sector scenarios")
    c = scenario.abatement_cost
    damages = scenario.catastrophe_damages
    parties = scenario.treaty_parties

    def bound_terms(schedule: TaxSchedule) -> tuple[float, float]:
        beta = _closed_form_beta_value(scenario, schedule, party)
        qbar = required_abatement(scenario, schedule)
        return beta, qbar

    def aversion(schedule: TaxSchedule) -> float:
        beta, qbar = bound_terms(schedule)
        burden = qbar / parties
        return beta * burden + 0.5 * c * burden**2

    def defection_margin(schedule: TaxSchedule) -> float:
        beta, qbar = bound_terms(schedule)
        return -qbar / parties - (
            beta - math.sqrt(beta**2 + 2.0 * c * damages)
        ) / c

    rate = taxes.rate(party, market)
    h = 1e-6 * max(1.0, abs(rate))
    hi = taxes.with_rate(party, market, rate + h)
    lo = taxes.with_rate(party, market, rate - h)
    aversion_slope = (aversion(hi) - aversion(lo)) / (2.0 * h)
    defection_slope = (defection_margin(hi) - defection_margin(lo)) / (2.0 * h)

    beta = _closed_form_beta_value(scenario, taxes, party)
    side = math.sqrt(beta**2 + 2.0 * c * damages) - c * beta > 0.0
    return TreatySupportReport(
        aversion_slope=float(aversion_slope),
        defection_slope=float(defection_slope),
        side_condition=bool(side),
    )
