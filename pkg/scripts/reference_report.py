#!/usr/bin/env python3
"""Solve, regulate, and analyze the three reference scenarios side by side.

Usage:
    python scripts/reference_report.py
"""

from orbituse import (
    HIDEB,
    MODEL_DERIVED,
    CLOSED_FORM,
    SOLO,
    SYM2,
    TaxSchedule,
    analyze_treaty,
    national_welfare,
    regulatory_equilibrium,
    required_abatement,
    solve_equilibrium,
)


def describe(name, scenario):
    taxes = TaxSchedule.zeros(scenario.n_sectors, scenario.n_markets)
    eq = solve_equilibrium(scenario, taxes, 0.0)
    welfare = national_welfare(scenario, taxes, 0.0)
    print(f"== {name} ==")
    print(f"  fleets            {[round(f, 6) for f in eq.fleets]}")
    print(f"  debris stock      {eq.debris.stock:.6f}  (threshold {scenario.catastrophe_threshold})")
    print(f"  survival          {eq.debris.survival:.6f}")
    print(f"  welfare           {[round(w, 6) for w in welfare.welfare]}")

    qbar = required_abatement(scenario, taxes)
    print(f"  averting abatement {qbar:.6f} (responsive)")

    reg = regulatory_equilibrium(scenario, 0.0, taxes)
    tag = "converged" if reg.converged else f"stopped at {reg.max_update:.1e}"
    print(f"  regulatory taxes  {reg.taxes.rates} ({tag}, {reg.iterations} iterations)")

    if qbar > 0.0:
        for variant in (MODEL_DERIVED, CLOSED_FORM):
            analysis = analyze_treaty(scenario, taxes, variant, qbar=qbar)
            coeff = analysis.coefficients[0]
            print(
                f"  [{variant}] alpha={coeff.alpha:.6f} beta={coeff.beta:+.6f} "
                f"averting_sustainable={analysis.averting_sustainable} "
                f"self_enforcing={analysis.self_enforcing}"
            )
    print()


def main():
    for name, scenario in (("SOLO", SOLO), ("SYM2", SYM2), ("HIDEB", HIDEB)):
        describe(name, scenario)


if __name__ == "__main__":
    main()
