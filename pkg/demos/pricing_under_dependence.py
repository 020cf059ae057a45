"""How copula dependence moves multi-asset prices but never single-asset ones.

Two Q-GARCH assets are coupled by a Clayton copula.  Raising theta leaves
each asset's own law untouched, so the identity claim stays at s0, while
the Everest (minimum of terminal prices) becomes more valuable.
"""
from gimp_engine import CopulaSpec, GarchParams, GimpModel, PayoffSpec, price_many

N_PATHS, MATURITY, SEED = 50_000, 20, 1

a = GarchParams(1e-5, 0.85, 0.10)
b = GarchParams(2e-5, 0.80, 0.12)
payoffs = [
    PayoffSpec("identity", MATURITY, asset=0, name="identity"),
    PayoffSpec("everest", MATURITY),
    PayoffSpec("basket_call", MATURITY, strike=1.0, name="basket"),
    PayoffSpec("altiplano", MATURITY, thresholds=(1.0, 1.0), coupon=1.0),
]

print(f"{'theta':>6s}  " + "  ".join(f"{p.name:>18s}" for p in payoffs))
for theta in (0.1, 1.0, 5.0, 20.0):
    model = GimpModel((a, b), CopulaSpec.clayton(theta))
    est = price_many(model, payoffs, N_PATHS, SEED)
    cells = [f"{e.value:9.5f} +- {e.stderr:.5f}" for e in est]
    print(f"{theta:6.1f}  " + "  ".join(cells))

# same seed for every theta: differences come from the coupling alone
print("\nTau of the copula for reference:", {t: round(t / (t + 2), 3) for t in (0.1, 1.0, 5.0, 20.0)})
print("identity prices stay within a few stderr of 1; Everest and Altiplano rise with theta.")
