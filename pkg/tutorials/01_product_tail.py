"""Walkthrough: how fast does P[XY > x] settle onto its first-order constant?

We build the running example used throughout the tutorials: Pareto-type
losses with tail x^-2, discount factors uniform on (0, 1), and FGM
dependence at full strength (theta = 1). Then we compare three numbers at
a handful of capital levels x:

* the exact product tail, from one-dimensional quadrature,
* a conditional Monte Carlo estimate of the same quantity,
* the first-order prediction kappa * F̄(x).

Run with:  python tutorials/01_product_tail.py
"""

from sarmanov_ruin import (
    RegularlyVaryingLaw,
    SarmanovModel,
    Uniform,
    breiman_constant,
    exact_product_tail,
    product_tail_mc,
    ratio_curve,
    twisted_law,
)

model = SarmanovModel(RegularlyVaryingLaw(alpha=2.0, x_m=1.0), Uniform(1.0), theta=1.0)
print("validation:", "ok" if model.report.valid else model.report.failures())

# The constant has two pieces: E[Y^alpha] and the dependence correction.
c = breiman_constant(model)
print(f"E[Y^2] = {c.e_y_alpha:.6f}, E[phi2(Y) Y^2] = {c.kernel_moment:.6f}, kappa = {c.kappa:.6f}")

# Dependence acts like a change of measure on Y: under the twisted law the
# density of Y becomes 2y, and its second moment is kappa again.
print(f"twisted second moment = {twisted_law(model).power_moment(2.0):.6f}")

print("\n      x      exact/F̄      MC/F̄ (±se)")
for x in (3.0, 10.0, 30.0, 100.0):
    exact = exact_product_tail(model, x)
    mc = product_tail_mc(model, x, "conditional", 200_000, seed=1)
    fbar = x**-2
    print(f"{x:7.0f}   {exact / fbar:.7f}   {mc.value / fbar:.5f} (±{mc.stderr / fbar:.5f})")

# The same comparison as a table, which is what the CLI writes to curve.csv.
print("\nratio curve, exact evaluation:")
for row in ratio_curve(model, [10.0, 10**1.5, 100.0, 1000.0]):
    print(f"  x={row.x:8.2f}  ratio={row.ratio:.9f}  predicted={row.predicted}  rel_err={row.rel_err:.2e}")

# For this model the gap is exactly (2/15) x^-2, so it closes quickly.
