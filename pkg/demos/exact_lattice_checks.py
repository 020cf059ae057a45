"""Exact enumeration on two-point lattices.

A coupling may depend on the whole market state without letting one asset
forecast another: the level-dependent fixture keeps every marginal law
fixed while its joint one-step law varies.  Contaminating a marginal is
caught with a concrete witness history.
"""
from gimp_engine import suites

for fx in suites.lattice_fixtures():
    out = suites.run_fixture(fx)
    spread = out.report.info.get("joint_law_spread")
    extra = f"  joint-law spread {spread:.3f}" if spread is not None else ""
    print(f"[{'as predicted' if out.ok else 'MISMATCH'}] {fx.kind:<10s} {fx.name}{extra}")
    if fx.name == "contaminated-marginal":
        print(out.report.table())
