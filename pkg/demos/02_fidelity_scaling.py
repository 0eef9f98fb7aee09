"""How gate quality depends on pulse length and atomic loss.

Longer pulses are spectrally narrower, so the reflection phase is closer to its
on-carrier value and the infidelity falls as 1/T^2. Spontaneous emission into
other modes removes probability at a rate set by gamma and the cavity-enhanced
coupling, so the fidelity damage grows linearly with gamma.

Both sweeps run in a process pool when ``CAVGATE_WORKERS`` is set. The full
T sweep takes about a minute on one core.

Run with ``CAVGATE_WORKERS=4 python3 demos/02_fidelity_scaling.py``.
"""

from cavgate import RunConfig, SweepConfig, sweep

base = RunConfig(g=0.5, policy="solve-Delta")

res = sweep(SweepConfig(base, "T", (25.0, 50.0, 100.0, 200.0, 400.0)))
print(f"{'T':>6} {'1 - F':>10} {'|Phi - pi/4|':>13}")
for p in res.points:
    r = p.report
    print(f"{p.value:6.0f} {1 - r.F:10.3e} {abs(r.Phi - r.phi):13.3e}")
for name, fit in res.fits.items():
    print(f"{name}: slope {fit.slope:.3f} (r^2 = {fit.r_squared:.5f})")

print()
res = sweep(SweepConfig(base.replace(T=100.0), "gamma", (1e-3, 3e-3, 1e-2, 3e-2, 1e-1)))
b = res.baseline
print(f"{'gamma':>7} {'F_0 - F':>10} {'|dPhi|':>10} {'P_loss':>10} {'closed form':>12}")
for p in res.points:
    r = p.report
    print(f"{p.value:7.0e} {b.F - r.F:10.3e} {abs(b.Phi - r.Phi):10.3e} "
          f"{r.p_loss_numeric:10.3e} {r.p_loss_formula:12.3e}")
for name, fit in res.fits.items():
    print(f"{name}: slope {fit.slope:.3f}")
