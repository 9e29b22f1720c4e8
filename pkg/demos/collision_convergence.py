"""Atomic beam versus master equation.

Builds a beam whose coarse-grained rates equal the |5> rates, then shrinks
the dwell time at a fixed duty cycle. The trace distance between the beam's
periodic steady state and the Lindblad steady state falls roughly linearly
with tau.

Run: python3 demos/collision_convergence.py
"""

from steadyfock import EngineeredRates, convergence_study

rates = EngineeredRates(gamma_m=1e3, gamma_l=1e3, epsilon=0.8, m=5, l=4, nbar=0.05)
taus = [4e-4, 2e-4, 1e-4, 5e-5]
study = convergence_study(rates, n_max=40, taus=taus)
print("tau        trace distance")
for tau, d in zip(study.taus, study.distances):
    print(f"{tau:.1e}    {d:.5f}")
print("error(tau) / error(tau/2): " + ", ".join(f"{r:.2f}" for r in study.halving_ratios))
print(f"fitted order: {study.order:.2f}")
