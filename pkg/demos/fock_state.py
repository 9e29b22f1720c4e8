"""Prepare steady Fock states |5> and |10> and inspect them.

Run: python3 demos/fock_state.py
"""

import numpy as np

from steadyfock import (
    EngineeredRates,
    HilbertSpec,
    analytic_populations,
    auto_truncation,
    build_master_equation,
    check_conditions,
    classify_nonclassical,
    fock_fidelity,
    mandel_q,
    steady_state,
    wigner,
)

CASES = {
    "|5>": EngineeredRates(gamma_m=1e3, gamma_l=1e3, epsilon=0.8, m=5, l=4, nbar=0.05),
    "|10>": EngineeredRates(gamma_m=1e3, gamma_l=1e3, epsilon=0.95, m=10, l=9, nbar=0.05),
}

for label, rates in CASES.items():
    n_max = auto_truncation(rates)
    rep = steady_state(build_master_equation(rates, HilbertSpec(n_max)))
    exact = analytic_populations(rates).populations(np.arange(n_max + 1))
    f = fock_fidelity(rep.rho, rates.m)
    w = wigner(rep.rho)
    print(f"target {label}: regime={check_conditions(rates).regime} n_max={n_max} solver={rep.method}")
    print(f"  <n|rho|n> = {f.overlap:.4f}   fidelity sqrt(<n|rho|n>) = {f.sqrt:.4f}")
    print(f"  Mandel Q = {mandel_q(rep.rho):.4f}   Wigner min = {w.min_value:.4f} "
          f"({'nonclassical' if classify_nonclassical(w).nonclassical else 'classical'})")
    print(f"  numeric vs closed form: max |dp| = {np.max(np.abs(rep.populations - exact)):.2e}")
    top = np.argsort(rep.populations)[::-1][:4]
    print("  largest populations: " + ", ".join(f"p{n}={rep.populations[n]:.4f}" for n in sorted(top)))
