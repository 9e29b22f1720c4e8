import math
import warnings

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, strategies as st

from steadyfock.engineering import (
    RamanHamiltonian,
    RamanParams,
    derive_effective,
    detuned_rabi_max,
    effective_terms,
    integrate_schrodinger,
    resonant_jc,
    selective_jc,
    selective_propagator,
    solve_selectivity,
    validate_selectivity,
)
from steadyfock.fock import HilbertSpec, fock_ket
from steadyfock.reservoir import selective_operating_point


def _quiet(**kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return RamanParams(**kw)


def test_derive_effective_values():
    p = RamanParams(1.0, 0.0, 0.0, 10.0, 10.0, 10.0)
    eff = derive_effective(p)
    assert eff.xi == pytest.approx(0.1)
    assert eff.zeta == 0
    assert eff.varpi_g == 0 and eff.varpi_e == 0
    q = RamanParams(1.0, 0.5, 0.3, 10.0, 10.0, 5.0)
    eff = derive_effective(q)
    assert eff.zeta == pytest.approx(0.3 * (0.1 + 0.2) / 2)
    assert eff.varpi_g == pytest.approx(0.025)
    assert eff.varpi_e == pytest.approx(0.018)
    assert eff.delta == pytest.approx(5.0)


def test_zero_detuning_rejected():
    with pytest.raises(ValueError):
        RamanParams(1.0, 0.1, 0.1, 0.0, 1.0, 1.0)


def test_strong_laser_warns():
    with pytest.warns(UserWarning, match="unreliable"):
        RamanParams(1.0, 5.0, 0.1, 10.0, 10.0, 10.0)


def test_solve_selectivity_omega1_magnitude():
    k = 5
    p = solve_selectivity(k, RamanParams(1.0, 0.0, 0.1, 40.0, 40.0, 40.0))
    assert abs(p.Omega1) == pytest.approx(math.sqrt(k + 1))
    p = solve_selectivity(k, RamanParams(1.0, 0.0, 0.1, 40.0, 80.0, 40.0))
    assert abs(p.Omega1) == pytest.approx(math.sqrt((k + 1) * 80.0 / 40.0))


def test_solve_selectivity_keeps_phase():
    p = solve_selectivity(2, RamanParams(1.0, 0.01j, 0.1, 40.0, 40.0, 40.0))
    assert np.angle(p.Omega1) == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("k", [1, 3, 5, 10])
def test_solve_selectivity_resonance(k):
    raman, _ = selective_operating_point(k)
    eff = derive_effective(raman)
    assert abs(eff.phi_n(k)) <= 1e-12
    assert eff.phi_n(k + 1) == pytest.approx(eff.xi, abs=1e-12)
    assert eff.phi_n(k - 1) == pytest.approx(-eff.xi, abs=1e-12)
    assert eff.varpi_g == pytest.approx((k + 1) * eff.xi)
    assert eff.delta == pytest.approx(eff.varpi_e)


def test_solve_selectivity_errors():
    with pytest.raises(ValueError, match="k must"):
        solve_selectivity(-1, RamanParams(1.0, 0.0, 0.1, 40.0, 40.0, 40.0))
    with pytest.raises(ValueError, match="sign"):
        solve_selectivity(2, RamanParams(1.0, 0.0, 0.1, 40.0, -40.0, 40.0))
    with pytest.raises(ValueError, match="infeasible"):
        solve_selectivity(200, RamanParams(1.0, 0.0, 0.1, 10.0, 10.0, 10.0))
    with pytest.raises(ValueError, match="Delta2"):
        solve_selectivity(1, _quiet(lam=1.0, Omega1=0.0, Omega2=6.0, Delta=10.0, Delta1=10.0, Delta2=100.0))


@given(st.floats(1, 100), st.floats(0.01, 1), st.integers(0, 20))
def test_phi_is_affine_in_n(delta, omega2, n0):
    eff = derive_effective(_quiet(lam=1.0, Omega1=0.3, Omega2=omega2, Delta=delta, Delta1=30.0, Delta2=25.0))
    phis = np.array([eff.phi_n(n) for n in range(n0, n0 + 5)])
    assert np.allclose(np.diff(phis), eff.xi, rtol=1e-12, atol=1e-12)


def test_effective_terms_include_vacuum_doublet():
    eff = derive_effective(RamanParams(1.0, 0.0, 0.1, 40.0, 40.0, 40.0))
    terms = effective_terms(eff, 6)
    assert [t[0] for t in terms] == list(range(6))
    assert terms[3][1] == pytest.approx(2 * eff.zeta)


def test_selective_jc_structure():
    spec = HilbertSpec(6)
    d = spec.field_dim
    H = selective_jc(3, 0.2 + 0.1j, spec).data
    assert np.allclose(H, H.conj().T)
    # <g, k+1| H |e, k> with |g, n> = index n and |e, n> = index d + n
    assert H[4, d + 3] == pytest.approx(0.2 + 0.1j)
    assert np.count_nonzero(H) == 2
    with pytest.raises(ValueError):
        selective_jc(6, 1.0, spec)


def test_selective_jc_rabi_flop():
    spec = HilbertSpec(6)
    d, k, z = spec.field_dim, 3, 0.7
    U = selective_propagator(k, z, spec, math.pi / (2 * z))
    out = U @ fock_ket(k + 1, 2 * d)
    assert abs(out[d + k]) ** 2 == pytest.approx(1.0, abs=1e-12)
    for n in range(d):
        if n != k + 1:
            psi = fock_ket(n, 2 * d)
            assert np.allclose(U @ psi, psi)


def test_resonant_jc_elements():
    spec = HilbertSpec(5)
    d = spec.field_dim
    lam = 0.3 - 0.2j
    H = resonant_jc(lam, spec).data
    assert np.allclose(H, H.conj().T)
    for n in range(spec.n_max):
        # <g, n+1| H |i, n> = conj(lam) sqrt(n+1)
        assert H[n + 1, d + n] == pytest.approx(np.conj(lam) * math.sqrt(n + 1))
    out = H @ fock_ket(0, 2 * d)
    assert np.count_nonzero(np.abs(out) > 0) == 0


def test_detuned_rabi_max():
    assert detuned_rabi_max(0.0, 1.0) == 0.0
    assert detuned_rabi_max(1.0, 0.0) == 1.0
    assert detuned_rabi_max(0.5, 1.0) == pytest.approx(0.5)


def test_raman_hamiltonian_hermitian():
    raman, _ = selective_operating_point(3)
    ham = RamanHamiltonian(raman, HilbertSpec(6))
    for t in (0.0, 0.37, 12.5):
        H = ham(t)
        assert np.allclose(H, H.conj().T)
        psi = np.random.default_rng(1).normal(size=H.shape[0]) + 0j
        assert np.allclose(ham.apply(t, psi), H @ psi)


def test_schrodinger_matches_expm_for_static_case():
    # With all frequencies equal the frame rotation is shared; compare a short
    # step against a midpoint exponential as a sanity check on the integrator.
    raman = RamanParams(1.0, 0.0, 0.0, 50.0, 50.0, 50.0)
    ham = RamanHamiltonian(raman, HilbertSpec(3))
    psi0 = fock_ket(2, ham.spec.dim)
    dt = 1e-4
    out = integrate_schrodinger(ham, psi0, np.array([0.0, dt]))[:, -1]
    ref = sla.expm(-1j * dt * ham(dt / 2)) @ psi0
    assert np.max(np.abs(out - ref)) <= 1e-9


def test_on_target_transfer_and_norm():
    raman, _ = selective_operating_point(3)
    rep = validate_selectivity(3, raman, 3, n_max=8)
    assert rep.transfer_final >= 0.95
    assert rep.norm_error <= 1e-9
    assert rep.auxiliary_max <= 0.1
    assert rep.summary()["phi_probe"] == pytest.approx(0, abs=1e-12)


def test_off_target_within_detuned_bound():
    raman, _ = selective_operating_point(3)
    on = validate_selectivity(3, raman, 3, n_max=8)
    off = validate_selectivity(3, raman, 4, t_end=on.t_end, n_max=8)
    assert off.transfer_max <= off.detuned_rabi_bound + 0.02


def test_decoupled_limit_is_free_phase():
    p = RamanParams(1e-9, 0.0, 0.1, 40.0, 40.0, 40.0)
    rep = validate_selectivity(2, p, 2, t_end=5.0, n_max=5, n_samples=21)
    assert rep.fidelity.min() >= 0.999
    assert rep.transfer_max <= 1e-6


def test_probe_range_and_zero_coupling():
    raman, _ = selective_operating_point(3)
    with pytest.raises(ValueError):
        validate_selectivity(3, raman, 8, n_max=8)
    with pytest.raises(ValueError, match="t_end"):
        validate_selectivity(2, RamanParams(1.0, 0.0, 0.0, 40.0, 40.0, 40.0), 2, n_max=5)


@pytest.mark.slow
def test_error_decreases_with_detuning():
    errs = []
    for scale in (10, 20):
        raman, _ = selective_operating_point(3, scale=scale)
        errs.append(validate_selectivity(3, raman, 3, n_max=8).error)
    assert errs[1] < errs[0]
    assert errs[1] == pytest.approx(errs[0] / 4, rel=0.1)

