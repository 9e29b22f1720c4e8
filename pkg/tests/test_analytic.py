import numpy as np
import pytest
from hypothesis import given, strategies as st

from steadyfock.analytic import (
    analytic_populations,
    auto_truncation,
    check_conditions,
    population_series,
)
from steadyfock.fock import HilbertSpec
from steadyfock.lindblad import steady_state
from steadyfock.reservoir import EngineeredRates, build_master_equation

from conftest import detailed_balance_populations

FOCK5 = EngineeredRates(1e3, 1e3, 0.8, 5, 4, 0.05)
FOCK10 = EngineeredRates(1e3, 1e3, 0.95, 10, 9, 0.05)
TRUNCATION = EngineeredRates(1e3, 0.0, 0.8, 5, 4, 0.05)
SLICE = EngineeredRates(1e3, 1e3, 0.8, 6, 3, 0.05)


def test_thermal_reduction():
    sol = analytic_populations(EngineeredRates(0, 0, 0, 5, 4, 0.05))
    assert sol.A_l == 1 and sol.B_lm == 1
    assert sol.rho0 == pytest.approx(1 / 1.05)
    n = np.arange(10)
    assert np.allclose(sol.populations(n), (1 / 1.05) * (0.05 / 1.05) ** n)


def test_fock5_building_blocks():
    sol = analytic_populations(FOCK5)
    assert sol.R == pytest.approx(0.809524, abs=1e-6)
    assert sol.A_l == pytest.approx(236.29, abs=0.01)
    assert sol.B_lm == pytest.approx(1.4793, abs=1e-4)
    assert sol.rho0 == pytest.approx(0.011395, abs=1e-6)
    # detailed-balance oracle, untruncated limit
    assert float(sol.populations(5)) == pytest.approx(0.9360686223, abs=1e-9)


def test_fock10_fidelity_value():
    sol = analytic_populations(FOCK10)
    assert float(sol.populations(10)) == pytest.approx(0.7357687518, abs=1e-9)
    assert np.sqrt(float(sol.populations(10))) == pytest.approx(0.858, abs=1e-3)


def test_truncation_conditions():
    sol = analytic_populations(TRUNCATION)
    assert sol.A_l == 1
    assert sol.B_lm == pytest.approx(0.00626, abs=1e-5)
    rep = check_conditions(TRUNCATION, sol)
    assert rep.truncation_ratio == pytest.approx(0.00507, abs=1e-5)
    assert rep.regime == "truncated"
    assert sol.tail_mass(5) == pytest.approx(0.0024460259, abs=1e-9)


def test_regimes():
    assert check_conditions(EngineeredRates(0, 0, 0.8, 5, 4, 0.05)).regime == "thermal"
    assert check_conditions(FOCK5).regime == "fock"
    assert check_conditions(SLICE).regime == "sliced"
    assert check_conditions(EngineeredRates(0, 1e3, 0.8, 5, 4, 0.05)).regime == "amplified"


def test_slice_concentration():
    pops, _ = population_series(analytic_populations(SLICE), 60)
    assert pops[4:7].sum() >= 0.95
    assert pops[4:7].sum() == pytest.approx(0.9824795904, abs=1e-8)


def test_population_series_normalisation():
    sol = analytic_populations(FOCK10)
    for n_max in (12, 50, 200):
        pops, tail = population_series(sol, n_max)
        assert pops.sum() + tail == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        population_series(sol, 11)


def test_branch_ratios_are_geometric():
    sol = analytic_populations(SLICE)
    p = sol.populations(np.arange(20))
    for lo, hi in ((0, 3), (4, 6), (7, 19)):
        seg = p[lo:hi + 1]
        assert np.allclose(seg[1:] / seg[:-1], sol.R)


def test_auto_truncation():
    assert auto_truncation(FOCK5) == 68
    n = auto_truncation(FOCK10)
    sol = analytic_populations(FOCK10)
    assert float(sol.populations(n)) <= 1e-8 < float(sol.populations(n - 1))


def test_l_not_below_m_rejected():
    with pytest.raises(ValueError):
        EngineeredRates(1, 1, 0.5, 3, 3)


rate = st.one_of(st.just(0.0), st.floats(1e-2, 1e3))


@given(st.integers(2, 10), st.data(), rate, rate, st.floats(0, 0.95), st.floats(0, 0.5))
def test_matches_detailed_balance_oracle(m, data, gm, gl, eps, nbar):
    l = data.draw(st.integers(0, m - 1))
    if eps + nbar == 0 and l == 0 and gl > 0:
        return
    rates = EngineeredRates(gm, gl, eps, m, l, nbar)
    sol = analytic_populations(rates)
    n_max = 60
    pops, tail = population_series(sol, n_max)
    exact = detailed_balance_populations(gm, gl, eps, m, l, nbar, n_max)
    # The oracle is normalised on 0..n_max; rescale to compare.
    assert np.max(np.abs(pops / (1 - tail) - exact)) <= 1e-9


@given(st.integers(2, 10), st.data(), rate, rate, st.floats(0, 0.95), st.floats(0, 0.5))
def test_branch_invariants(m, data, gm, gl, eps, nbar):
    l = data.draw(st.integers(0, m - 1))
    if eps + nbar == 0 and l == 0 and gl > 0:
        return
    sol = analytic_populations(EngineeredRates(gm, gl, eps, m, l, nbar))
    assert sol.A_l >= 1
    assert sol.B_lm <= sol.A_l * (1 + 1e-12)
    assert 0 <= sol.R < 1


def test_seam_continuity():
    base = dict(epsilon=0.6, m=6, l=2, nbar=0.1)
    near = analytic_populations(EngineeredRates(1e3, 1e-12, **base))
    assert near.A_l == pytest.approx(1.0, abs=1e-9)
    near = analytic_populations(EngineeredRates(1e-12, 1e3, **base))
    assert near.B_lm == pytest.approx(near.A_l, rel=1e-9)


def test_matches_numeric_steady_state_fock_boundary():
    rates = EngineeredRates(300, 50, 0.4, 3, 2, 0.2)
    spec = HilbertSpec(auto_truncation(rates))
    rep = steady_state(build_master_equation(rates, spec), method="null-space")
    sol = analytic_populations(rates)
    assert np.max(np.abs(rep.populations - sol.populations(np.arange(spec.field_dim)))) <= 1e-6
