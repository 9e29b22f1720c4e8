import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, strategies as st

from steadyfock.fock import HilbertSpec, annihilation, diagonal_state, fock_state, maximally_mixed, thermal_state
from steadyfock.observables import (
    GridSpec,
    WignerGrid,
    classify_nonclassical,
    coherent_populations,
    displaced_parity,
    fock_fidelity,
    laguerre_envelopes,
    mandel_q,
    purity,
    rotate,
    state_metrics,
    wigner,
    wigner_fock_closed_form,
)

from conftest import detailed_balance_populations, random_density

TWO_OVER_PI = 2 / math.pi
SMALL = GridSpec((-3, 3), (-3, 3), 41)


def _w0(rho):
    return float(TWO_OVER_PI * displaced_parity(rho, np.array([0.0]))[0])


def test_vacuum_and_fock_at_origin():
    spec = HilbertSpec(10)
    assert _w0(fock_state(0, spec)) == pytest.approx(0.63662, abs=1e-5)
    assert _w0(fock_state(5, spec)) == pytest.approx(-0.63662, abs=1e-5)


@pytest.mark.parametrize("nbar", [0.05, 0.5, 2.0])
def test_thermal_origin_value(nbar):
    rho = thermal_state(nbar, HilbertSpec(80))
    assert _w0(rho) == pytest.approx(TWO_OVER_PI / (1 + 2 * nbar), rel=1e-8)
    assert wigner(rho, SMALL).min_value >= 0


def test_thermal_is_gaussian():
    nbar = 0.3
    rho = thermal_state(nbar, HilbertSpec(60))
    alpha = np.array([0.3, 1.0 + 0.5j, -0.7j])
    expected = TWO_OVER_PI / (1 + 2 * nbar) * np.exp(-2 * np.abs(alpha) ** 2 / (1 + 2 * nbar))
    assert np.allclose(TWO_OVER_PI * displaced_parity(rho, alpha), expected, atol=1e-10)


@pytest.mark.parametrize("n", [0, 1, 5, 10, 30])
def test_fock_matches_closed_form(n):
    rho = fock_state(n, HilbertSpec(n + 5))
    alpha = np.linspace(-4, 4, 33)[:, None] + 1j * np.linspace(-4, 4, 33)[None, :]
    got = TWO_OVER_PI * displaced_parity(rho, alpha)
    assert np.max(np.abs(got - wigner_fock_closed_form(n, alpha))) <= 1e-12


def test_matches_brute_force_displaced_parity(rng):
    d, big = 8, 60
    rho = random_density(rng, d)
    a = annihilation(HilbertSpec(big - 1)).data
    parity = np.diag((-1.0) ** np.arange(big))
    padded = np.zeros((big, big), dtype=complex)
    padded[:d, :d] = rho
    for alpha in (0.2 + 0.1j, -0.8 + 0.6j, 1.3j):
        D = sla.expm(alpha * a.conj().T - np.conj(alpha) * a)
        ref = np.trace(padded @ D @ parity @ D.conj().T).real
        assert displaced_parity(rho, np.array([alpha]))[0] == pytest.approx(ref, abs=1e-10)


def test_envelopes_bounded():
    x = np.linspace(0, 400, 101)
    for _, F in laguerre_envelopes(x, 120, offsets=[0, 7, 50]):
        assert np.all(np.abs(F) <= 1 + 1e-9)
        assert np.all(np.isfinite(F))


def test_wigner_is_real_and_normalised_on_covering_grid():
    n_max = 12
    pops = detailed_balance_populations(1000, 1000, "0.8", 5, 4, "0.05", n_max)
    extent = math.sqrt(n_max) + 3
    w = wigner(diagonal_state(pops), GridSpec((-extent, extent), (-extent, extent), 121))
    assert w.integral == pytest.approx(1.0, abs=0.01)
    assert w.imag_residue <= 1e-10
    assert w.values.dtype == float


def test_random_state_normalised(rng):
    rho = random_density(rng, 6)
    w = wigner(rho, GridSpec((-5, 5), (-5, 5), 121))
    assert w.integral == pytest.approx(1.0, abs=0.01)
    assert w.negativity_volume >= -0.01


@given(st.lists(st.floats(0, 1), min_size=2, max_size=12), st.floats(0, 2 * math.pi),
       st.floats(0, 3))
def test_diagonal_state_rotationally_symmetric(weights, theta, r):
    w = np.asarray(weights)
    if w.sum() == 0:
        w[0] = 1.0
    rho = diagonal_state(w / w.sum())
    base = displaced_parity(rho, np.array([r]))[0]
    turned = displaced_parity(rho, np.array([r * np.exp(1j * theta)]))[0]
    assert abs(base - turned) <= 1e-6


def test_grid_rejects_coarse_resolution():
    with pytest.raises(ValueError, match="resolution"):
        GridSpec(resolution=31)
    assert GridSpec().xs.size == 201
    assert GridSpec().cell_area == pytest.approx(0.06 ** 2)


def test_csv_and_matrix_round_trip(tmp_path):
    w = wigner(fock_state(2, HilbertSpec(6)), GridSpec((-2, 2), (-1, 1), 32))
    csv = tmp_path / "w.csv"
    w.to_csv(csv)
    data = np.loadtxt(csv, delimiter=",", skiprows=1)
    assert data.shape == (32 * 32, 3)
    assert csv.read_text().splitlines()[0] == "x,p,W"
    # row order: x outer, p inner
    assert data[1, 0] == pytest.approx(-2) and data[1, 1] == pytest.approx(-1 + 2 / 31)
    assert np.allclose(data[:, 2], w.values.ravel())
    mat = tmp_path / "w.txt"
    w.to_matrix_file(mat)
    back = WignerGrid.from_matrix_file(mat)
    assert back.grid == w.grid
    assert np.array_equal(back.values, w.values)


def test_classify():
    spec = HilbertSpec(8)
    assert not classify_nonclassical(wigner(thermal_state(0.2, spec), SMALL)).nonclassical
    rep = classify_nonclassical(wigner(fock_state(1, spec), SMALL))
    assert rep.nonclassical and rep.min_value == pytest.approx(-TWO_OVER_PI, abs=1e-9)
    assert rep.negativity_volume > 0


def test_fidelity_cases():
    spec = HilbertSpec(10)
    f = fock_fidelity(fock_state(5, spec), 5)
    assert tuple(f) == (1.0, 1.0)
    assert fock_fidelity(maximally_mixed(9), 4).sqrt == pytest.approx(1 / 3)
    assert fock_fidelity(fock_state(4, spec), 5).overlap == 0
    with pytest.raises(ValueError):
        fock_fidelity(fock_state(4, spec), 11)


def test_fock5_state_fidelity():
    pops = detailed_balance_populations(1000, 1000, "0.8", 5, 4, "0.05", 68)
    f = fock_fidelity(diagonal_state(pops), 5)
    assert f.overlap == pytest.approx(0.936, abs=0.005)
    assert f.sqrt == pytest.approx(0.968, abs=0.005)


@given(st.floats(0, 2 * math.pi), st.integers(0, 10 ** 6))
def test_fidelity_phase_invariant(theta, seed):
    rho = random_density(np.random.default_rng(seed), 7)
    a, b = fock_fidelity(rho, 3), fock_fidelity(rotate(rho, theta), 3)
    assert a.overlap == pytest.approx(b.overlap, abs=1e-14)


def test_mandel_q():
    spec = HilbertSpec(80)
    assert mandel_q(fock_state(5, spec)) == pytest.approx(-1.0)
    assert mandel_q(thermal_state(0.7, spec)) == pytest.approx(0.7, abs=1e-8)
    assert abs(mandel_q(diagonal_state(coherent_populations(2.0, 60)))) <= 1e-8
    assert math.isnan(mandel_q(fock_state(0, spec)))


def test_purity_and_metrics():
    spec = HilbertSpec(6)
    assert purity(fock_state(2, spec)) == pytest.approx(1.0)
    assert purity(maximally_mixed(7)) == pytest.approx(1 / 7)
    w = wigner(fock_state(2, spec), SMALL)
    m = state_metrics(fock_state(2, spec), 2, w)
    d = m.as_dict()
    assert d["fidelity_sqrt"] == 1.0 and d["fidelity_convention"] == "sqrt"
    assert d["mandel_q"] == pytest.approx(-1.0)
    assert d["wigner_min"] == w.min_value
    assert state_metrics(fock_state(2, spec), 2).wigner_min is None


def test_rotate_keeps_populations(rng):
    rho = random_density(rng, 5)
    out = rotate(rho, 0.4)
    assert np.allclose(out.populations, np.real(np.diag(rho)))
    assert out.data[0, 1] == pytest.approx(rho[0, 1] * np.exp(-0.4j))
