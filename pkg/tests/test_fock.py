import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from steadyfock.fock import (
    DensityMatrix,
    HilbertSpec,
    Operator,
    annihilation,
    creation,
    diagonal_state,
    fock_ket,
    fock_state,
    number,
    partial_trace_atom,
    selective_lowering,
    thermal_state,
    trace_distance,
)


def test_annihilation_entries():
    a = annihilation(HilbertSpec(3)).data
    assert a[0, 1] == pytest.approx(1.0)
    assert a[1, 2] == pytest.approx(1.41421, abs=1e-5)
    assert a[2, 3] == pytest.approx(1.73205, abs=1e-5)
    assert np.count_nonzero(a) == 3


def test_annihilation_kills_vacuum():
    spec = HilbertSpec(4)
    assert np.allclose(annihilation(spec).data @ fock_ket(0, spec.field_dim), 0)


def test_number_operator_spectrum():
    spec = HilbertSpec(5)
    assert np.allclose(np.linalg.eigvalsh(number(spec).data), np.arange(6))
    a = annihilation(spec)
    assert np.allclose((a.dag() @ a).data, number(spec).data)


@given(st.integers(min_value=1, max_value=30))
def test_commutator_is_identity_below_cutoff(n_max):
    spec = HilbertSpec(n_max)
    a, ad = annihilation(spec).data, creation(spec).data
    comm = a @ ad - ad @ a
    assert np.allclose(comm[:-1, :-1], np.eye(n_max))


def test_selective_lowering_single_entry():
    op = selective_lowering(2, HilbertSpec(5)).data
    assert op[2, 3] == 1 and np.count_nonzero(op) == 1
    up = selective_lowering(4, HilbertSpec(5)).dag().data
    assert up[5, 4] == 1 and np.count_nonzero(up) == 1


@given(st.integers(min_value=1, max_value=20), st.data())
def test_selective_lowering_properties(n_max, data):
    k = data.draw(st.integers(min_value=0, max_value=n_max - 1))
    spec = HilbertSpec(n_max)
    ak = selective_lowering(k, spec).data
    proj = ak @ ak.conj().T + ak.conj().T @ ak
    expected = np.zeros((n_max + 1, n_max + 1))
    expected[k, k] = expected[k + 1, k + 1] = 1
    assert np.allclose(proj, expected)
    for n in range(n_max + 1):
        out = ak @ fock_ket(n, n_max + 1)
        assert np.allclose(out, 0) == (n != k + 1)


@pytest.mark.parametrize("k", [-1, 5, 6])
def test_selective_lowering_range(k):
    with pytest.raises(ValueError):
        selective_lowering(k, HilbertSpec(5))


def test_fock_state():
    rho = fock_state(5, HilbertSpec(30))
    assert rho.data[5, 5] == 1
    assert rho.purity() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        fock_state(31, HilbertSpec(30))


def test_thermal_state_values():
    assert np.allclose(thermal_state(0.0, HilbertSpec(10)).data, fock_state(0, HilbertSpec(10)).data)
    rho = thermal_state(0.05, HilbertSpec(30))
    assert rho.data[0, 0].real == pytest.approx(1 / 1.05, abs=1e-6)
    mean = float(np.arange(31) @ rho.populations)
    assert mean == pytest.approx(0.05, abs=1e-10)
    with pytest.raises(ValueError):
        thermal_state(-0.1, HilbertSpec(5))


@given(st.floats(min_value=0, max_value=3), st.integers(min_value=1, max_value=40))
def test_thermal_state_is_valid(nbar, n_max):
    rho = thermal_state(nbar, HilbertSpec(n_max))
    rho.validate()
    p = rho.populations
    if nbar > 0:
        assert np.allclose(p[1:], p[:-1] * nbar / (1 + nbar), rtol=1e-10, atol=1e-300)


def test_hilbert_spec():
    assert HilbertSpec(4).dim == 5
    assert HilbertSpec(4, 3).dim == 15
    with pytest.raises(ValueError):
        HilbertSpec(0)
    with pytest.raises(ValueError):
        HilbertSpec(3, 4)


def test_density_matrix_rejects_invalid():
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([0.5, 0.4]))
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[0.5, 0.3], [0.1, 0.5]]))
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.2, -0.2]))


def test_operator_is_immutable():
    op = Operator(np.eye(2))
    with pytest.raises(ValueError):
        op.data[0, 0] = 3
    with pytest.raises(ValueError):
        Operator(np.ones((2, 3)))


def test_partial_trace_and_distance(rng):
    from conftest import random_density

    rho_f = random_density(rng, 4)
    atom = np.diag([0.3, 0.7])
    joint = np.kron(atom, rho_f)
    assert np.allclose(partial_trace_atom(joint, 2), rho_f)
    assert trace_distance(rho_f, rho_f) == pytest.approx(0, abs=1e-12)
    assert trace_distance(diagonal_state([1, 0]), diagonal_state([0, 1])) == pytest.approx(1)


def test_maximally_mixed_sqrt_fidelity():
    from steadyfock.fock import maximally_mixed
    from steadyfock.observables import fock_fidelity

    assert fock_fidelity(maximally_mixed(9), 3).sqrt == pytest.approx(1 / math.sqrt(9))
