import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import dense_two_site
from unsampling.linalg import haar_unitary, is_unitary
from unsampling.qudit import (
    DimensionError,
    QuditState,
    apply_unitary,
    clements_ansatz,
    clements_decompose,
    clements_layout,
    clements_n_phases,
    laughlin_circuit,
    laughlin_circuit_state,
    laughlin_state,
    laughlin_sum_state,
    laughlin_w_gate,
    laughlin_wtilde_gate,
    partial_trace,
    product_state,
    random_state,
    site_fidelity,
    wtilde_level_gate,
)


def test_product_state_index():
    psi = product_state([1, 0, 2], 3)
    assert np.flatnonzero(psi.amplitudes).tolist() == [1 * 9 + 0 * 3 + 2]
    with pytest.raises(DimensionError):
        product_state([3], 3)
    with pytest.raises(DimensionError):
        QuditState(2, 2, np.ones(3))


@given(st.integers(0, 2**32 - 1), st.sampled_from([(1, 3), (3, 1), (2, 3), (1, 2)]))
def test_apply_unitary_matches_dense_operator(seed, sites):
    rng = np.random.default_rng(seed)
    psi = random_state(3, 2, rng)
    u = haar_unitary(4, rng)
    out = apply_unitary(psi, u, sites)
    assert np.allclose(out.amplitudes, dense_two_site(u, sites, 3, 2) @ psi.amplitudes, atol=1e-12)


def test_apply_unitary_errors():
    psi = product_state([0, 0], 2)
    with pytest.raises(DimensionError):
        apply_unitary(psi, np.eye(4), [1, 1])
    with pytest.raises(DimensionError):
        apply_unitary(psi, np.eye(2), [1, 2])
    with pytest.raises(DimensionError):
        apply_unitary(psi, np.eye(2), [3])


def test_partial_trace_of_bell_state():
    bell = QuditState(2, 2, np.array([1, 0, 0, 1]) / np.sqrt(2))
    rho = partial_trace(bell, [2])
    assert np.allclose(rho.matrix, np.eye(2) / 2)
    assert rho.trace == pytest.approx(1)
    assert site_fidelity(bell, 1, [1, 0]) == pytest.approx(0.5)


@given(st.integers(0, 2**32 - 1))
def test_reduced_states_are_density_operators(seed):
    psi = random_state(3, 3, np.random.default_rng(seed))
    rho = partial_trace(psi, [3, 1])
    assert rho.trace == pytest.approx(1)
    assert rho.eigenvalues().min() > -1e-12
    assert np.allclose(rho.matrix, rho.matrix.conj().T)


def test_site_fidelity_rejects_bad_targets():
    psi = product_state([0, 1], 2)
    assert site_fidelity(psi, 2, [0, 1]) == pytest.approx(1)
    with pytest.raises(ValueError):
        site_fidelity(psi, 1, [1, 1])
    with pytest.raises(DimensionError):
        site_fidelity(psi, 1, [1, 0, 0])


def test_clements_layout_shape():
    assert clements_layout(4) == [0, 2, 1, 0, 2, 1]
    assert len(clements_layout(7)) == 21
    assert clements_n_phases(4) == 16


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_clements_round_trip(dim, seed):
    u = haar_unitary(dim, np.random.default_rng(seed))
    assert np.max(np.abs(clements_ansatz(dim, clements_decompose(u)) - u)) < 1e-9


def test_laughlin_two_qudits_frozen():
    psi = laughlin_state(2)
    assert np.allclose(psi.amplitudes, [0, 1 / np.sqrt(2), -1 / np.sqrt(2), 0])


@pytest.mark.parametrize("n", [2, 3, 4])
def test_laughlin_circuit_matches_sum(n):
    assert laughlin_circuit_state(n).fidelity(laughlin_sum_state(n)) >= 1 - 1e-10
    assert len(laughlin_circuit(n)) == n * (n - 1) // 2


def test_laughlin_state_is_antisymmetric():
    psi = laughlin_state(3).tensor()
    assert np.allclose(psi, -np.swapaxes(psi, 0, 1))
    assert np.allclose(psi, -np.swapaxes(psi, 1, 2))


def test_w_gates():
    w = laughlin_w_gate(0.25, 0, 1, 2)
    assert is_unitary(w)
    assert np.allclose(w[:, 1], [0, 0.5, -np.sqrt(0.75), 0])
    wt = laughlin_wtilde_gate(np.pi / 2, 0, 1, 3)
    assert np.allclose(wt[:, 1], np.eye(9)[3])
    with pytest.raises(ValueError):
        laughlin_w_gate(1.5, 0, 1, 2)


def test_level_gate_moves_level_between_sites():
    d, level = 3, 2
    g = wtilde_level_gate(np.pi / 2, level, d)
    assert is_unitary(g)
    for a in range(d):
        if a == level:
            continue
        out = g @ np.eye(d * d)[a * d + level]
        assert np.allclose(out, np.eye(d * d)[level * d + a])
    assert np.allclose(g @ np.eye(9)[0], np.eye(9)[0])
    assert np.allclose(wtilde_level_gate(0.0, 1, 3), np.eye(9))
