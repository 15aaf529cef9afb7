from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import creation_expansion, naive_permanent
from unsampling.fock import (
    CapacityError,
    ConservationError,
    ModeError,
    ShapeError,
    apply_circuit,
    apply_phases,
    enumerate_basis,
    evolve,
    fock_state,
    mean_photon_number,
    multichoose,
    one_body_density,
    permanent,
    prob_exactly_k,
    prob_up_to_k,
    scaling_identity,
    single_photons,
    transition_amplitude,
)
from unsampling.linalg import haar_unitary
from unsampling.mesh import mesh_to_unitary, reck_circuit


def test_permanent_known_values():
    assert permanent([[1, 2], [3, 4]]) == pytest.approx(10)
    assert permanent(np.ones((4, 4))) == pytest.approx(24)
    assert permanent(np.zeros((0, 0))) == 1
    with pytest.raises(ShapeError):
        permanent(np.ones((2, 3)))


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_permanent_matches_permutation_sum(k, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    assert abs(permanent(a) - naive_permanent(a)) < 1e-10


@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_permanent_row_permutation_invariant(k, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    assert abs(permanent(a[rng.permutation(k)]) - permanent(a)) < 1e-10


def test_basis_sizes():
    assert multichoose(9, 3) == 165
    assert multichoose(36, 6) == comb(41, 6) == 4_496_388
    basis = enumerate_basis(2, 3)
    assert basis[0] == (2, 0, 0) and len(basis) == 6
    with pytest.raises(CapacityError):
        enumerate_basis(6, 36, max_size=1000)


def test_hong_ou_mandel():
    bs = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    out = evolve(bs, fock_state([1, 1]))
    assert out.probability([1, 1]) < 1e-12
    assert out.amplitude([2, 0]) == pytest.approx(1 / np.sqrt(2))
    assert out.amplitude([0, 2]) == pytest.approx(-1 / np.sqrt(2))


@pytest.mark.parametrize("n,m", [(2, 2), (2, 4), (3, 3), (1, 5)])
@pytest.mark.parametrize("method", ["permanent", "mesh"])
def test_evolve_matches_creation_operators(n, m, method):
    u = haar_unitary(m, np.random.default_rng(n * 10 + m))
    basis = enumerate_basis(n, m)
    for s in basis.states:
        out = evolve(u, fock_state(s), method=method)
        ref = creation_expansion(u, tuple(int(x) for x in s))
        for t, amp in zip(basis.states, out.amplitudes):
            assert abs(amp - ref.get(tuple(int(x) for x in t), 0)) < 1e-10


def test_single_photon_follows_unitary_column():
    u = haar_unitary(5, np.random.default_rng(4))
    out = evolve(u, fock_state([0, 0, 1, 0, 0]))
    for i in range(5):
        occ = [0] * 5
        occ[i] = 1
        assert out.amplitude(occ) == pytest.approx(u[i, 2])


@given(st.integers(0, 2**32 - 1))
def test_evolution_preserves_norm_and_photons(seed):
    rng = np.random.default_rng(seed)
    u = haar_unitary(4, rng)
    out = evolve(u, single_photons(2, 4))
    assert abs(out.norm - 1) < 1e-10
    assert sum(mean_photon_number(out, i) for i in range(1, 5)) == pytest.approx(2, abs=1e-10)


def test_mean_photon_number_from_columns():
    # nbar_i = sum over occupied input modes of |U_ij|^2
    u = haar_unitary(6, np.random.default_rng(8))
    out = evolve(u, single_photons(3, 6))
    expected = np.sum(np.abs(u[:, :3]) ** 2, axis=1)
    got = [mean_photon_number(out, i) for i in range(1, 7)]
    assert np.allclose(got, expected, atol=1e-10)
    g = one_body_density(out)
    assert np.allclose(np.diag(g).real, expected, atol=1e-10)
    assert np.allclose(g, g.conj().T, atol=1e-12)


def test_mesh_and_phases_match_unitary():
    rng = np.random.default_rng(12)
    c = reck_circuit(4, rng.uniform(-3, 3, 12))
    theta = rng.uniform(-3, 3, 4)
    psi = single_photons(2, 4)
    via_mesh = apply_phases(theta, apply_circuit(c, psi))
    direct = evolve(np.diag(np.exp(1j * theta)) @ mesh_to_unitary(c), psi, method="permanent")
    assert np.allclose(via_mesh.amplitudes, direct.amplitudes, atol=1e-12)


def test_probability_marginals():
    u = haar_unitary(3, np.random.default_rng(2))
    out = evolve(u, fock_state([2, 1, 0]))
    total = sum(prob_exactly_k(out, 2, k) for k in range(4))
    assert total == pytest.approx(1)
    assert prob_up_to_k(out, 2, 3) == pytest.approx(1 - prob_exactly_k(out, 2, 0))
    assert prob_up_to_k(out, 2, 1) == pytest.approx(prob_exactly_k(out, 2, 1))
    with pytest.raises(ModeError):
        prob_exactly_k(out, 4, 1)
    with pytest.raises(ValueError):
        prob_up_to_k(out, 1, 0)


def test_transition_amplitude_conservation():
    with pytest.raises(ConservationError):
        transition_amplitude(np.eye(2), [1, 0], [1, 1])
    with pytest.raises(ShapeError):
        evolve(np.eye(3), single_photons(1, 2))


def test_scaling_identity_frozen_values():
    assert scaling_identity(2) == (Fraction(2, 5), Fraction(2, 5))
    assert scaling_identity(3)[0] == Fraction(3, 11)
    for n in range(1, 21):
        lhs, rhs = scaling_identity(n)
        assert lhs == rhs == Fraction(n, n * n + n - 1)
    with pytest.raises(ValueError):
        scaling_identity(0)
