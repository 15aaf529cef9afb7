import json

import numpy as np
import pytest

from unsampling.fock import evolve, fock_state, prob_exactly_k, single_photons
from unsampling.linalg import haar_unitary
from unsampling.mesh import MeshCircuit, mesh_to_unitary
from unsampling.protocols import (
    LayerLoss,
    LossKind,
    SolutionLayer,
    VquConfig,
    WTildeAnsatz,
    ansatz_validate,
    assemble_solution,
    bucket_unsample,
    compress_photons,
    confinement_probability,
    global_loss,
    one_body_gamma,
    optical_vqu,
    optical_vqu_compressed,
    optical_vqu_direct,
    qubit_layer_unitary,
    qubit_vqu,
    sample_state,
    unsampling_layout,
)
from unsampling.qudit import QuditState, laughlin_state, product_state


def test_config_validation():
    with pytest.raises(ValueError):
        VquConfig(threshold=0)
    with pytest.raises(ValueError):
        VquConfig(ansatz="triangle")
    with pytest.raises(ValueError):
        VquConfig(pipeline="magic")
    with pytest.raises(ValueError):
        VquConfig(shots=0)
    assert VquConfig().budget_for(3) == 1000
    assert VquConfig().budget_for(100) == 20 * 201
    assert VquConfig(layer_budget=7).budget_for(100) == 7


def test_global_loss():
    a = product_state([0, 1], 2)
    b = QuditState(2, 2, np.array([0, 1, 1, 0]) / np.sqrt(2))
    assert global_loss(a, a) == pytest.approx(0)
    assert global_loss(a, b) == pytest.approx(0.5)
    swap = np.eye(4)[[0, 2, 1, 3]]
    assert global_loss(a, product_state([1, 0], 2), swap) == pytest.approx(0)


def test_layer_loss_kinds():
    psi = fock_state([1, 1, 0])
    assert LayerLoss(LossKind.OPTICAL_SINGLE_PHOTON, 1)(psi) == pytest.approx(0)
    assert LayerLoss(LossKind.OPTICAL_BUCKET, 3)(psi) == pytest.approx(1)
    assert LayerLoss(LossKind.MODE_FLUX, 2)(psi) == pytest.approx(0.5)
    q = product_state([0, 2], 3)
    assert LayerLoss(LossKind.QUBIT_SITE, 2, target_level=2)(q) == pytest.approx(0)
    assert LayerLoss("global-overlap", 1)(q, reference=q) == pytest.approx(0)
    with pytest.raises(ValueError):
        LayerLoss(LossKind.GLOBAL_OVERLAP, 1)(q)


def test_solution_layer_embeddings():
    block = np.array([[0, 1], [1, 0]])
    assert np.allclose(SolutionLayer(block).unitary(4), np.kron(np.eye(2), block))
    direct = SolutionLayer(block, "direct").unitary(3)
    assert np.allclose(direct, np.eye(3)[[0, 2, 1]])


def test_unsampling_layouts():
    assert unsampling_layout(2, 4, "diagonal") == [(2, 3), (2, 2)]
    assert len(unsampling_layout(1, 4)) == 6


@pytest.mark.parametrize("n", [1, 2, 3])
def test_qubit_vqu(n):
    u = haar_unitary(2**n, np.random.default_rng(40 + n))
    result = qubit_vqu(u, VquConfig(seed=n))
    assert result.converged
    assert len(result.layer_traces) == n
    v = assemble_solution(result.solution_layers)
    out = v @ u[:, 0]
    assert abs(out[0]) ** 2 == pytest.approx(result.final_fidelity, abs=1e-12)
    assert 1 - global_loss(np.eye(2**n)[0], u[:, 0], v) == pytest.approx(result.final_fidelity, abs=1e-12)


def test_qubit_layer_of_bar_phases_is_diagonal():
    from unsampling.protocols.qubit import _null_interior

    u = qubit_layer_unitary(_null_interior(4))
    assert np.allclose(u, np.diag(np.diag(u)))


def test_qubit_vqu_on_unsampled_input_is_cheap():
    result = qubit_vqu(np.eye(4))
    assert result.converged
    assert result.total_iterations == 2


def test_optical_direct_n2():
    u = haar_unitary(4, np.random.default_rng(7))
    result = optical_vqu_direct(u, 2)
    assert result.converged
    v = assemble_solution(result.solution_layers)
    out = evolve(v @ u, single_photons(2, 4))
    assert out.probability([1, 1, 0, 0]) == pytest.approx(result.final_fidelity, abs=1e-10)


def test_optical_direct_diagonal_ansatz():
    u = haar_unitary(4, np.random.default_rng(70))
    result = optical_vqu_direct(u, 2, VquConfig(ansatz="diagonal"))
    assert result.converged
    assert [len(c) for c in result.solution_circuits] == [3, 2]


def test_compression_confines_photons():
    u = haar_unitary(9, np.random.default_rng(5))
    circuit, result = compress_photons(u, 3)
    assert result.final_fidelity >= 1 - 1e-4
    assert sum(result.extra["mean_photon_numbers"][3:]) < 1e-4
    w = mesh_to_unitary(circuit) @ u
    assert confinement_probability(w, 3) == pytest.approx(result.final_fidelity)
    # mean photon numbers only depend on the one-body density
    gamma = one_body_gamma(w, 3)
    state = evolve(w, single_photons(3, 9))
    assert sum(prob_exactly_k(state, 9, k) * k for k in range(4)) == pytest.approx(gamma[8, 8].real, abs=1e-12)


def test_single_sweep_leaves_some_leakage():
    u = haar_unitary(9, np.random.default_rng(6))
    one = compress_photons(u, 3, sweeps=1)[1].final_fidelity
    three = compress_photons(u, 3, sweeps=3)[1].final_fidelity
    assert three >= one


def test_bucket_unsample_of_confined_state():
    u = haar_unitary(3, np.random.default_rng(2))
    state = evolve(u, single_photons(3, 3))
    result = bucket_unsample(state, 3)
    assert result.converged
    assert min(result.extra["exactly_one"]) >= 1 - 1e-5


@pytest.mark.parametrize("n", [3])
def test_optical_compressed_pipeline(n):
    u = haar_unitary(n * n, np.random.default_rng(100 + n))
    result = optical_vqu_compressed(u, n, VquConfig(seed=1))
    assert result.converged
    assert result.extra["confinement"] >= 1 - 1e-5 / n
    v = assemble_solution(result.solution_layers)
    out = evolve(v @ u, single_photons(n, n * n))
    assert out.probability([1] * n + [0] * (n * n - n)) == pytest.approx(result.final_fidelity, abs=1e-9)
    assert result.restarts_used >= 0


def test_optical_dispatch():
    u = haar_unitary(4, np.random.default_rng(1))
    assert optical_vqu(u, 2).protocol == "optical-direct"
    assert optical_vqu(u, 2, VquConfig(pipeline="compressed")).protocol == "optical-compressed"


def test_shot_noise_config_runs():
    u = haar_unitary(4, np.random.default_rng(3))
    result = optical_vqu_direct(u, 2, VquConfig(shots=1000, max_restarts=0, layer_budget=150))
    assert result.total_iterations <= 2 * 150
    assert 0 <= result.final_fidelity <= 1


@pytest.mark.parametrize("n", [2, 3, 4])
def test_ansatz_validation(n):
    result = ansatz_validate(laughlin_state(n))
    assert result.converged
    assert [len(t) > 0 for t in result.layer_traces] == [True] * (n - 1)
    v = assemble_solution(result.solution_layers)
    target = product_state(range(n - 1, -1, -1), n).amplitudes
    assert abs(np.vdot(target, v @ laughlin_state(n).amplitudes)) ** 2 == pytest.approx(result.final_fidelity)


def test_crippled_ansatz_fails():
    result = ansatz_validate(laughlin_state(3), WTildeAnsatz(3, crippled=True), VquConfig(max_restarts=1))
    assert not result.converged
    assert result.final_fidelity == pytest.approx(1 / 6)


def test_ansatz_shape_checks():
    with pytest.raises(ValueError):
        ansatz_validate(laughlin_state(3), WTildeAnsatz(4))
    with pytest.raises(ValueError):
        WTildeAnsatz(3).gates(1, [0.0])


def test_result_serializes():
    result = qubit_vqu(haar_unitary(4, np.random.default_rng(0)))
    data = json.loads(result.to_json())
    assert data["converged"] is True
    assert data["total_iterations"] == sum(len(t["losses"]) for t in data["layer_traces"])
    assert len(data["layers"]) == 2
    circuits = optical_vqu_direct(haar_unitary(3, np.random.default_rng(0)), 1).to_dict()["solution_circuits"]
    assert MeshCircuit.from_dict(circuits[0]).dim == 3


def test_single_photon_loss_matches_marginal():
    from unsampling.fock import apply_circuit
    from unsampling.protocols import layout_circuit, single_photon_loss

    rng = np.random.default_rng(9)
    psi = sample_state(haar_unitary(4, rng), 2)
    layout = unsampling_layout(1, 4)
    x = rng.uniform(-3, 3, 2 * len(layout))
    out = apply_circuit(layout_circuit(4, layout, x), psi)
    assert single_photon_loss(psi, layout)(x) == pytest.approx(1 - prob_exactly_k(out, 1, 1), abs=1e-12)
