"""Layer-wise unsampling of an n-qubit circuit with rectangular MZI meshes."""

from __future__ import annotations

import numpy as np

from ..linalg import as_unitary
from ..mesh import BAR_ALPHA
from ..qudit import apply_clements, clements_layout
from .common import SolutionLayer, VquConfig, VquResult, optimize_layer


def qubit_layer_phases(interior) -> np.ndarray:
    """Full Clements phase vector from the optimized interior phases (output phases zero)."""
    interior = np.asarray(interior, dtype=float)
    dim = int(round((1 + np.sqrt(1 + 4 * interior.size)) / 2))
    return np.concatenate([interior, np.zeros(dim)])


def qubit_layer_unitary(interior) -> np.ndarray:
    phases = qubit_layer_phases(interior)
    dim = int(round(np.sqrt(phases.size)))
    u = np.eye(dim, dtype=complex)
    apply_clements(u, phases)
    return u


def _null_interior(dim: int) -> np.ndarray:
    return np.tile([BAR_ALPHA, 0.0], len(clements_layout(dim)))


def qubit_vqu(u_sample, config: VquConfig | None = None) -> VquResult:
    """Unsample ``|psi_out> = U|0...0>`` one qubit at a time.

    Layer ``j`` is a rectangular mesh on qubits ``j..n`` (dimension
    ``2^(n-j+1)``) with ``D(D-1)`` free phases; it maximizes the probability
    of qubit ``j`` in ``|0>``. Each mesh starts from the all-bar setting,
    which is diagonal, so an already unsampled state costs one evaluation.
    """
    config = config or VquConfig()
    u = np.asarray(as_unitary(u_sample))
    total = u.shape[0]
    n = int(round(np.log2(total)))
    if 2**n != total or n < 1:
        raise ValueError(f"dimension {total} is not a power of two")
    rng = config.rng()
    target = config.threshold / n

    psi = u[:, 0].copy()
    traces, circuits, layers = [], [], []
    for j in range(1, n + 1):
        dim = 2 ** (n - j + 1)
        # rows index qubits j..n, columns the frozen qubits 1..j-1
        rows0 = psi.reshape(2 ** (j - 1), dim).T.copy()
        half = dim // 2

        def loss(x, rows0=rows0, half=half):
            rows = rows0.copy()
            apply_clements(rows, qubit_layer_phases(x))
            return float(min(1.0, max(0.0, 1.0 - np.sum(np.abs(rows[:half]) ** 2))))

        trace = optimize_layer(loss, _null_interior(dim), target, config, rng)
        best = np.array(trace.best_point)
        rows = rows0.copy()
        apply_clements(rows, qubit_layer_phases(best))
        psi = rows.T.reshape(-1)
        traces.append(trace)
        circuits.append(best)
        layers.append(SolutionLayer(qubit_layer_unitary(best)))

    fidelity = float(abs(psi[0]) ** 2)
    return VquResult(
        protocol="qubit-vqu",
        n=n,
        m=None,
        layer_traces=traces,
        solution_circuits=circuits,
        final_fidelity=fidelity,
        threshold=config.threshold,
        layer_labels=[f"qubit-{j}" for j in range(1, n + 1)],
        solution_layers=layers,
    )
