"""Ansatz validation on Laughlin states: can a trial circuit family disentangle the system qudit by qudit?"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..qudit import QuditState, apply_unitary, product_state, site_fidelity, wtilde_level_gate
from .common import SolutionLayer, VquConfig, VquResult, optimize_layer


@dataclass(frozen=True)
class WTildeAnsatz:
    """Trial layers built from level-sum ``W~`` gates.

    Layer ``j`` (``j = 1..n-1``) wants level ``n-j`` on qudit ``j`` and
    applies, for ``i = j+1..n`` in order, one gate on sites ``(j, i)`` that
    swaps that level between the two sites, with one angle per gate. The
    ``crippled`` variant pins every angle at zero, so its layers are the
    identity whatever the parameters.
    """

    n: int
    crippled: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least two qudits")

    @property
    def n_layers(self) -> int:
        return self.n - 1

    def target_level(self, layer: int) -> int:
        return self.n - layer

    def n_params(self, layer: int) -> int:
        return self.n - layer

    def gates(self, layer: int, params) -> list[tuple[tuple[int, int], np.ndarray]]:
        params = np.asarray(params, dtype=float).reshape(-1)
        if params.size != self.n_params(layer):
            raise ValueError(f"layer {layer} takes {self.n_params(layer)} angles, got {params.size}")
        level = self.target_level(layer)
        out = []
        for theta, i in zip(params, range(layer + 1, self.n + 1)):
            angle = 0.0 if self.crippled else theta
            out.append(((layer, i), wtilde_level_gate(angle, level, self.n)))
        return out

    def apply(self, psi: QuditState, layer: int, params) -> QuditState:
        for sites, u in self.gates(layer, params):
            psi = apply_unitary(psi, u, sites)
        return psi

    def layer_unitary(self, layer: int, params) -> np.ndarray:
        dim = self.n**self.n
        cols = np.empty((dim, dim), dtype=complex)
        for c in range(dim):
            e = np.zeros(dim, dtype=complex)
            e[c] = 1.0
            cols[:, c] = self.apply(QuditState(self.n, self.n, e), layer, params).amplitudes
        return cols


def ansatz_validate(
    system_state: QuditState, ansatz: WTildeAnsatz | None = None, config: VquConfig | None = None
) -> VquResult:
    """Disentangle qudit ``j`` into ``|n-j>`` for ``j = 1..n-1`` with the trial layers.

    ``converged`` certifies that the ansatz can represent the state. Every
    layer starts at zero angles. The final fidelity is the overlap with
    ``|n-1, n-2, ..., 0>``.
    """
    config = config or VquConfig()
    n = system_state.n_sites
    if system_state.local_dim != n:
        raise ValueError("expected n qudits of dimension n")
    ansatz = ansatz or WTildeAnsatz(n)
    if ansatz.n != n:
        raise ValueError(f"ansatz is built for {ansatz.n} qudits, state has {n}")
    rng = config.rng()
    target = config.threshold / ansatz.n_layers
    psi = system_state
    traces, circuits, layers, labels = [], [], [], []
    for j in range(1, ansatz.n_layers + 1):
        level = ansatz.target_level(j)
        goal = np.zeros(n)
        goal[level] = 1.0

        def loss(x, psi=psi, j=j, goal=goal):
            out = ansatz.apply(psi, j, x)
            return float(min(1.0, max(0.0, 1.0 - site_fidelity(out, j, goal))))

        trace = optimize_layer(loss, np.zeros(ansatz.n_params(j)), target, config, rng)
        best = np.array(trace.best_point)
        psi = ansatz.apply(psi, j, best)
        traces.append(trace)
        circuits.append(best)
        layers.append(SolutionLayer(ansatz.layer_unitary(j, best)))
        labels.append(f"qudit-{j}")
    final = product_state(range(n - 1, -1, -1), n)
    return VquResult(
        protocol="ansatz-validation",
        n=n,
        m=None,
        layer_traces=traces,
        solution_circuits=circuits,
        final_fidelity=float(psi.fidelity(final)),
        threshold=config.threshold,
        layer_labels=labels,
        extra={"crippled": ansatz.crippled},
        solution_layers=layers,
    )
