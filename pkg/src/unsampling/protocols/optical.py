"""Optical unsampling: direct single-photon layers, photon compression and bucket-detector layers."""

from __future__ import annotations

import numpy as np

from ..fock import (
    FockState,
    apply_circuit,
    apply_two_mode_amplitudes,
    evolve,
    permanent,
    prob_exactly_k,
    single_photons,
)
from ..linalg import as_unitary
from ..mesh import BAR_ALPHA, MeshCircuit, MziPlacement, mesh_to_unitary, mzi_matrix, reck_layout
from ..optimizer import OptimizationProblem, OptimizationTrace, minimize
from .common import VquConfig, VquResult, optimize_layer


def unsampling_layout(first: int, last: int, ansatz: str = "reck-full") -> list[tuple[int, int]]:
    """``(k, j)`` MZI labels of one unsampling layer on modes ``first..last``, in application order.

    ``"reck-full"`` is a complete Reck triangle on those modes. ``"diagonal"``
    is a single chain that starts at the bottom pair and ends on
    ``(first, first+1)``, the minimal layer able to route one photon from
    any of the modes into mode ``first``.
    """
    if ansatz == "reck-full":
        return reck_layout(last, first_mode=first)
    if ansatz == "diagonal":
        return [(first, j) for j in range(last - 1, first - 1, -1)]
    raise ValueError(f"unknown ansatz {ansatz!r}")


def layout_circuit(dim: int, layout, phases) -> MeshCircuit:
    pairs = np.asarray(phases, dtype=float).reshape(-1, 2)
    return MeshCircuit(dim, tuple(MziPlacement(k, j, float(a), float(f)) for (k, j), (a, f) in zip(layout, pairs)))


def _apply_layout(layout, phases, basis, amps) -> np.ndarray:
    for (_, j), (a, f) in zip(layout, np.asarray(phases, dtype=float).reshape(-1, 2)):
        amps = apply_two_mode_amplitudes(mzi_matrix(a, f), j, basis, amps)
    return amps


def unsampled_probability(psi: FockState, n: int) -> float:
    """Probability of the outcome ``(1, ..., 1, 0, ..., 0)`` with ``n`` leading ones."""
    occ = np.zeros(psi.n_modes, dtype=int)
    occ[:n] = 1
    return psi.probability(occ)


def confinement_probability(u, n: int) -> float:
    """Probability that all ``n`` photons of ``u|1..1,0..0>`` leave in the first ``n`` modes.

    Equals ``perm(W^dagger W)`` with ``W = u[:n, :n]``.
    """
    w = np.asarray(u, dtype=complex)[:n, :n]
    return float(min(1.0, max(0.0, permanent(w.conj().T @ w).real)))


def mode_flux(gamma: np.ndarray, mode: int) -> float:
    """Mean photon number of 1-based ``mode`` from the one-body density ``gamma``."""
    return float(gamma[mode - 1, mode - 1].real)


def one_body_gamma(u, n: int) -> np.ndarray:
    """``U_n U_n^dagger`` for ``U_n`` the first ``n`` columns; its diagonal holds the mean photon numbers."""
    cols = np.asarray(u, dtype=complex)[:, :n]
    return cols @ cols.conj().T


def sample_state(u_sample, n: int) -> FockState:
    u = np.asarray(as_unitary(u_sample))
    return evolve(u, single_photons(n, u.shape[0]))


def single_photon_loss(psi: FockState, layout, mode: int = 1):
    """Loss ``1 - P(exactly one photon in mode)`` of ``psi`` after the MZIs of ``layout`` with the given phases."""
    mask = psi.basis.states[:, mode - 1] == 1

    def loss(x):
        out = _apply_layout(layout, x, psi.basis, psi.amplitudes)
        return float(min(1.0, max(0.0, 1.0 - np.sum(np.abs(out[mask]) ** 2))))

    return loss


def _check_sizes(u: np.ndarray, n: int) -> int:
    m = u.shape[0]
    if not 1 <= n <= m:
        raise ValueError(f"need 1 <= n <= m, got n={n}, m={m}")
    return m


def optical_vqu_direct(u_sample, n: int, config: VquConfig | None = None) -> VquResult:
    """Unsample ``U|1..1,0..0>`` with ``n`` layers that each maximize the single-photon probability of one mode.

    Layer ``j`` acts on modes ``j..m`` and starts from the all-bar setting, a
    diagonal circuit, so an already unsampled state needs no optimization.
    """
    config = config or VquConfig()
    u = np.asarray(as_unitary(u_sample))
    m = _check_sizes(u, n)
    rng = config.rng()
    target = config.threshold / n
    psi = evolve(u, single_photons(n, m))
    basis, amps = psi.basis, psi.amplitudes
    traces, circuits, labels = [], [], []
    for j in range(1, n + 1):
        layout = unsampling_layout(j, m, config.ansatz)
        if not layout:
            continue
        mask = basis.states[:, j - 1] == 1

        def loss(x, layout=layout, amps=amps, mask=mask):
            out = _apply_layout(layout, x, basis, amps)
            return float(min(1.0, max(0.0, 1.0 - np.sum(np.abs(out[mask]) ** 2))))

        x0 = np.tile([BAR_ALPHA, 0.0], len(layout))
        trace = optimize_layer(loss, x0, target, config, rng)
        amps = _apply_layout(layout, trace.best_point, basis, amps)
        traces.append(trace)
        circuits.append(layout_circuit(m, layout, trace.best_point))
        labels.append(f"single-photon-{j}")
    final = FockState(basis, amps)
    return VquResult(
        protocol="optical-direct",
        n=n,
        m=m,
        layer_traces=traces,
        solution_circuits=circuits,
        final_fidelity=unsampled_probability(final, n),
        threshold=config.threshold,
        layer_labels=labels,
        solution_layers=list(circuits),
    )


def _mzi_flux(gamma_block: np.ndarray, n: int):
    """Normalized flux in the lower mode of an MZI as a function of ``(alpha, phi)``."""

    def loss(x):
        s, c = np.sin(x[0] / 2), np.cos(x[0] / 2)
        row = np.array([np.exp(1j * x[1]) * c, -s])
        return float(min(1.0, max(0.0, (row @ gamma_block @ row.conj()).real / n)))

    return loss


def _compression_sweep(gamma, n, m, config, sweep_index):
    """One pass of ``n`` diagonals; returns (placements, trace, gamma, per-MZI start indices).

    The sweep's trace is a single run; the start index of every MZI
    subproblem inside it is returned separately, since those are not restarts.
    """
    placements, starts = [], []
    trace = OptimizationTrace()
    for j in range(1, n + 1):
        for k in range(m - 1, 0, -1):
            block = gamma[k - 1 : k + 1, k - 1 : k + 1]
            problem = OptimizationProblem(
                _mzi_flux(block, n),
                np.zeros(2),
                budget=config.budget_for(2),
                target=0.0,
                rho_begin=config.rho_begin,
                rho_end=config.rho_end,
            )
            run = minimize(problem)
            starts.append(len(trace))
            trace.points.extend(run.points)
            trace.losses.extend(run.losses)
            trace.termination_reason = run.termination_reason
            alpha, phi = run.best_point
            mz = mzi_matrix(alpha, phi)
            gamma[k - 1 : k + 1, :] = mz @ gamma[k - 1 : k + 1, :]
            gamma[:, k - 1 : k + 1] = gamma[:, k - 1 : k + 1] @ mz.conj().T
            placements.append(MziPlacement(j + n * sweep_index, k, float(alpha), float(phi)))
    return placements, trace, gamma, starts


def compress_photons(
    u_sample, n: int, config: VquConfig | None = None, sweeps: int | None = None
) -> tuple[MeshCircuit, VquResult]:
    """Squeeze the photons of ``U|1..1,0..0>`` into the first ``n`` modes.

    Each sweep appends ``n`` diagonals; each holds MZIs on modes
    ``(k, k+1)`` for ``k = m-1`` down to ``1``, each starting at ``(0, 0)``
    and tuned on its own to minimize the mean photon number of mode
    ``k+1``. Mean photon numbers only depend on the one-body density
    ``Gamma = U_n U_n^dagger``, which each MZI updates as
    ``M Gamma M^dagger``. The result's fidelity is the probability that
    every photon sits in the first ``n`` modes; ``placements[i].k`` records
    the global diagonal index.
    """
    config = config or VquConfig()
    u = np.asarray(as_unitary(u_sample))
    m = _check_sizes(u, n)
    sweeps = config.compression_sweeps if sweeps is None else sweeps
    gamma = one_body_gamma(u, n)
    placements, traces, starts = [], [], []
    for s in range(sweeps):
        if m == n:
            break
        new, trace, gamma, mzi_starts = _compression_sweep(gamma, n, m, config, s)
        placements.extend(new)
        traces.append(trace)
        starts.append(mzi_starts)
    circuit = MeshCircuit(m, tuple(placements))
    prob = confinement_probability(mesh_to_unitary(circuit) @ u, n)
    result = VquResult(
        protocol="optical-compression",
        n=n,
        m=m,
        layer_traces=traces,
        solution_circuits=[circuit],
        final_fidelity=prob,
        threshold=config.threshold,
        layer_labels=[f"compression-sweep-{s + 1}" for s in range(len(traces))],
        extra={
            "mean_photon_numbers": [float(x) for x in np.real(np.diagonal(gamma))],
            "mzi_starts": starts,
        },
        solution_layers=[circuit],
    )
    return circuit, result


def bucket_unsample(state: FockState, n: int, config: VquConfig | None = None) -> VquResult:
    """Unsample photons already confined to modes ``1..n`` using bucket-detector losses.

    Layer ``j = 1..n-1`` acts on modes ``j..n`` (all phases start at
    ``(0, 0)``) and maximizes the probability of any click in mode ``j``.
    Once a mode clicks with certainty it holds exactly one photon; the
    result records ``prob_exactly_k(final, j, 1)`` per mode so callers can
    check it.
    """
    config = config or VquConfig()
    if state.n_photons != n:
        raise ValueError(f"state holds {state.n_photons} photons, not {n}")
    m = state.n_modes
    rng = config.rng()
    target = config.threshold / n
    basis, amps = state.basis, state.amplitudes
    traces, circuits, labels = [], [], []
    for j in range(1, n):
        layout = unsampling_layout(j, n, config.ansatz)
        occ = basis.states[:, j - 1]
        mask = (occ >= 1) & (occ <= n)

        def loss(x, layout=layout, amps=amps, mask=mask):
            out = _apply_layout(layout, x, basis, amps)
            return float(min(1.0, max(0.0, 1.0 - np.sum(np.abs(out[mask]) ** 2))))

        trace = optimize_layer(loss, np.zeros(2 * len(layout)), target, config, rng)
        amps = _apply_layout(layout, trace.best_point, basis, amps)
        traces.append(trace)
        circuits.append(layout_circuit(m, layout, trace.best_point))
        labels.append(f"bucket-{j}")
    final = FockState(basis, amps)
    return VquResult(
        protocol="optical-bucket",
        n=n,
        m=m,
        layer_traces=traces,
        solution_circuits=circuits,
        final_fidelity=unsampled_probability(final, n),
        threshold=config.threshold,
        layer_labels=labels,
        extra={"exactly_one": [prob_exactly_k(final, j, 1) for j in range(1, n + 1)]},
        solution_layers=list(circuits),
    )


def optical_vqu_compressed(u_sample, n: int, config: VquConfig | None = None) -> VquResult:
    """Compression followed by bucket-detector layers.

    After the configured sweeps, further sweeps (at most ``max_restarts``
    of them) are added while the photons leak out of the first ``n`` modes
    with probability above ``threshold / n``.
    """
    config = config or VquConfig()
    u = np.asarray(as_unitary(u_sample))
    m = _check_sizes(u, n)
    circuit, comp = compress_photons(u, n, config)
    extra_sweeps = 0
    while 1.0 - comp.final_fidelity > config.threshold / n and extra_sweeps < config.max_restarts and m > n:
        extra_sweeps += 1
        more, more_result = compress_photons(mesh_to_unitary(circuit) @ u, n, config, sweeps=1)
        shift = max((p.k for p in circuit.placements), default=0)
        circuit = circuit + MeshCircuit(m, tuple(MziPlacement(p.k + shift, p.j, p.alpha, p.phi) for p in more.placements))
        comp.layer_traces.extend(more_result.layer_traces)
        comp.extra["mzi_starts"].extend(more_result.extra["mzi_starts"])
        comp.layer_labels.append(f"compression-sweep-{len(comp.layer_traces)}")
        comp.final_fidelity = more_result.final_fidelity
    state = apply_circuit(circuit, evolve(u, single_photons(n, m)))
    bucket = bucket_unsample(state, n, config)
    return VquResult(
        protocol="optical-compressed",
        n=n,
        m=m,
        layer_traces=comp.layer_traces + bucket.layer_traces,
        solution_circuits=[circuit] + bucket.solution_circuits,
        final_fidelity=bucket.final_fidelity,
        threshold=config.threshold,
        layer_labels=comp.layer_labels + bucket.layer_labels,
        extra={
            "confinement": comp.final_fidelity,
            "compression_sweeps": len(comp.layer_traces),
            "exactly_one": bucket.extra["exactly_one"],
        },
        solution_layers=[circuit] + bucket.solution_layers,
    )


def optical_vqu(u_sample, n: int, config: VquConfig | None = None) -> VquResult:
    """Dispatch on ``config.pipeline``; ``None`` means direct for ``n <= 2`` and compressed otherwise."""
    config = config or VquConfig()
    pipeline = config.pipeline or ("direct" if n <= 2 else "compressed")
    if pipeline == "direct":
        return optical_vqu_direct(u_sample, n, config)
    return optical_vqu_compressed(u_sample, n, config)
