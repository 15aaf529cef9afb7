"""Shared protocol types: configuration, layer losses, results and solution assembly."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..fock import FockState, mean_photon_number, prob_exactly_k, prob_up_to_k
from ..mesh import MeshCircuit, mesh_to_unitary
from ..optimizer import (
    OptimizationProblem,
    OptimizationTrace,
    minimize_with_restarts,
    with_shot_noise,
)
from ..qudit import DimensionError, QuditState, site_fidelity

DEFAULT_THRESHOLD = 1e-5
ANSATZ_CHOICES = ("reck-full", "diagonal")
PIPELINE_CHOICES = ("direct", "compressed")


@dataclass(frozen=True)
class VquConfig:
    """Knobs shared by every protocol.

    ``threshold`` is the final infidelity a run must reach to count as
    converged. Each of the ``L`` optimized layers is driven to
    ``threshold / L`` so the union bound keeps the total within
    ``threshold``. ``layer_budget`` caps evaluations per optimizer run (one
    restart is one run); ``None`` picks ``max(1000, 20 * (2 * dim + 1))``.
    """

    threshold: float = DEFAULT_THRESHOLD
    max_restarts: int = 10
    layer_budget: int | None = None
    rho_begin: float = 0.5
    rho_end: float = 1e-8
    ansatz: str = "reck-full"
    pipeline: str | None = None
    compression_sweeps: int = 3
    shots: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must lie in (0, 1)")
        if self.max_restarts < 0:
            raise ValueError("max_restarts must be >= 0")
        if self.ansatz not in ANSATZ_CHOICES:
            raise ValueError(f"ansatz must be one of {ANSATZ_CHOICES}")
        if self.pipeline is not None and self.pipeline not in PIPELINE_CHOICES:
            raise ValueError(f"pipeline must be one of {PIPELINE_CHOICES}")
        if self.compression_sweeps < 1:
            raise ValueError("compression_sweeps must be >= 1")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be >= 1")

    def budget_for(self, dim: int) -> int:
        if self.layer_budget is not None:
            return self.layer_budget
        return max(1000, 20 * (2 * dim + 1))

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


class LossKind(str, enum.Enum):
    GLOBAL_OVERLAP = "global-overlap"
    QUBIT_SITE = "qubit-site"
    OPTICAL_SINGLE_PHOTON = "optical-single-photon"
    OPTICAL_BUCKET = "optical-bucket"
    MODE_FLUX = "mode-flux"


@dataclass(frozen=True)
class LayerLoss:
    """A layer objective; every kind evaluates to a value in ``[0, 1]``.

    ``target_index`` is a 1-based site or mode. ``target_level`` is the
    desired level of the site for the qudit kind.
    """

    kind: LossKind
    target_index: int
    target_level: int = 0

    def __call__(self, state, reference=None, operator=None) -> float:
        kind = LossKind(self.kind)
        if kind is LossKind.GLOBAL_OVERLAP:
            if reference is None:
                raise ValueError("global-overlap loss needs the reference input state")
            return global_loss(reference, state, operator)
        if kind is LossKind.QUBIT_SITE:
            target = np.zeros(state.local_dim)
            target[self.target_level] = 1.0
            return _clip01(1.0 - site_fidelity(state, self.target_index, target))
        if kind is LossKind.OPTICAL_SINGLE_PHOTON:
            return _clip01(1.0 - prob_exactly_k(state, self.target_index, 1))
        if kind is LossKind.OPTICAL_BUCKET:
            return _clip01(1.0 - prob_up_to_k(state, self.target_index, state.n_photons))
        # mode flux normalized by the photon number
        return _clip01(mean_photon_number(state, self.target_index) / state.n_photons)


def _clip01(x: float) -> float:
    return float(min(1.0, max(0.0, x)))


def _amplitudes(state) -> np.ndarray:
    if isinstance(state, (QuditState, FockState)):
        return np.asarray(state.amplitudes)
    return np.asarray(state, dtype=complex).reshape(-1)


def global_loss(psi_in, psi_out, v=None) -> float:
    """``1 - |<psi_in| V |psi_out>|^2``; ``V = None`` means the identity."""
    a_in, a_out = _amplitudes(psi_in), _amplitudes(psi_out)
    if a_in.shape != a_out.shape:
        raise DimensionError(f"state dimensions differ: {a_in.size} vs {a_out.size}")
    if v is not None:
        v = np.asarray(v, dtype=complex)
        if v.shape != (a_out.size, a_out.size):
            raise DimensionError(f"operator of shape {v.shape} does not act on dimension {a_out.size}")
        a_out = v @ a_out
    return _clip01(1.0 - abs(np.vdot(a_in, a_out)) ** 2)


@dataclass(frozen=True)
class SolutionLayer:
    """One layer of a solution, embedded into the full space on demand.

    ``embedding="tensor"`` pads with an identity factor on the left
    (``I ⊗ block``, frozen qudits first); ``"direct"`` pads with an identity
    block on the leading modes (``I ⊕ block``).
    """

    block: np.ndarray
    embedding: str = "tensor"

    def unitary(self, total_dim: int) -> np.ndarray:
        size = self.block.shape[0]
        if self.embedding == "tensor":
            if total_dim % size:
                raise DimensionError(f"block of size {size} does not tile dimension {total_dim}")
            return np.kron(np.eye(total_dim // size), self.block)
        if self.embedding == "direct":
            if size > total_dim:
                raise DimensionError(f"block of size {size} exceeds dimension {total_dim}")
            out = np.eye(total_dim, dtype=complex)
            out[total_dim - size :, total_dim - size :] = self.block
            return out
        raise ValueError(f"unknown embedding {self.embedding!r}")


def assemble_solution(layers: Sequence[MeshCircuit | SolutionLayer], total_dim: int | None = None) -> np.ndarray:
    """``V_sol = V_L ... V_2 V_1`` with each layer padded by identities on frozen subsystems or modes."""
    if not layers:
        if total_dim is None:
            raise DimensionError("cannot infer the dimension of an empty solution")
        return np.eye(total_dim, dtype=complex)
    if total_dim is None:
        first = layers[0]
        total_dim = first.dim if isinstance(first, MeshCircuit) else first.block.shape[0]
    out = np.eye(total_dim, dtype=complex)
    for layer in layers:
        if isinstance(layer, MeshCircuit):
            if layer.dim != total_dim:
                raise DimensionError(f"{layer.dim}-mode layer in a {total_dim}-mode solution")
            u = mesh_to_unitary(layer)
        else:
            u = layer.unitary(total_dim)
        out = u @ out
    return out


@dataclass
class VquResult:
    protocol: str
    n: int
    m: int | None
    layer_traces: list[OptimizationTrace]
    solution_circuits: list
    final_fidelity: float
    threshold: float = DEFAULT_THRESHOLD
    layer_labels: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    solution_layers: list = field(default_factory=list, repr=False, compare=False)

    @property
    def converged(self) -> bool:
        return bool(self.final_fidelity >= 1.0 - self.threshold)

    @property
    def total_iterations(self) -> int:
        return int(sum(len(t) for t in self.layer_traces))

    @property
    def restarts_used(self) -> int:
        return int(sum(t.n_runs - 1 for t in self.layer_traces))

    def layer_summaries(self) -> list[dict]:
        labels = self.layer_labels or [f"layer-{i + 1}" for i in range(len(self.layer_traces))]
        return [
            {"label": lab, "iterations": len(t), "final_loss": t.best_loss if len(t) else None}
            for lab, t in zip(labels, self.layer_traces)
        ]

    def to_dict(self, include_points: bool = False) -> dict:
        circuits = [c.to_dict() if isinstance(c, MeshCircuit) else np.asarray(c).tolist() for c in self.solution_circuits]
        return {
            "protocol": self.protocol,
            "n": self.n,
            "m": self.m,
            "final_fidelity": float(self.final_fidelity),
            "converged": self.converged,
            "threshold": self.threshold,
            "total_iterations": self.total_iterations,
            "restarts_used": self.restarts_used,
            "layers": self.layer_summaries(),
            "solution_circuits": circuits,
            "layer_traces": [t.to_dict(include_points) for t in self.layer_traces],
            "extra": self.extra,
        }

    def to_json(self, include_points: bool = False) -> str:
        return json.dumps(self.to_dict(include_points))


def optimize_layer(
    loss: Callable[[np.ndarray], float],
    x0: np.ndarray,
    target: float,
    config: VquConfig,
    rng: np.random.Generator,
) -> OptimizationTrace:
    """Minimize one layer loss with restarts, optionally through the shot-noise wrapper."""
    objective = loss if config.shots is None else with_shot_noise(loss, config.shots, rng)
    problem = OptimizationProblem(
        objective,
        x0,
        budget=config.budget_for(np.size(x0)),
        target=target,
        rho_begin=config.rho_begin,
        rho_end=config.rho_end,
    )
    return minimize_with_restarts(problem, rng, config.max_restarts)
