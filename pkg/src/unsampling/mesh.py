"""Mach-Zehnder meshes: MZI blocks, Reck triangles and diagonal sub-circuits.

Conventions
-----------
* Modes are 1-based in :class:`MziPlacement` (``j`` acts on modes ``j, j+1``),
  matching how circuits are usually drawn; arrays are 0-based as usual.
* ``MeshCircuit.placements`` are listed in application order. The first
  placement acts on the input state first, so
  ``mesh_to_unitary(c) == M_last @ ... @ M_2 @ M_1``.
* A full Reck mesh on ``m`` modes is the sequence of diagonals
  ``D_{m-1}, ..., D_2, D_1``; diagonal ``D_k`` holds the MZIs on
  ``j = k, k+1, ..., m-1`` in that order. ``D_1`` is the last diagonal a
  state passes through and is the only one that touches mode 1, so
  ``D_1^dagger @ U`` leaves mode 1 untouched.
* :func:`reck_decompose` returns output phases ``theta`` with
  ``U == diag(exp(1j*theta)) @ mesh_to_unitary(circuit)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import DEFAULT_ATOL, as_unitary

#: internal phase giving the "bar" state ``[[1, 0], [0, -1]]`` (phi = 0)
BAR_ALPHA = np.pi
#: internal phase giving the "cross" (mode swap) state; (0, 0) is the
#: initialization used by the compression protocol
CROSS_ALPHA = 0.0


class PlacementError(ValueError):
    pass


class ArityError(ValueError):
    pass


@dataclass(frozen=True)
class MziPlacement:
    k: int
    j: int
    alpha: float
    phi: float

    def to_dict(self) -> dict:
        return {"k": self.k, "j": self.j, "alpha": self.alpha, "phi": self.phi}


@dataclass(frozen=True)
class MeshCircuit:
    dim: int
    placements: tuple[MziPlacement, ...] = field(default=())

    def __post_init__(self):
        if self.dim < 1:
            raise PlacementError(f"mesh dimension must be >= 1, got {self.dim}")
        object.__setattr__(self, "placements", tuple(self.placements))
        for p in self.placements:
            if not 1 <= p.j <= self.dim - 1:
                raise PlacementError(f"MZI on modes ({p.j}, {p.j + 1}) does not fit {self.dim} modes")

    def __len__(self) -> int:
        return len(self.placements)

    def __add__(self, other: "MeshCircuit") -> "MeshCircuit":
        if other.dim != self.dim:
            raise PlacementError("cannot concatenate meshes of different dimension")
        return MeshCircuit(self.dim, self.placements + other.placements)

    @property
    def phases(self) -> np.ndarray:
        """Flat ``[alpha_1, phi_1, alpha_2, phi_2, ...]`` vector."""
        return np.array([[p.alpha, p.phi] for p in self.placements], dtype=float).reshape(-1)

    def with_phases(self, phases) -> "MeshCircuit":
        phases = np.asarray(phases, dtype=float).reshape(-1, 2)
        if len(phases) != len(self.placements):
            raise ArityError(f"expected {2 * len(self.placements)} phases, got {2 * len(phases)}")
        return MeshCircuit(
            self.dim,
            tuple(MziPlacement(p.k, p.j, float(a), float(f)) for p, (a, f) in zip(self.placements, phases)),
        )

    def to_dict(self) -> dict:
        return {"dim": self.dim, "placements": [p.to_dict() for p in self.placements]}

    @classmethod
    def from_dict(cls, data: dict) -> "MeshCircuit":
        return cls(
            int(data["dim"]),
            tuple(
                MziPlacement(int(p["k"]), int(p["j"]), float(p["alpha"]), float(p["phi"]))
                for p in data["placements"]
            ),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MeshCircuit":
        return cls.from_dict(json.loads(text))


def mzi_matrix(alpha: float, phi: float) -> np.ndarray:
    """2x2 MZI transfer matrix with internal phase ``alpha`` and external phase ``phi``."""
    s, c = np.sin(alpha / 2), np.cos(alpha / 2)
    e = np.exp(1j * phi)
    return np.array([[e * s, c], [e * c, -s]], dtype=complex)


def embed(placement: MziPlacement, dim: int) -> np.ndarray:
    if not 1 <= placement.j <= dim - 1:
        raise PlacementError(f"MZI on modes ({placement.j}, {placement.j + 1}) does not fit {dim} modes")
    u = np.eye(dim, dtype=complex)
    i = placement.j - 1
    u[i : i + 2, i : i + 2] = mzi_matrix(placement.alpha, placement.phi)
    return u


def apply_mzi_rows(matrix: np.ndarray, j: int, alpha: float, phi: float) -> None:
    """In place ``matrix <- M_j @ matrix`` for an MZI on 1-based modes ``(j, j+1)``."""
    s, c = np.sin(alpha / 2), np.cos(alpha / 2)
    e = np.exp(1j * phi)
    top = matrix[j - 1].copy()
    bottom = matrix[j]
    matrix[j - 1] = e * s * top + c * bottom
    matrix[j] = e * c * top - s * bottom


def mesh_to_unitary(circuit: MeshCircuit) -> np.ndarray:
    u = np.eye(circuit.dim, dtype=complex)
    for p in circuit.placements:
        apply_mzi_rows(u, p.j, p.alpha, p.phi)
    return u


def phase_layer(phases) -> np.ndarray:
    return np.diag(np.exp(1j * np.asarray(phases, dtype=float)))


def diagonal_circuit(k: int, dim: int, phases) -> MeshCircuit:
    """The ``k``-th Reck diagonal: ``dim - k`` MZIs on modes ``j = k .. dim-1``.

    ``phases`` is a sequence of ``(alpha, phi)`` pairs, one per MZI, listed in
    application order (top MZI first).
    """
    phases = [tuple(p) for p in phases]
    if not 1 <= k <= dim - 1:
        raise PlacementError(f"diagonal index {k} out of range for {dim} modes")
    if len(phases) != dim - k:
        raise ArityError(f"diagonal {k} of a {dim}-mode mesh needs {dim - k} phase pairs, got {len(phases)}")
    return MeshCircuit(
        dim, tuple(MziPlacement(k, j, float(a), float(f)) for j, (a, f) in zip(range(k, dim), phases))
    )


def reck_layout(dim: int, first_mode: int = 1) -> list[tuple[int, int]]:
    """``(k, j)`` labels of a full Reck mesh on modes ``first_mode .. dim``, in application order.

    Diagonal labels are relative to the sub-mesh (``k = 1`` is its outermost
    diagonal) while ``j`` is the absolute mode index.
    """
    size = dim - first_mode + 1
    out = []
    for k in range(size - 1, 0, -1):
        for j in range(k, size):
            out.append((k, j + first_mode - 1))
    return out


def reck_circuit(dim: int, phases=None, first_mode: int = 1) -> MeshCircuit:
    """Full Reck mesh on modes ``first_mode .. dim`` of a ``dim``-mode circuit.

    With ``phases=None`` every MZI is in the bar state, so the mesh is
    diagonal (identity up to signs).
    """
    layout = reck_layout(dim, first_mode)
    if phases is None:
        phases = np.tile([BAR_ALPHA, 0.0], len(layout))
    phases = np.asarray(phases, dtype=float).reshape(-1)
    if phases.size != 2 * len(layout):
        raise ArityError(f"Reck mesh with {len(layout)} MZIs needs {2 * len(layout)} phases, got {phases.size}")
    pairs = phases.reshape(-1, 2)
    return MeshCircuit(dim, tuple(MziPlacement(k, j, float(a), float(f)) for (k, j), (a, f) in zip(layout, pairs)))


def _chain_for_column(v: np.ndarray) -> tuple[list[tuple[float, float]], complex]:
    """MZI chain on consecutive modes sending the first mode to ``v`` (up to the last phase).

    Returns ``(alpha, phi)`` per MZI and the amplitude the chain actually puts
    in the final mode; it matches ``v[-1]`` in modulus only.
    """
    tail = np.sqrt(np.cumsum(np.abs(v[::-1]) ** 2)[::-1])
    params = []
    r = 1.0 + 0j
    for i in range(len(v) - 1):
        if tail[i] < 1e-300:
            alpha, phi = BAR_ALPHA, 0.0
        else:
            alpha = 2 * np.arctan2(abs(v[i]), tail[i + 1])
            phi = float(np.angle(v[i]) - np.angle(r)) if abs(v[i]) > 0 else 0.0
        params.append((float(alpha), phi))
        r = np.exp(1j * phi) * np.cos(alpha / 2) * r
    return params, r


def reck_decompose(u, atol: float = DEFAULT_ATOL) -> tuple[MeshCircuit, np.ndarray]:
    """Factor ``u`` into a full Reck mesh plus an output phase layer.

    Returns ``(circuit, theta)`` with
    ``u == diag(exp(1j*theta)) @ mesh_to_unitary(circuit)``; the circuit holds
    ``m(m-1)/2`` MZIs laid out as in :func:`reck_layout`.
    """
    w = np.array(as_unitary(u, atol), dtype=complex)
    m = w.shape[0]
    diagonals: dict[int, list[list[float]]] = {}
    mode_m_phase: dict[int, float] = {}
    for k in range(1, m):
        col = w[k - 1 :, k - 1]
        params, r_last = _chain_for_column(col)
        theta = float(np.angle(col[-1]) - np.angle(r_last)) if abs(col[-1]) > 0 else 0.0
        diagonals[k] = [list(p) for p in params]
        mode_m_phase[k] = theta
        d = mesh_to_unitary(diagonal_circuit(k, m, params))
        w[-1] *= np.exp(-1j * theta)
        w = d.conj().T @ w
    final = np.ones(m, dtype=complex)
    final[-1] = w[-1, -1] / abs(w[-1, -1])

    # u = P_1 D_1 P_2 D_2 ... P_{m-1} D_{m-1} P_m with P_k phases on mode m only.
    # Push every phase layer out through the diagonals to the output side;
    # M(a, f) @ diag(p, q) == q * M(a, f + arg(p/q)).
    acc = final
    for k in range(m - 1, 0, -1):
        for idx, j in enumerate(range(k, m)):
            p, q = acc[j - 1], acc[j]
            diagonals[k][idx][1] += float(np.angle(p) - np.angle(q))
            acc[j - 1] = q
        acc = acc.copy()
        acc[-1] *= np.exp(1j * mode_m_phase[k])

    placements = []
    for k in range(m - 1, 0, -1):
        for j, (a, f) in zip(range(k, m), diagonals[k]):
            placements.append(MziPlacement(k, j, a, float(np.angle(np.exp(1j * f)))))
    return MeshCircuit(m, tuple(placements)), np.angle(acc)
