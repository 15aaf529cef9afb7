"""State vectors of n qudits: gates, partial traces, Clements meshes and Laughlin circuits.

Sites are 1-based; amplitudes are stored site-major with site 1 the most
significant digit.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import factorial

import numpy as np

from .linalg import DEFAULT_ATOL, as_unitary
from .mesh import mzi_matrix


class DimensionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuditState:
    n_sites: int
    local_dim: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.local_dim**self.n_sites:
            raise DimensionError(
                f"{self.n_sites} sites of dimension {self.local_dim} need "
                f"{self.local_dim ** self.n_sites} amplitudes, got {amps.size}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((self.local_dim,) * self.n_sites)

    def overlap(self, other: "QuditState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "QuditState") -> float:
        return abs(self.overlap(other)) ** 2


@dataclass(frozen=True, eq=False)
class ReducedDensity:
    dims: tuple[int, ...]
    matrix: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def expectation(self, vector) -> float:
        v = np.asarray(vector, dtype=complex)
        return float(np.real(np.vdot(v, self.matrix @ v)))


def product_state(levels, local_dim: int) -> QuditState:
    """Computational basis state ``|levels[0], levels[1], ...>``."""
    levels = list(levels)
    amps = np.zeros(local_dim ** len(levels), dtype=complex)
    idx = 0
    for lv in levels:
        if not 0 <= lv < local_dim:
            raise DimensionError(f"level {lv} outside 0..{local_dim - 1}")
        idx = idx * local_dim + lv
    amps[idx] = 1.0
    return QuditState(len(levels), local_dim, amps)


def random_state(n_sites: int, local_dim: int, rng: np.random.Generator) -> QuditState:
    v = rng.standard_normal(local_dim**n_sites) + 1j * rng.standard_normal(local_dim**n_sites)
    return QuditState(n_sites, local_dim, v / np.linalg.norm(v))


def _check_sites(psi: QuditState, sites) -> list[int]:
    sites = [int(s) for s in sites]
    if len(set(sites)) != len(sites):
        raise DimensionError(f"duplicate sites in {sites}")
    for s in sites:
        if not 1 <= s <= psi.n_sites:
            raise DimensionError(f"site {s} outside 1..{psi.n_sites}")
    return sites


def apply_unitary(psi: QuditState, u, sites) -> QuditState:
    """Apply ``u`` to the ordered ``sites``; the first listed site is the most significant."""
    sites = _check_sites(psi, sites)
    d, k = psi.local_dim, len(sites)
    u = np.asarray(u, dtype=complex)
    if u.shape != (d**k, d**k):
        raise DimensionError(f"operator of shape {u.shape} does not act on {k} sites of dimension {d}")
    axes = [s - 1 for s in sites]
    t = np.moveaxis(psi.tensor(), axes, list(range(k)))
    shape = t.shape
    t = (u @ t.reshape(d**k, -1)).reshape(shape)
    t = np.moveaxis(t, list(range(k)), axes)
    return QuditState(psi.n_sites, d, t.reshape(-1))


def partial_trace(psi: QuditState, keep) -> ReducedDensity:
    """Reduced density operator on the ``keep`` sites (kept in ascending order)."""
    keep = sorted(_check_sites(psi, keep))
    if not keep:
        raise DimensionError("keep at least one site")
    d = psi.local_dim
    axes = [s - 1 for s in keep]
    t = np.moveaxis(psi.tensor(), axes, list(range(len(keep))))
    mat = t.reshape(d ** len(keep), -1)
    return ReducedDensity(tuple([d] * len(keep)), mat @ mat.conj().T)


def site_fidelity(psi: QuditState, site: int, target, atol: float = DEFAULT_ATOL) -> float:
    """``<target| rho_site |target>`` for the single-site reduced state."""
    target = np.asarray(target, dtype=complex)
    if target.shape != (psi.local_dim,):
        raise DimensionError(f"target must have length {psi.local_dim}")
    if abs(np.linalg.norm(target) - 1.0) > atol:
        raise ValueError("target state is not normalized")
    _check_sites(psi, [site])
    t = np.moveaxis(psi.tensor(), site - 1, 0).reshape(psi.local_dim, -1)
    proj = target.conj() @ t
    return float(np.real(np.vdot(proj, proj)))


# --- Clements rectangular mesh -------------------------------------------------


def clements_layout(dim: int) -> list[int]:
    """0-based upper modes of the MZIs of a rectangular mesh, in application order.

    Column ``c`` holds the pairs ``(j, j+1)`` with ``j % 2 == c % 2``; there
    are ``dim`` columns and ``dim(dim-1)/2`` MZIs.
    """
    out = []
    for col in range(dim):
        out.extend(range(col % 2, dim - 1, 2))
    return out


def clements_n_phases(dim: int) -> int:
    return dim * (dim - 1) + dim


def clements_ansatz(dim: int, phases) -> np.ndarray:
    """Unitary of a rectangular MZI mesh followed by one phase per output mode.

    ``phases`` holds ``[alpha_1, phi_1, ..., alpha_N, phi_N, theta_1, ..., theta_dim]``
    with the MZIs ordered as :func:`clements_layout`.
    """
    phases = np.asarray(phases, dtype=float).reshape(-1)
    if phases.size != clements_n_phases(dim):
        raise ValueError(f"a {dim}-mode Clements mesh needs {clements_n_phases(dim)} phases, got {phases.size}")
    u = np.eye(dim, dtype=complex)
    apply_clements(u, phases)
    return u


def apply_clements(rows: np.ndarray, phases: np.ndarray) -> None:
    """In place ``rows <- C(phases) @ rows`` for a ``(dim, ...)`` array."""
    dim = rows.shape[0]
    layout = clements_layout(dim)
    n_mzi = len(layout)
    alphas = phases[0 : 2 * n_mzi : 2]
    phis = phases[1 : 2 * n_mzi : 2]
    s = np.sin(alphas / 2)
    c = np.cos(alphas / 2)
    e = np.exp(1j * phis)
    for idx, j in enumerate(layout):
        top = rows[j].copy()
        bottom = rows[j + 1]
        rows[j] = e[idx] * s[idx] * top + c[idx] * bottom
        rows[j + 1] = e[idx] * c[idx] * top - s[idx] * bottom
    rows *= np.exp(1j * phases[2 * n_mzi :]).reshape((dim,) + (1,) * (rows.ndim - 1))


def _null_phases_right(a: complex, b: complex) -> tuple[float, float]:
    """MZI ``M`` with ``([a, b] @ M^dagger)[0] == 0``."""
    alpha = 2 * np.arctan2(abs(b), abs(a))
    phi = float(np.angle(a) - np.angle(-b)) if abs(a) > 0 and abs(b) > 0 else 0.0
    return float(alpha), phi


def _null_phases_left(a: complex, b: complex) -> tuple[float, float]:
    """MZI ``M`` with ``(M @ [a, b])[1] == 0``."""
    alpha = 2 * np.arctan2(abs(a), abs(b))
    phi = float(np.angle(b) - np.angle(a)) if abs(a) > 0 and abs(b) > 0 else 0.0
    return float(alpha), phi


def clements_decompose(u, atol: float = DEFAULT_ATOL) -> np.ndarray:
    """Phases with ``clements_ansatz(dim, phases) == u``."""
    w = np.array(as_unitary(u, atol), dtype=complex)
    dim = w.shape[0]
    right: list[tuple[int, float, float]] = []
    left: list[tuple[int, float, float]] = []
    for i in range(1, dim):
        if i % 2:
            for jj in range(i):
                r, c = dim - 1 - jj, i - 1 - jj
                alpha, phi = _null_phases_right(w[r, c], w[r, c + 1])
                m = mzi_matrix(alpha, phi)
                w[:, c : c + 2] = w[:, c : c + 2] @ m.conj().T
                right.append((c, alpha, phi))
        else:
            for jj in range(1, i + 1):
                r, c = dim - 1 - i + jj, jj - 1
                alpha, phi = _null_phases_left(w[r - 1, c], w[r, c])
                m = mzi_matrix(alpha, phi)
                w[r - 1 : r + 1, :] = m @ w[r - 1 : r + 1, :]
                left.append((r - 1, alpha, phi))

    # u = L_1^dag ... L_a^dag  diag(w)  R_b ... R_1, and M^dag = diag(e^{-i phi}, 1) M(alpha, 0).
    # Walk in application order and push every phase to the output side.
    sequence: list = [("mzi", j, a, f) for j, a, f in right]
    sequence.append(("phase", np.angle(np.diagonal(w))))
    for j, a, f in reversed(left):
        sequence.append(("mzi", j, a, 0.0))
        ph = np.zeros(dim)
        ph[j] = -f
        sequence.append(("phase", ph))
    acc = np.zeros(dim)
    mzis = []
    for item in sequence:
        if item[0] == "phase":
            acc = acc + item[1]
        else:
            _, j, a, f = item
            mzis.append((j, a, f + acc[j] - acc[j + 1]))
            acc[j] = acc[j + 1]

    # place each MZI in the earliest free column of matching parity
    layout = clements_layout(dim)
    slot_of = {}
    start = 0
    for col in range(dim):
        for j in range(col % 2, dim - 1, 2):
            slot_of[(col, j)] = start
            start += 1
    busy = [0] * dim
    phases = np.zeros(clements_n_phases(dim))
    used = set()
    for j, a, f in mzis:
        col = max(busy[j], busy[j + 1])
        if col % 2 != j % 2:
            col += 1
        slot = slot_of.get((col, j))
        if slot is None or slot in used:
            raise RuntimeError("decomposition does not fit the rectangular layout")
        used.add(slot)
        busy[j] = busy[j + 1] = col + 1
        phases[2 * slot] = a
        phases[2 * slot + 1] = np.angle(np.exp(1j * f))
    if len(used) != len(layout):
        raise RuntimeError("decomposition left slots of the rectangular layout empty")
    phases[2 * len(layout) :] = np.angle(np.exp(1j * acc))
    return phases


# --- Laughlin circuits -----------------------------------------------------------


def _pair_rotation(d: int, i: int, j: int, m2: np.ndarray) -> np.ndarray:
    """Two-qudit operator acting as ``m2`` on span{|ij>, |ji>} (columns: inputs) and identity elsewhere."""
    if i == j:
        raise ValueError("levels must differ")
    for lv in (i, j):
        if not 0 <= lv < d:
            raise DimensionError(f"level {lv} outside 0..{d - 1}")
    u = np.eye(d * d, dtype=complex)
    ij, ji = i * d + j, j * d + i
    u[np.ix_([ij, ji], [ij, ji])] = m2
    return u


def laughlin_w_gate(p: float, i: int, j: int, local_dim: int) -> np.ndarray:
    """``W_ij(p)|ij> = sqrt(p)|ij> - sqrt(1-p)|ji>``, ``W_ij(p)|ji> = sqrt(1-p)|ij> + sqrt(p)|ji>``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    a, b = np.sqrt(p), np.sqrt(1.0 - p)
    return _pair_rotation(local_dim, i, j, np.array([[a, b], [-b, a]]))


def laughlin_wtilde_gate(theta: float, i: int, j: int, local_dim: int) -> np.ndarray:
    """``W~(t)|ij> = cos t|ij> + sin t|ji>``, ``W~(t)|ji> = -sin t|ij> + cos t|ji>``."""
    c, s = np.cos(theta), np.sin(theta)
    return _pair_rotation(local_dim, i, j, np.array([[c, -s], [s, c]]))


def _level_sum_gate(d: int, fixed_level: int, m2_of_level) -> np.ndarray:
    """Product over all ``a != fixed_level`` of pair rotations on span{|a, fixed>, |fixed, a>}."""
    u = np.eye(d * d, dtype=complex)
    for a in range(d):
        if a == fixed_level:
            continue
        ij, ji = a * d + fixed_level, fixed_level * d + a
        u[np.ix_([ij, ji], [ij, ji])] = m2_of_level
    return u


def wtilde_level_gate(theta: float, level: int, local_dim: int) -> np.ndarray:
    """``W~_{a,level}(theta)`` applied at once for every level ``a != level``.

    Acting on sites ``(s, t)`` it rotates ``|a, level>`` towards
    ``|level, a>``, i.e. it moves ``level`` from site ``t`` onto site ``s``.
    """
    if not 0 <= level < local_dim:
        raise DimensionError(f"level {level} outside 0..{local_dim - 1}")
    c, s = np.cos(theta), np.sin(theta)
    return _level_sum_gate(local_dim, level, np.array([[c, -s], [s, c]]))


def laughlin_circuit(n: int) -> list[tuple[tuple[int, int], np.ndarray]]:
    """Two-site gates that turn ``|n-1, n-2, ..., 0>`` into the Laughlin state.

    Site ``k+1`` enters holding level ``l = n-k-1`` next to an antisymmetric
    state of sites ``1..k``; ``W_{a,l}(p_i)`` on sites ``(i, k+1)`` for every
    level ``a`` and ``i = 1..k`` with ``p_i = (k+1-i)/(k+2-i)`` splits off
    each transposition ``(i, k+1)`` with weight ``1/(k+1)`` and sign ``-1``.
    """
    gates = []
    for k in range(1, n):
        level = n - k - 1
        for i in range(1, k + 1):
            p = (k + 1 - i) / (k + 2 - i)
            a, b = np.sqrt(p), np.sqrt(1 - p)
            gates.append(((i, k + 1), _level_sum_gate(n, level, np.array([[a, b], [-b, a]]))))
    return gates


def laughlin_sum_state(n: int) -> QuditState:
    """Antisymmetrized sum over permutations of ``(0, ..., n-1)``, normalized by ``1/sqrt(n!)``."""
    amps = np.zeros(n**n, dtype=complex)
    for perm in itertools.permutations(range(n)):
        idx = 0
        for lv in perm:
            idx = idx * n + lv
        amps[idx] = _permutation_sign(perm)
    return QuditState(n, n, amps / np.sqrt(factorial(n)))


def _permutation_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def laughlin_circuit_state(n: int) -> QuditState:
    psi = product_state(range(n - 1, -1, -1), n)
    for sites, u in laughlin_circuit(n):
        psi = apply_unitary(psi, u, sites)
    return psi


def laughlin_state(n: int, atol: float = DEFAULT_ATOL) -> QuditState:
    """Filling-fraction-one Laughlin state of ``n`` qudits with ``d = n``.

    Built from the permutation sum and cross-checked against the gate circuit.
    """
    if n < 2:
        raise ValueError("need at least two qudits")
    direct = laughlin_sum_state(n)
    circuit = laughlin_circuit_state(n)
    if abs(1.0 - direct.fidelity(circuit)) > atol:
        raise AssertionError("Laughlin circuit disagrees with the permutation sum")
    return direct
