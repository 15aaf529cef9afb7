"""Exact n-photon, m-mode linear-optics simulation in the occupation-number basis."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial, sqrt

import numpy as np

from .linalg import DEFAULT_ATOL
from .mesh import MeshCircuit, mzi_matrix, reck_decompose

MAX_BASIS_SIZE = 10_000_000


class CapacityError(MemoryError):
    pass


class ConservationError(ValueError):
    pass


class ShapeError(ValueError):
    pass


class ModeError(IndexError):
    pass


def multichoose(m: int, n: int) -> int:
    """Number of ways to put ``n`` indistinguishable photons in ``m`` modes."""
    return comb(m + n - 1, n)


def _occupations(n: int, m: int):
    if m == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _occupations(n - first, m - 1):
            yield (first,) + rest


@dataclass(frozen=True, eq=False)
class OccupationBasis:
    """All occupation vectors of ``n_photons`` in ``n_modes``, lexicographically descending."""

    n_photons: int
    n_modes: int
    states: np.ndarray = field(repr=False)
    index: dict = field(repr=False)

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, i) -> tuple:
        return tuple(int(x) for x in self.states[i])

    def position(self, occupation) -> int:
        return self.index[tuple(int(x) for x in occupation)]

    def pair_groups(self, mode: int) -> dict[int, np.ndarray]:
        """Index tables for two-mode operations on 1-based modes ``(mode, mode+1)``.

        ``groups[N][g, q]`` is the position of the state with ``q`` photons in
        ``mode`` and ``N - q`` in ``mode + 1``, all other modes as in group
        ``g``.
        """
        return _pair_groups(self, mode)


_BASIS_CACHE: dict[tuple[int, int], OccupationBasis] = {}


def enumerate_basis(n: int, m: int, max_size: int = MAX_BASIS_SIZE) -> OccupationBasis:
    if m < 1:
        raise ValueError(f"need at least one mode, got {m}")
    if n < 0:
        raise ValueError(f"photon number must be non-negative, got {n}")
    size = multichoose(m, n)
    if size > max_size:
        raise CapacityError(f"{n} photons in {m} modes needs {size} basis states (limit {max_size})")
    key = (n, m)
    if key not in _BASIS_CACHE:
        states = np.array(list(_occupations(n, m)), dtype=np.int64).reshape(size, m)
        index = {tuple(int(x) for x in s): i for i, s in enumerate(states)}
        states.setflags(write=False)
        _BASIS_CACHE[key] = OccupationBasis(n, m, states, index)
    return _BASIS_CACHE[key]


_GROUP_CACHE: dict[tuple[int, int, int], dict[int, np.ndarray]] = {}


def _pair_groups(basis: OccupationBasis, mode: int) -> dict[int, np.ndarray]:
    key = (basis.n_photons, basis.n_modes, mode)
    if key in _GROUP_CACHE:
        return _GROUP_CACHE[key]
    if not 1 <= mode <= basis.n_modes - 1:
        raise ModeError(f"mode pair ({mode}, {mode + 1}) outside {basis.n_modes} modes")
    i = mode - 1
    st = basis.states
    totals = st[:, i] + st[:, i + 1]
    groups = {}
    for n_pair in range(basis.n_photons + 1):
        # canonical representatives: all photons of the pair in the upper mode
        reps = np.flatnonzero((st[:, i] == n_pair) & (st[:, i + 1] == 0))
        if reps.size == 0:
            continue
        table = np.empty((reps.size, n_pair + 1), dtype=np.int64)
        for g, r in enumerate(reps):
            occ = list(int(x) for x in st[r])
            for q in range(n_pair + 1):
                occ[i], occ[i + 1] = q, n_pair - q
                table[g, q] = basis.index[tuple(occ)]
        groups[n_pair] = table
    assert sum(t.size for t in groups.values()) == len(totals)
    _GROUP_CACHE[key] = groups
    return groups


@dataclass(frozen=True, eq=False)
class FockState:
    basis: OccupationBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (len(self.basis),):
            raise ShapeError(f"expected {len(self.basis)} amplitudes, got shape {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_photons(self) -> int:
        return self.basis.n_photons

    @property
    def n_modes(self) -> int:
        return self.basis.n_modes

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def amplitude(self, occupation) -> complex:
        return complex(self.amplitudes[self.basis.position(occupation)])

    def probability(self, occupation) -> float:
        return abs(self.amplitude(occupation)) ** 2

    def check_normalized(self, atol: float = DEFAULT_ATOL) -> "FockState":
        if abs(self.norm - 1.0) > atol:
            raise ValueError(f"state norm {self.norm!r} differs from 1")
        return self


def fock_state(occupation, n_modes: int | None = None) -> FockState:
    """Basis state ``|occupation>``; ``n_modes`` pads with empty modes."""
    occ = tuple(int(x) for x in occupation)
    if n_modes is not None:
        if n_modes < len(occ):
            raise ShapeError("occupation longer than n_modes")
        occ = occ + (0,) * (n_modes - len(occ))
    basis = enumerate_basis(sum(occ), len(occ))
    amps = np.zeros(len(basis), dtype=complex)
    amps[basis.position(occ)] = 1.0
    return FockState(basis, amps)


def single_photons(n: int, m: int) -> FockState:
    """``|1_1 1_2 ... 1_n 0 ... 0>`` on ``m`` modes."""
    return fock_state((1,) * n, m)


def permanent(a) -> complex:
    """Matrix permanent by Ryser's formula with Gray-code subset order."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"permanent needs a square matrix, got shape {a.shape}")
    k = a.shape[0]
    if k == 0:
        return 1.0 + 0j
    row_sums = np.zeros(k, dtype=complex)
    total = 0j
    gray = 0
    for step in range(1, 1 << k):
        # column toggled between consecutive Gray codes = lowest set bit of step
        col = (step & -step).bit_length() - 1
        gray ^= 1 << col
        if gray >> col & 1:
            row_sums += a[:, col]
        else:
            row_sums -= a[:, col]
        sign = -1 if bin(gray).count("1") & 1 else 1
        total += sign * np.prod(row_sums)
    return complex((-1) ** k * total)


def _check_unitary_size(u: np.ndarray, m: int):
    if u.shape != (m, m):
        raise ShapeError(f"unitary of shape {u.shape} does not act on {m} modes")


def transition_amplitude(u, s, t) -> complex:
    """``<t| U |s>`` for occupation vectors ``s`` (input) and ``t`` (output).

    Photons in input mode ``j`` are created as ``sum_i U[i, j] a_i^dagger``.
    """
    u = np.asarray(u, dtype=complex)
    s = np.asarray(s, dtype=np.int64)
    t = np.asarray(t, dtype=np.int64)
    if s.sum() != t.sum():
        raise ConservationError(f"photon number not conserved: {s.sum()} in, {t.sum()} out")
    _check_unitary_size(u, len(s))
    cols = np.repeat(np.arange(len(s)), s)
    rows = np.repeat(np.arange(len(t)), t)
    norm = 1.0
    for x in s:
        norm *= factorial(int(x))
    for x in t:
        norm *= factorial(int(x))
    return permanent(u[np.ix_(rows, cols)]) / sqrt(norm)


def _evolve_by_permanents(u: np.ndarray, psi: FockState) -> np.ndarray:
    basis = psi.basis
    out = np.zeros(len(basis), dtype=complex)
    for si in np.flatnonzero(psi.amplitudes):
        s = basis.states[si]
        cols = np.repeat(np.arange(basis.n_modes), s)
        s_norm = np.prod([factorial(int(x)) for x in s])
        c = psi.amplitudes[si]
        for ti, t in enumerate(basis.states):
            rows = np.repeat(np.arange(basis.n_modes), t)
            t_norm = np.prod([factorial(int(x)) for x in t])
            out[ti] += c * permanent(u[np.ix_(rows, cols)]) / sqrt(s_norm * t_norm)
    return out


def evolve(u, psi: FockState, method: str = "auto") -> FockState:
    """Apply the mode unitary ``u`` to ``psi``.

    ``method="permanent"`` sums transition amplitudes directly;
    ``method="mesh"`` factors ``u`` into MZIs and applies them one at a time,
    which is far cheaper for large bases. ``"auto"`` picks the mesh route once
    the permanent route would need more than ~2e4 permanents.
    """
    u = np.asarray(u, dtype=complex)
    _check_unitary_size(u, psi.n_modes)
    if method == "auto":
        work = np.count_nonzero(psi.amplitudes) * len(psi.basis)
        method = "permanent" if work <= 20_000 else "mesh"
    if method == "permanent":
        return FockState(psi.basis, _evolve_by_permanents(u, psi))
    if method == "mesh":
        circuit, theta = reck_decompose(u)
        out = apply_circuit(circuit, psi)
        return apply_phases(theta, out)
    raise ValueError(f"unknown method {method!r}")


@lru_cache(maxsize=None)
def _two_mode_tables(n_pair: int):
    """Exponent/coefficient tables for the ``n_pair``-photon two-mode transfer matrix."""
    q, p, i = np.meshgrid(np.arange(n_pair + 1), np.arange(n_pair + 1), np.arange(n_pair + 1), indexing="ij")
    e00, e10 = i, p - i
    e01, e11 = q - i, n_pair - p - q + i
    valid = (e10 >= 0) & (e01 >= 0) & (e11 >= 0) & (e01 <= n_pair - p)
    coef = np.zeros(q.shape)
    fact = [factorial(x) for x in range(n_pair + 1)]
    for idx in zip(*np.nonzero(valid)):
        qq, pp, ii = idx
        coef[idx] = (
            comb(pp, ii)
            * comb(n_pair - pp, qq - ii)
            * sqrt(fact[qq] * fact[n_pair - qq] / (fact[pp] * fact[n_pair - pp]))
        )
    clip = lambda e: np.where(valid, e, 0)  # noqa: E731
    return coef, clip(e00), clip(e10), clip(e01), clip(e11)


def two_mode_transfer(u2, n_pair: int) -> np.ndarray:
    """Matrix ``T[q, p] = <q, N-q| U |p, N-p>`` of a 2x2 mode unitary on ``N`` photons."""
    coef, e00, e10, e01, e11 = _two_mode_tables(n_pair)
    u2 = np.asarray(u2, dtype=complex)
    terms = coef * u2[0, 0] ** e00 * u2[1, 0] ** e10 * u2[0, 1] ** e01 * u2[1, 1] ** e11
    return terms.sum(axis=2)


def apply_two_mode(u2, mode: int, psi: FockState) -> FockState:
    """Apply a 2x2 mode unitary to 1-based modes ``(mode, mode+1)``."""
    return FockState(psi.basis, apply_two_mode_amplitudes(u2, mode, psi.basis, psi.amplitudes))


def apply_two_mode_amplitudes(u2, mode: int, basis: OccupationBasis, amps: np.ndarray) -> np.ndarray:
    out = np.empty_like(amps)
    for n_pair, table in basis.pair_groups(mode).items():
        if n_pair == 0:
            out[table[:, 0]] = amps[table[:, 0]]
            continue
        t = two_mode_transfer(u2, n_pair)
        out[table] = amps[table] @ t.T
    return out


def apply_circuit(circuit: MeshCircuit, psi: FockState) -> FockState:
    if circuit.dim != psi.n_modes:
        raise ShapeError(f"{circuit.dim}-mode circuit applied to a {psi.n_modes}-mode state")
    amps = psi.amplitudes
    for p in circuit.placements:
        amps = apply_two_mode_amplitudes(mzi_matrix(p.alpha, p.phi), p.j, psi.basis, amps)
    return FockState(psi.basis, amps)


def apply_phases(theta, psi: FockState) -> FockState:
    """Apply ``diag(exp(1j*theta))`` to the modes."""
    theta = np.asarray(theta, dtype=float)
    phase = np.exp(1j * (psi.basis.states @ theta))
    return FockState(psi.basis, psi.amplitudes * phase)


def _check_mode(psi: FockState, mode: int):
    if not 1 <= mode <= psi.n_modes:
        raise ModeError(f"mode {mode} outside 1..{psi.n_modes}")


def prob_exactly_k(psi: FockState, mode: int, k: int) -> float:
    """Probability of exactly ``k`` photons in 1-based ``mode``."""
    _check_mode(psi, mode)
    if not 0 <= k <= psi.n_photons:
        raise ValueError(f"photon count {k} outside 0..{psi.n_photons}")
    mask = psi.basis.states[:, mode - 1] == k
    return float(np.sum(psi.probabilities[mask]))


def prob_up_to_k(psi: FockState, mode: int, k: int) -> float:
    """Probability of between 1 and ``k`` photons in ``mode``.

    With ``k = n`` this is the click probability of a bucket detector.
    """
    _check_mode(psi, mode)
    if not 1 <= k <= psi.n_photons:
        raise ValueError(f"photon count {k} outside 1..{psi.n_photons}")
    occ = psi.basis.states[:, mode - 1]
    mask = (occ >= 1) & (occ <= k)
    return float(np.sum(psi.probabilities[mask]))


def mean_photon_number(psi: FockState, mode: int) -> float:
    _check_mode(psi, mode)
    return float(psi.probabilities @ psi.basis.states[:, mode - 1])


def one_body_density(psi: FockState) -> np.ndarray:
    """``G[i, j] = <a_i^dagger a_j>``; its diagonal holds the mean photon numbers."""
    basis = psi.basis
    m = basis.n_modes
    g = np.zeros((m, m), dtype=complex)
    amps = psi.amplitudes
    states = basis.states
    g[np.diag_indices(m)] = psi.probabilities @ states
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            # a_i^dagger a_j |s> = sqrt(s_j (s_i + 1)) |s - e_j + e_i>
            src = np.flatnonzero(states[:, j] > 0)
            for si in src:
                s = states[si].copy()
                factor = sqrt(s[j] * (s[i] + 1))
                s[j] -= 1
                s[i] += 1
                g[i, j] += np.conj(amps[basis.index[tuple(int(x) for x in s)]]) * factor * amps[si]
    return g


def scaling_identity(n: int) -> tuple[Fraction, Fraction]:
    """Both sides of ``1 - a/b = n/(n^2+n-1)`` in exact rational arithmetic.

    ``b`` counts placements of ``n`` photons in ``n^2`` modes and ``a`` the
    placements that leave one given mode empty (``n`` photons in ``n^2-1``
    modes), so ``1 - a/b`` is the fraction of configurations that occupy
    that mode. The commonly quoted ``a = C(n^2+n-3, n-1)`` does not satisfy
    the identity for ``n >= 2``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    a = comb(n * n + n - 2, n)
    b = comb(n * n + n - 1, n)
    return 1 - Fraction(a, b), Fraction(n, n * n + n - 1)
