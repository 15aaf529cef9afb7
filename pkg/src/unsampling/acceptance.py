"""Acceptance criteria 1 to 12 as plain functions.

Each ``criterion_N`` returns a :class:`CriterionResult`. The test suite and
``unsampling verify`` both go through :func:`run_all`, which prints one
pass/fail line per criterion. Campaign records are cached per
:class:`Acceptance` instance so the determinism check can compare a rerun
against the first run.
"""

from __future__ import annotations

import itertools
import math
import tempfile
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from .cli import ExperimentRecord, fit_scaling, read_records, run_campaign
from .fock import enumerate_basis, evolve, fock_state, mean_photon_number, permanent, scaling_identity, single_photons
from .linalg import haar_unitary
from .mesh import mesh_to_unitary, reck_decompose
from .optimizer import OptimizationProblem, benchmark_suite, minimize, minimize_warm, with_shot_noise
from .protocols import (
    VquConfig,
    WTildeAnsatz,
    ansatz_validate,
    compress_photons,
    sample_state,
    single_photon_loss,
    unsampling_layout,
)
from .qudit import laughlin_circuit_state, laughlin_state, laughlin_sum_state

BASE_SEED = 20240601


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        return f"criterion {self.number:>2} {'PASS' if self.passed else 'FAIL'} [{self.seconds:7.1f} s] {self.title}: {self.detail}"


# ------------------------------------------------------------ local oracles


def naive_permanent(a) -> complex:
    """Permutation-sum permanent; exponential but independent of the Ryser code."""
    a = np.asarray(a, dtype=complex)
    k = a.shape[0]
    return complex(sum(np.prod([a[i, p[i]] for i in range(k)]) for p in itertools.permutations(range(k))))


def creation_expansion(u, occupation) -> dict[tuple[int, ...], complex]:
    """``U|s>`` by multiplying out ``prod_j (sum_i U[i, j] a_i^dagger)^{s_j} / sqrt(s_j!)`` on the vacuum."""
    u = np.asarray(u, dtype=complex)
    m = u.shape[0]
    terms: dict[tuple[int, ...], complex] = {tuple([0] * m): 1.0 + 0j}
    for j, s_j in enumerate(occupation):
        for _ in range(s_j):
            nxt: dict[tuple[int, ...], complex] = {}
            for occ, c in terms.items():
                for i in range(m):
                    new = list(occ)
                    new[i] += 1
                    key = tuple(new)
                    nxt[key] = nxt.get(key, 0j) + c * u[i, j]
            terms = nxt
        terms = {k: v / math.sqrt(math.factorial(s_j)) for k, v in terms.items()}
    # (a^dagger)^t |0> = sqrt(t!) |t>
    return {k: v * math.sqrt(math.prod(math.factorial(t) for t in k)) for k, v in terms.items()}


# --------------------------------------------------------------- criteria


class Acceptance:
    """Runs criteria and caches campaign records under ``workdir``."""

    def __init__(self, workdir: str | Path | None = None):
        self._tmp = None
        if workdir is None:
            self._tmp = tempfile.TemporaryDirectory(prefix="unsampling-acceptance-")
            workdir = self._tmp.name
        self.workdir = Path(workdir)
        self.workdir.mkdir(parents=True, exist_ok=True)
        self._campaigns: dict[str, list[ExperimentRecord]] = {}
        self._timings: dict[str, float] = {}

    # campaign name -> list of (protocol, n values, trials)
    CAMPAIGNS = {
        "qubit": [("qubit-vqu", [3], 100), ("qubit-vqu", [4], 20)],
        "optical": [("optical-direct", [2], 25), ("optical-compressed", [3, 4], 25)],
    }

    def _run(self, name: str, suffix: str) -> list[ExperimentRecord]:
        out = self.workdir / f"{name}{suffix}.jsonl"
        records = []
        for protocol, ns, trials in self.CAMPAIGNS[name]:
            records.extend(run_campaign(protocol, ns, trials, BASE_SEED, VquConfig(), out))
        return records

    def campaign(self, name: str) -> list[ExperimentRecord]:
        if name not in self._campaigns:
            start = time.perf_counter()
            self._campaigns[name] = self._run(name, "")
            self._timings[name] = time.perf_counter() - start
        return self._campaigns[name]

    def criterion_1(self) -> tuple[bool, str]:
        rng = np.random.default_rng(BASE_SEED + 1)
        worst = 0.0
        for i in range(200):
            k = 1 + i % 6
            a = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
            worst = max(worst, abs(permanent(a) - naive_permanent(a)))
        return worst < 1e-10, f"max |Ryser - naive| = {worst:.2e} over 200 matrices"

    def criterion_2(self) -> tuple[bool, str]:
        rng = np.random.default_rng(BASE_SEED + 2)
        worst = 0.0
        for dim in range(2, 13):
            for _ in range(50):
                u = haar_unitary(dim, rng)
                circuit, theta = reck_decompose(u)
                rebuilt = np.exp(1j * theta)[:, None] * mesh_to_unitary(circuit)
                worst = max(worst, float(np.max(np.abs(rebuilt - u))))
        return worst < 1e-9, f"max reconstruction error {worst:.2e} over 550 unitaries"

    def criterion_3(self) -> tuple[bool, str]:
        rng = np.random.default_rng(BASE_SEED + 3)
        worst = 0.0
        for n, m in [(2, 2), (2, 4), (3, 3)]:
            u = haar_unitary(m, rng)
            basis = enumerate_basis(n, m)
            for s in basis.states:
                psi = fock_state(s)
                expected = creation_expansion(u, s)
                for method in ("permanent", "mesh"):
                    out = evolve(u, psi, method=method)
                    for t, amp in zip(basis.states, out.amplitudes):
                        worst = max(worst, abs(amp - expected.get(tuple(int(x) for x in t), 0j)))
        bs = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
        hom = evolve(bs, fock_state([1, 1])).probability([1, 1])
        ok = worst < 1e-10 and hom < 1e-12
        return ok, f"max deviation {worst:.2e}; HOM P(1,1) = {hom:.1e}"

    def criterion_4(self) -> tuple[bool, str]:
        rng = np.random.default_rng(BASE_SEED + 4)
        n, m = 3, 9
        worst = worst_full = worst_total = 0.0
        for _ in range(100):
            u = haar_unitary(m, rng)
            psi = evolve(u, single_photons(n, m))
            nbar = np.array([mean_photon_number(psi, i) for i in range(1, m + 1)])
            worst = max(worst, float(np.max(np.abs(nbar - 1.0))))
            worst_total = max(worst_total, abs(float(nbar.sum()) - n))
            # one photon in every mode: here every mean is 1 for any unitary
            full = np.sum(np.abs(u) ** 2, axis=1)
            worst_full = max(worst_full, float(np.max(np.abs(full - 1.0))))
        detail = (
            f"max |nbar_i - 1| = {worst:.3f} with {n} photons in {m} modes; "
            f"sum of nbar_i off by {worst_total:.1e}; all {m} modes filled gives max |nbar_i - 1| = {worst_full:.1e}"
        )
        return worst < 1e-10, detail

    def criterion_5(self) -> tuple[bool, str]:
        ok = all(lhs == rhs for lhs, rhs in (scaling_identity(n) for n in range(1, 21)))
        two = scaling_identity(2)[0]
        return ok and two == Fraction(2, 5), f"identity exact for n = 1..20; n = 2 gives {two}"

    def criterion_6(self) -> tuple[bool, str]:
        records = self.campaign("qubit")
        parts, ok = [], True
        for n in (3, 4):
            sub = [r for r in records if r.n == n]
            good = sum(r.converged for r in sub)
            ok &= good == len(sub)
            parts.append(f"n={n}: {good}/{len(sub)}")
        minutes = self._timings.get("qubit", 0.0) / 60
        ok &= minutes < 30
        return ok, ", ".join(parts) + f" converged; {minutes:.1f} min"

    def criterion_7(self) -> tuple[bool, str]:
        rng = np.random.default_rng(BASE_SEED + 7)
        n, m = 3, 9
        single, triple = [], []
        for _ in range(50):
            u = haar_unitary(m, rng)
            single.append(compress_photons(u, n, VquConfig(), sweeps=1)[1].final_fidelity)
            triple.append(compress_photons(u, n, VquConfig(), sweeps=3)[1].final_fidelity)
        frac = float(np.mean(np.array(single) > 0.99))
        worst3 = float(min(triple))
        ok = frac >= 0.95 and worst3 >= 1 - 1e-4
        detail = (
            f"one sweep > 0.99 in {frac:.0%} (median {np.median(single):.4f}); "
            f"three sweeps worst {worst3:.6f}"
        )
        return ok, detail

    def criterion_8(self) -> tuple[bool, str]:
        records = self.campaign("optical")
        parts, ok = [], True
        for n in (2, 3, 4):
            sub = [r for r in records if r.n == n]
            good = sum(r.converged for r in sub)
            ok &= good == len(sub) == 25
            parts.append(f"n={n}: {good}/{len(sub)}")
        report = fit_scaling(records)
        res = {k: f.residual_error for k, f in report.fits.items()}
        lin, quad, cub = res["linear"], res["quadratic"], res["cubic"]
        ordered = None not in (lin, quad, cub) and cub < quad < lin
        ok &= ordered

        def fmt(v):
            return "underdetermined" if v is None else f"{v:.2e}"

        means = ", ".join(f"{x:.0f}" for x in report.mean_iterations)
        return ok, (
            ", ".join(parts) + f" converged; mean iterations {means}; 1-R^2 linear {fmt(lin)}, "
            f"quadratic {fmt(quad)}, cubic {fmt(cub)}"
        )

    def criterion_9(self) -> tuple[bool, str]:
        fids, valid, crippled = [], [], []
        for n in (2, 3, 4):
            fids.append(laughlin_circuit_state(n).fidelity(laughlin_sum_state(n)))
            valid.append(ansatz_validate(laughlin_state(n)).final_fidelity)
            crippled.append(
                ansatz_validate(laughlin_state(n), WTildeAnsatz(n, crippled=True), VquConfig(max_restarts=2)).converged
            )
        ok = min(fids) >= 1 - 1e-10 and min(valid) >= 1 - 1e-5 and not any(crippled)
        return ok, (
            f"circuit vs sum fidelity >= {min(fids):.12f}; ansatz fidelity >= {min(valid):.7f}; "
            f"crippled converged: {crippled}"
        )

    def criterion_10(self) -> tuple[bool, str]:
        n, m, shots, trials = 2, 4, 100, 20
        layout = unsampling_layout(1, m)
        successes, finals = 0, []
        for t in range(trials):
            rng = np.random.default_rng(BASE_SEED + 1000 + t)
            psi = sample_state(haar_unitary(m, rng), n)
            exact = single_photon_loss(psi, layout)
            x0 = rng.uniform(-np.pi, np.pi, 2 * len(layout))
            noisy = with_shot_noise(exact, shots, rng)
            trace = minimize_warm(OptimizationProblem(noisy, x0, budget=400, rho_begin=1.0, rho_end=0.02))
            final = exact(trace.best_point)
            finals.append(final)
            successes += final < 0.3
        rate = successes / trials
        return rate >= 0.8, f"layer-1 loss < 0.3 in {successes}/{trials} trials (median {np.median(finals):.3f})"

    def criterion_11(self) -> tuple[bool, str]:
        hits = total = 0
        for seed in range(10):
            for bench in benchmark_suite(np.random.default_rng(BASE_SEED + 11 + seed)):
                trace = minimize(bench.problem())
                total += 1
                hits += trace.best_loss <= 1e-6
        rate = hits / total
        return rate >= 0.95, f"{hits}/{total} runs reached 1e-6 within 200*dim evaluations"

    def criterion_12(self) -> tuple[bool, str]:
        mismatched, total = 0, 0
        for name in self.CAMPAIGNS:
            first = self.campaign(name)
            again = self._run(name, "-rerun")
            total += len(first)
            mismatched += sum(a.replay_key() != b.replay_key() for a, b in zip(first, again))
            mismatched += abs(len(first) - len(again))
            files_first = [r.replay_key() for r in read_records(self.workdir / f"{name}.jsonl")]
            files_again = [r.replay_key() for r in read_records(self.workdir / f"{name}-rerun.jsonl")]
            mismatched += files_first != files_again
        return mismatched == 0, f"{total - mismatched}/{total} records replayed identically"

    TITLES = {
        1: "permanent oracle",
        2: "Reck round trip",
        3: "Fock evolution oracle",
        4: "photon-number conservation",
        5: "scaling identity",
        6: "qubit unsampling",
        7: "compression",
        8: "optical pipeline",
        9: "Laughlin states",
        10: "shot-noise layer 1",
        11: "optimizer benchmark",
        12: "determinism",
    }

    def run(self, number: int) -> CriterionResult:
        fn: Callable[[], tuple[bool, str]] = getattr(self, f"criterion_{number}")
        start = time.perf_counter()
        passed, detail = fn()
        return CriterionResult(number, self.TITLES[number], bool(passed), detail, time.perf_counter() - start)


def run_all(only=None, workdir=None, echo: bool = True) -> list[CriterionResult]:
    """Run the chosen criteria (all by default) and print one line each."""
    acc = Acceptance(workdir)
    results = []
    for number in only or range(1, 13):
        result = acc.run(number)
        if echo:
            print(result.line(), flush=True)
        results.append(result)
    return results
