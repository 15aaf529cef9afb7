"""Independent reference implementations used only by the tests."""

import itertools
import math

import numpy as np


def naive_permanent(a) -> complex:
    a = np.asarray(a, dtype=complex)
    k = a.shape[0]
    total = 0j
    for perm in itertools.permutations(range(k)):
        term = 1 + 0j
        for i, p in enumerate(perm):
            term *= a[i, p]
        total += term
    return total


def creation_expansion(u, occupation) -> dict:
    """Output amplitudes of ``U|s>`` by expanding products of creation operators."""
    u = np.asarray(u, dtype=complex)
    m = u.shape[0]
    terms = {(0,) * m: 1 + 0j}
    norm = 1.0
    for j, s_j in enumerate(occupation):
        norm *= math.factorial(s_j)
        for _ in range(s_j):
            nxt = {}
            for occ, c in terms.items():
                for i in range(m):
                    key = occ[:i] + (occ[i] + 1,) + occ[i + 1 :]
                    nxt[key] = nxt.get(key, 0j) + c * u[i, j]
            terms = nxt
    return {k: v * math.sqrt(math.prod(math.factorial(t) for t in k) / norm) for k, v in terms.items()}


def normal_equation_fit(x, y, degree):
    x = np.asarray(x, dtype=float)
    v = np.vander(x, degree + 1, increasing=True)
    return np.linalg.solve(v.T @ v, v.T @ np.asarray(y, dtype=float))


def dense_two_site(u2, sites, n_sites, d):
    """Full operator of a two-site gate built from explicit basis-state bookkeeping."""
    dim = d**n_sites
    full = np.zeros((dim, dim), dtype=complex)
    s1, s2 = sites[0] - 1, sites[1] - 1
    for col in range(dim):
        digits = list(np.unravel_index(col, (d,) * n_sites))
        inp = digits[s1] * d + digits[s2]
        for out in range(d * d):
            amp = u2[out, inp]
            if amp == 0:
                continue
            new = list(digits)
            new[s1], new[s2] = divmod(out, d)
            full[np.ravel_multi_index(new, (d,) * n_sites), col] += amp
    return full


def ks_uniform(samples, lo, hi) -> float:
    """Kolmogorov-Smirnov distance of ``samples`` from the uniform law on ``[lo, hi)``."""
    s = np.sort((np.asarray(samples) - lo) / (hi - lo))
    n = s.size
    upper = np.arange(1, n + 1) / n - s
    lower = s - np.arange(n) / n
    return float(max(upper.max(), lower.max()))
