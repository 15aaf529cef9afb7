"""Bound-constrained derivative-free minimization with quadratic interpolation models.

The method follows Powell's BOBYQA: ``2n+1`` interpolation points, each new
quadratic model is the one closest in Frobenius norm (of the Hessian change)
to the previous model, trust-region steps alternate with geometry-improving
steps, and a lower radius ``rho`` is reduced from ``rho_begin`` to
``rho_end``. The inverse of the interpolation KKT matrix is updated by a
rank-two formula when a point is replaced, and rebuilt from scratch whenever
the base point moves.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

TARGET_REACHED = "target-reached"
BUDGET_EXHAUSTED = "budget-exhausted"
TRUST_REGION_COLLAPSED = "trust-region-collapsed"

TWO_PI = 2 * np.pi


class EvaluationError(RuntimeError):
    """The loss returned a non-finite value; ``trace`` holds all evaluations before it."""

    def __init__(self, message: str, trace: "OptimizationTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass
class OptimizationProblem:
    loss: Callable[[np.ndarray], float]
    x0: np.ndarray
    lower: np.ndarray | float = -TWO_PI
    upper: np.ndarray | float = TWO_PI
    budget: int = 10_000
    target: float = -np.inf
    rho_begin: float = 0.5
    rho_end: float = 1e-8

    def __post_init__(self):
        self.x0 = np.array(self.x0, dtype=float).reshape(-1)
        n = self.x0.size
        if n < 1:
            raise ValueError("need at least one variable")
        self.lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        self.upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ValueError("bounds must be finite")
        if np.any(self.upper <= self.lower):
            raise ValueError("every upper bound must exceed its lower bound")
        if np.any(self.x0 < self.lower) or np.any(self.x0 > self.upper):
            raise ValueError("initial point outside bounds")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if not 0 < self.rho_end <= self.rho_begin:
            raise ValueError("need 0 < rho_end <= rho_begin")

    @property
    def dimension(self) -> int:
        return self.x0.size


@dataclass
class OptimizationTrace:
    points: list[np.ndarray] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)
    termination_reason: str | None = None
    #: index of the first evaluation of every run (restarts start new runs)
    run_starts: list[int] = field(default_factory=lambda: [0])

    def __len__(self) -> int:
        return len(self.losses)

    @property
    def evaluations(self) -> list[tuple[np.ndarray, float]]:
        return list(zip(self.points, self.losses))

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.losses))

    @property
    def best_point(self) -> np.ndarray:
        return self.points[self.best_index]

    @property
    def best_loss(self) -> float:
        return float(self.losses[self.best_index])

    @property
    def n_runs(self) -> int:
        return len(self.run_starts)

    def running_min(self) -> np.ndarray:
        return np.minimum.accumulate(np.asarray(self.losses, dtype=float))

    def to_dict(self, include_points: bool = True) -> dict:
        out = {
            "termination_reason": self.termination_reason,
            "run_starts": list(self.run_starts),
            "losses": [float(v) for v in self.losses],
        }
        if include_points:
            out["points"] = [p.tolist() for p in self.points]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "OptimizationTrace":
        points = [np.asarray(p, dtype=float) for p in data.get("points", [])]
        return cls(points, list(data["losses"]), data["termination_reason"], list(data["run_starts"]))

    def write_jsonl(self, fp) -> None:
        """One JSON object per evaluation: ``{"i", "run", "loss", "point"}``."""
        run = 0
        for i, (x, f) in enumerate(self.evaluations):
            while run + 1 < len(self.run_starts) and self.run_starts[run + 1] <= i:
                run += 1
            fp.write(json.dumps({"i": i, "run": run, "loss": float(f), "point": x.tolist()}) + "\n")


class _TargetReached(Exception):
    pass


class _BudgetExhausted(Exception):
    pass


def _trust_region_step(g, hess_vec, radius, lo, hi):
    """Approximately minimize ``g.s + s.H.s/2`` on ``|s| <= radius`` and ``lo <= s <= hi``.

    Truncated conjugate gradients; a variable that hits its bound is frozen
    there and CG restarts on the remaining ones.
    """
    n = g.size
    s = np.zeros(n)
    free = ~(((lo >= 0) & (g > 0)) | ((hi <= 0) & (g < 0)))
    grad = g.copy()
    for _ in range(n + 1):
        r = np.where(free, -grad, 0.0)
        rr = r @ r
        if rr <= 1e-30 * max(1.0, g @ g):
            break
        p = r.copy()
        restart = False
        for _ in range(int(free.sum())):
            hp = hess_vec(p)
            curv = p @ hp
            # largest step along p inside the ball
            sp, pp, ss = s @ p, p @ p, s @ s
            disc = sp * sp + pp * (radius * radius - ss)
            a_ball = (-sp + np.sqrt(max(disc, 0.0))) / pp
            with np.errstate(divide="ignore", invalid="ignore"):
                lim = np.where(p > 0, (hi - s) / p, np.where(p < 0, (lo - s) / p, np.inf))
            lim = np.where(free, lim, np.inf)
            hit = int(np.argmin(lim))
            a_bound = max(float(lim[hit]), 0.0)
            a_cg = rr / curv if curv > 0 else np.inf
            a = min(a_cg, a_ball, a_bound)
            s = s + a * p
            grad = grad + a * hp
            if a == a_ball:
                return s
            if a == a_bound and a_bound < a_cg:
                s[hit] = hi[hit] if p[hit] > 0 else lo[hit]
                free[hit] = False
                restart = True
                break
            r_new = np.where(free, -grad, 0.0)
            rr_new = r_new @ r_new
            if rr_new <= 1e-30 * max(1.0, g @ g) or rr_new < 1e-4 * rr and np.sqrt(rr_new) * radius < 1e-2 * abs(g @ s):
                return s
            p = r_new + (rr_new / rr) * p
            rr = rr_new
        if not restart:
            break
    return s


class _Bobyqa:
    def __init__(self, problem: OptimizationProblem, trace: OptimizationTrace):
        self.p = problem
        self.trace = trace
        self.n = problem.dimension
        self.npt = 2 * self.n + 1
        self.lower, self.upper = problem.lower, problem.upper
        self.nf = 0
        self.rebuild_every = max(50, self.n)
        self.drift_tol = 1.0

    # -- evaluation -------------------------------------------------------------
    def evaluate(self, x: np.ndarray) -> float:
        if self.nf >= self.p.budget:
            raise _BudgetExhausted
        x = np.clip(x, self.lower, self.upper)
        f = self.p.loss(x.copy())
        f = float(f)
        self.trace.points.append(x.copy())
        self.trace.losses.append(f)
        self.nf += 1
        if not np.isfinite(f):
            raise EvaluationError(f"loss returned {f} at evaluation {len(self.trace) - 1}", self.trace)
        if f <= self.p.target:
            raise _TargetReached
        return f

    # -- interpolation system ---------------------------------------------------
    def rebuild(self, scale: float):
        """New base point ``x_opt``, scale, KKT inverse and re-expressed model."""
        n, npt = self.n, self.npt
        h_old = self.full_hessian() if hasattr(self, "hexp") else None
        if h_old is not None:
            y_shift = self.Y[self.kopt].copy()
            ratio = scale / self.sigma
            g_new = ratio * (self.g + h_old @ y_shift)
            c_new = self.fval[self.kopt]
            h_new = ratio * ratio * h_old
        self.x0 = self.X[self.kopt].copy()
        self.sigma = scale
        self.Y = (self.X - self.x0) / scale
        self.lo = (self.lower - self.x0) / scale
        self.hi = (self.upper - self.x0) / scale
        gram = self.Y @ self.Y.T
        w = np.zeros((npt + n + 1, npt + n + 1))
        w[:npt, :npt] = 0.5 * gram * gram
        w[:npt, npt] = w[npt, :npt] = 1.0
        w[:npt, npt + 1 :] = self.Y
        w[npt + 1 :, :npt] = self.Y.T
        try:
            omega = np.linalg.inv(w)
        except np.linalg.LinAlgError:
            omega = None
        if omega is None or not np.all(np.isfinite(omega)):
            # degenerate point set: start over with a fresh stencil around x_opt
            self.reset_points()
            return
        self.omega = omega
        self.since_rebuild = 0
        if h_old is None:
            coef = self.omega[:, :npt] @ self.fval
            self.mu = coef[:npt].copy()
            self.c = coef[npt]
            self.g = coef[npt + 1 :].copy()
            self.hexp = np.zeros((n, n))
        else:
            self.hexp, self.g, self.c = h_new, g_new, c_new
            self.mu = np.zeros(npt)
            resid = self.fval - self.model_values(self.Y)
            coef = self.omega[:, :npt] @ resid
            self.mu += coef[:npt]
            self.c += coef[npt]
            self.g += coef[npt + 1 :]

    def full_hessian(self) -> np.ndarray:
        return self.hexp + (self.Y.T * self.mu) @ self.Y

    def hess_vec(self, v: np.ndarray) -> np.ndarray:
        return self.hexp @ v + self.Y.T @ (self.mu * (self.Y @ v))

    def model_values(self, ys: np.ndarray) -> np.ndarray:
        ys = np.atleast_2d(ys)
        quad = ((ys @ self.hexp) * ys).sum(axis=1)
        implicit = ((ys @ self.Y.T) ** 2) @ self.mu
        return self.c + ys @ self.g + 0.5 * quad + 0.5 * implicit

    def kkt_column(self, y: np.ndarray) -> np.ndarray:
        dots = self.Y @ y
        return np.concatenate([0.5 * dots * dots, [1.0], y])

    def lagrange_values(self, y: np.ndarray) -> np.ndarray:
        return self.omega[: self.npt] @ self.kkt_column(y)

    def replace_point(self, t: int, x_new: np.ndarray, f_new: float) -> bool:
        """Swap interpolation point ``t`` for ``x_new``; False if the update is singular."""
        npt = self.npt
        y_new = (x_new - self.x0) / self.sigma
        w_new = self.kkt_column(y_new)
        w_new[t] = 0.5 * (y_new @ y_new) ** 2
        w_old = self.kkt_column(self.Y[t])
        delta = w_new - w_old
        u = delta.copy()
        u[t] *= 0.5
        om_t = self.omega[:, t].copy()
        om_u = self.omega @ u
        # the update denominator is alpha*beta + tau^2 with tau = l_t(y_new)
        tau = self.omega[t] @ self.kkt_column(y_new)
        k = np.array([[om_t[t], 1.0 + om_u[t]], [1.0 + om_u[t], u @ om_u]])
        det = k[0, 0] * k[1, 1] - k[0, 1] * k[1, 0]
        if not np.isfinite(det) or det == 0.0 or abs(tau) < 1e-10:
            return False
        oc = np.stack([om_t, om_u], axis=1)
        try:
            correction = oc @ np.linalg.solve(k, oc.T)
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(correction)):
            return False
        resid = f_new - float(self.model_values(y_new)[0])
        self.omega = self.omega - correction
        self.hexp += self.mu[t] * np.outer(self.Y[t], self.Y[t])
        self.mu[t] = 0.0
        self.X[t] = x_new
        self.Y[t] = y_new
        self.fval[t] = f_new
        coef = resid * self.omega[:, t]
        self.mu += coef[:npt]
        self.c += coef[npt]
        self.g += coef[npt + 1 :]
        self.since_rebuild += 1
        if f_new < self.fval[self.kopt]:
            self.kopt = t
        # drift check: column t of the new KKT matrix must map to e_t
        drift = self.omega @ w_new
        drift[t] -= 1.0
        if np.max(np.abs(drift)) > self.drift_tol:
            self.rebuild(self.spread(0.0, 0.0))
        return True

    def denominators(self, x_new: np.ndarray) -> np.ndarray:
        """``|alpha_t beta + tau_t^2|`` for every ``t``: the size of the update denominator if ``x_new`` replaced point ``t``."""
        y = (x_new - self.x0) / self.sigma
        w = self.kkt_column(y)
        hw = self.omega @ w
        tau = hw[: self.npt]
        beta = 0.5 * (y @ y) ** 2 - w @ hw
        return np.abs(np.diagonal(self.omega)[: self.npt] * beta + tau * tau)

    def choose_and_replace(self, x_new, f_new, delta, rho, exclude_opt: bool):
        score = self.denominators(x_new)
        dist = np.linalg.norm(self.X - self.X[self.kopt], axis=1)
        score *= np.maximum(1.0, (dist / max(0.1 * delta, rho)) ** 2) ** 2
        if exclude_opt:
            score[self.kopt] = -np.inf
        for t in np.argsort(-score, kind="stable")[:5]:
            if not np.isfinite(score[t]):
                break
            if self.replace_point(int(t), x_new, f_new):
                return
        # fall back: rebuild the system first, then force the best candidate
        self.rebuild(self.sigma)
        t = int(np.argmax(score))
        if not self.replace_point(t, x_new, f_new):
            self.X[t] = x_new
            self.fval[t] = f_new
            if f_new < self.fval[self.kopt]:
                self.kopt = t
            self.rebuild(self.sigma)

    # -- geometry step ----------------------------------------------------------
    def geometry_point(self, t: int, radius: float) -> np.ndarray:
        """Point within ``radius`` of ``x_opt`` (and the bounds) where ``|l_t|`` is large."""
        npt = self.npt
        lam = self.omega[:npt, t]
        g_t = self.omega[npt + 1 :, t]
        y_opt = self.Y[self.kopt]
        grad = g_t + self.Y.T @ (lam * (self.Y @ y_opt))
        rad = radius / self.sigma
        dirs = [self.Y[t] - y_opt, grad]
        others = np.argsort(-np.abs(lam), kind="stable")[:10]
        dirs.extend(self.Y[i] - y_opt for i in others if i != self.kopt)
        best_val, best_y = -1.0, None
        for u in dirs:
            nu = np.linalg.norm(u)
            if nu == 0:
                continue
            u = u / nu
            slope = grad @ u
            curv = (lam * (self.Y @ u) ** 2).sum()
            with np.errstate(divide="ignore", invalid="ignore"):
                up = np.where(u > 0, (self.hi - y_opt) / u, np.where(u < 0, (self.lo - y_opt) / u, np.inf))
                dn = np.where(u < 0, (self.hi - y_opt) / u, np.where(u > 0, (self.lo - y_opt) / u, -np.inf))
            a_hi = min(rad, float(np.min(up)))
            a_lo = max(-rad, float(np.max(dn)))
            cands = [a_lo, a_hi]
            if curv != 0:
                a_star = -slope / curv
                if a_lo < a_star < a_hi:
                    cands.append(a_star)
            for a in cands:
                val = abs(a * slope + 0.5 * a * a * curv)
                if val > best_val and a != 0:
                    best_val, best_y = val, y_opt + a * u
        if best_y is None:
            best_y = y_opt + rad * np.eye(self.n)[0]
        return np.clip(self.x0 + self.sigma * best_y, self.lower, self.upper)

    # -- main loop --------------------------------------------------------------
    def reset_points(self):
        x_opt, f_opt = self.X[self.kopt].copy(), self.fval[self.kopt]
        self.X = self.initial_points(self.rho, x_opt)
        self.fval = np.array([f_opt] + [self.evaluate(x) for x in self.X[1:]])
        self.kopt = int(np.argmin(self.fval))
        del self.hexp
        self.rebuild(self.rho)

    def initial_points(self, rho: float, center: np.ndarray | None = None) -> np.ndarray:
        n = self.n
        x0 = self.p.x0 if center is None else center
        lo, hi = self.lower, self.upper
        pts = [x0.copy()]
        plus, minus = [], []
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            if x0[i] - lo[i] < rho:
                a, b = rho, 2 * rho
            elif hi[i] - x0[i] < rho:
                a, b = -rho, -2 * rho
            else:
                a, b = rho, -rho
            plus.append(x0 + a * e)
            minus.append(x0 + b * e)
        return np.array(pts + plus + minus)

    def run(self) -> str:
        p = self.p
        span = float(np.min(self.upper - self.lower))
        rho = min(p.rho_begin, 0.5 * span)
        rho_end = min(p.rho_end, rho)
        delta = rho
        self.rho = rho
        try:
            self.X = self.initial_points(rho)
            fv = []
            for x in self.X:
                fv.append(self.evaluate(x))
            self.fval = np.array(fv)
            self.kopt = int(np.argmin(self.fval))
            self.sigma = rho
            self.rebuild(rho)
            geometry_pending = False
            while True:
                if geometry_pending:
                    geometry_pending = False
                    dist = np.linalg.norm(self.X - self.X[self.kopt], axis=1)
                    t = int(np.argmax(dist))
                    radius = max(min(0.1 * dist[t], delta), rho)
                    x_new = self.geometry_point(t, radius)
                    f_new = self.evaluate(x_new)
                    if not self.replace_point(t, x_new, f_new):
                        self.choose_and_replace(x_new, f_new, delta, rho, exclude_opt=False)
                    continue

                y_opt = self.Y[self.kopt]
                g_opt = self.g + self.hess_vec(y_opt)
                s = _trust_region_step(g_opt, self.hess_vec, delta / self.sigma, self.lo - y_opt, self.hi - y_opt)
                snorm = np.linalg.norm(s) * self.sigma
                dist = np.linalg.norm(self.X - self.X[self.kopt], axis=1)
                far = dist.max() > max(2 * delta, 10 * rho)

                if snorm < 0.5 * rho:
                    if far:
                        geometry_pending = True
                        continue
                    rho, delta = self.reduce_rho(rho, rho_end, delta)
                    continue

                pred = -(g_opt @ s + 0.5 * s @ self.hess_vec(s))
                f_opt = self.fval[self.kopt]
                x_new = np.clip(self.x0 + self.sigma * (y_opt + s), self.lower, self.upper)
                f_new = self.evaluate(x_new)
                ratio = (f_opt - f_new) / pred if pred > 0 else -1.0
                if ratio <= 0.1:
                    delta = min(0.5 * delta, snorm)
                elif ratio <= 0.7:
                    delta = max(0.5 * delta, snorm)
                else:
                    delta = max(0.5 * delta, 2 * snorm)
                if delta <= 1.5 * rho:
                    delta = rho
                self.choose_and_replace(x_new, f_new, delta, rho, exclude_opt=f_new >= f_opt)

                if ratio <= 0.1:
                    dist = np.linalg.norm(self.X - self.X[self.kopt], axis=1)
                    if dist.max() > max(2 * delta, 10 * rho):
                        geometry_pending = True
                    elif max(delta, snorm) <= rho:
                        rho, delta = self.reduce_rho(rho, rho_end, delta)
                        continue
                self.maybe_shift(delta, rho)
        except _TargetReached:
            return TARGET_REACHED
        except _BudgetExhausted:
            return BUDGET_EXHAUSTED
        except _Collapsed:
            return TRUST_REGION_COLLAPSED

    def maybe_shift(self, delta, rho):
        y_opt_norm = np.linalg.norm(self.Y[self.kopt]) * self.sigma
        if y_opt_norm > 10 * max(delta, rho) or self.since_rebuild >= self.rebuild_every:
            self.rebuild(self.spread(delta, rho))

    def spread(self, delta, rho) -> float:
        far = float(np.max(np.linalg.norm(self.X - self.X[self.kopt], axis=1)))
        return max(delta, rho, far) if far > 0 else self.sigma

    def reduce_rho(self, rho, rho_end, delta):
        if rho <= rho_end:
            raise _Collapsed
        ratio = rho / rho_end
        if ratio <= 16:
            new_rho = rho_end
        elif ratio <= 250:
            new_rho = np.sqrt(ratio) * rho_end
        else:
            new_rho = 0.1 * rho
        delta = max(0.5 * rho, new_rho)
        self.rho = new_rho
        self.rebuild(self.spread(delta, new_rho))
        return new_rho, delta


class _Collapsed(Exception):
    pass


def minimize(problem: OptimizationProblem, rng: np.random.Generator | None = None) -> OptimizationTrace:
    """Minimize ``problem.loss`` from ``problem.x0``.

    The method is deterministic; ``rng`` is accepted so that every optimizer
    entry point has the same signature, and is not consumed.
    """
    trace = OptimizationTrace()
    trace.termination_reason = _Bobyqa(problem, trace).run()
    return trace


def minimize_with_restarts(
    problem: OptimizationProblem, rng: np.random.Generator, max_restarts: int = 10
) -> OptimizationTrace:
    """Run :func:`minimize`, restarting from uniform random points in the bounds while the target is missed.

    Every run gets the full ``problem.budget``. The returned trace holds all
    runs back to back; ``run_starts`` marks where each begins.
    """
    trace = minimize(problem, rng)
    restarts = 0
    while trace.best_loss > problem.target and restarts < max_restarts:
        restarts += 1
        x0 = rng.uniform(problem.lower, problem.upper)
        sub = OptimizationProblem(
            problem.loss,
            x0,
            problem.lower,
            problem.upper,
            problem.budget,
            problem.target,
            problem.rho_begin,
            problem.rho_end,
        )
        start = len(trace)
        try:
            run = minimize(sub, rng)
        except EvaluationError as err:
            err.trace.run_starts = [0]
            _append(trace, err.trace, start)
            err.trace = trace
            raise
        _append(trace, run, start)
        trace.termination_reason = run.termination_reason
    return trace


def minimize_warm(problem: OptimizationProblem, rng: np.random.Generator | None = None) -> OptimizationTrace:
    """Rerun :func:`minimize` from the best point with a fresh trust region until the budget is spent.

    Meant for noisy losses, where a run tends to shrink its radius on noise
    and stop long before the budget is used. Each run starts at
    ``rho_begin`` again, so a lucky noisy minimum is soon revisited.
    """
    trace = OptimizationTrace()
    x = problem.x0
    while len(trace) < problem.budget:
        sub = dataclasses.replace(problem, x0=np.array(x, dtype=float), budget=problem.budget - len(trace))
        run = minimize(sub, rng)
        start = len(trace)
        if start == 0:
            trace.points.extend(run.points)
            trace.losses.extend(run.losses)
        else:
            _append(trace, run, start)
        trace.termination_reason = run.termination_reason
        if run.termination_reason == TARGET_REACHED:
            break
        x = trace.best_point
    return trace


def _append(trace: OptimizationTrace, run: OptimizationTrace, start: int) -> None:
    trace.points.extend(run.points)
    trace.losses.extend(run.losses)
    trace.run_starts.append(start)


def with_shot_noise(loss: Callable[[np.ndarray], float], shots: int, rng: np.random.Generator):
    """Finite-count estimate of a loss that is itself a probability.

    Each call draws ``Binomial(shots, loss(x))`` and returns the observed
    frequency, so repeated calls at the same point differ.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")

    def noisy(x):
        prob = min(1.0, max(0.0, float(loss(x))))
        return rng.binomial(shots, prob) / shots

    return noisy


# -- benchmark set ---------------------------------------------------------------


@dataclass(frozen=True)
class Benchmark:
    name: str
    loss: Callable[[np.ndarray], float]
    x0: np.ndarray
    lower: float
    upper: float

    @property
    def dimension(self) -> int:
        return self.x0.size

    def problem(self, target: float = 1e-6, budget: int | None = None) -> OptimizationProblem:
        return OptimizationProblem(
            self.loss,
            self.x0,
            self.lower,
            self.upper,
            budget if budget is not None else 200 * self.dimension,
            target,
        )


def sphere(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x @ x)


def rosenbrock(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def rotated_quadratic(dim: int, rng: np.random.Generator, condition: float = 100.0):
    """``x^T A x`` with a random rotation and eigenvalues spread over ``[1, condition]``."""
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    a = (q * np.logspace(0, np.log10(condition), dim)) @ q.T

    def f(x):
        x = np.asarray(x, dtype=float)
        return float(x @ a @ x)

    return f


def mzi_chain_loss(dim: int, rng: np.random.Generator):
    """Periodic loss of a chain of MZIs on consecutive modes.

    ``dim`` phases drive ``ceil(dim/2)`` MZIs (an odd ``dim`` leaves the last
    external phase at zero). The chain routes a photon from mode 1, and the
    loss is one minus its overlap with the output of a random target setting,
    so the global minimum is exactly zero.
    """
    from .mesh import apply_mzi_rows

    n_mzi = (dim + 1) // 2
    modes = n_mzi + 1

    def output(x):
        ph = np.zeros(2 * n_mzi)
        ph[:dim] = x
        v = np.zeros((modes, 1), dtype=complex)
        v[0, 0] = 1.0
        for i in range(n_mzi):
            apply_mzi_rows(v, i + 1, ph[2 * i], ph[2 * i + 1])
        return v[:, 0]

    target = output(rng.uniform(-np.pi, np.pi, dim))

    def f(x):
        return float(1.0 - abs(np.vdot(target, output(np.asarray(x, dtype=float)))) ** 2)

    return f


def benchmark_suite(rng: np.random.Generator) -> list[Benchmark]:
    """Sphere, rotated quadratic and Rosenbrock-2D, plus MZI chain losses of dimension 2 to 12."""
    out = [
        Benchmark("sphere-4", sphere, rng.uniform(-2, 2, 4), -5.0, 5.0),
        Benchmark("rotated-quadratic-6", rotated_quadratic(6, rng), rng.uniform(-2, 2, 6), -5.0, 5.0),
        Benchmark("rosenbrock-2", rosenbrock, np.array([-1.2, 1.0]), -5.0, 5.0),
    ]
    for d in range(2, 13):
        out.append(Benchmark(f"mzi-chain-{d}", mzi_chain_loss(d, rng), rng.uniform(-np.pi, np.pi, d), -TWO_PI, TWO_PI))
    return out
