"""Experiment harness: seeded campaigns, JSON-lines records, scaling fits and exports.

Exit codes of :func:`main`: 0 success, 1 usage error, 2 data error,
3 failed acceptance criteria in ``verify``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .fock import CapacityError
from .linalg import InsufficientDataError, haar_unitary, polyfit, r_squared
from .optimizer import OptimizationProblem, minimize
from .protocols import VquConfig, VquResult, ansatz_validate, optical_vqu_compressed, optical_vqu_direct, qubit_vqu
from .qudit import laughlin_state

SCHEMA_VERSION = 1
PROTOCOLS = ("qubit-vqu", "optical-direct", "optical-compressed", "ansatz-validation")
MODELS = ("linear", "quadratic", "cubic", "exponential")
MODEL_FORMULAS = {
    "linear": "a+bx",
    "quadratic": "a+bx+cx^2",
    "cubic": "a+bx+cx^2+dx^3",
    "exponential": "a+b*exp(cx+d)",
}
MAX_DEFAULT_N = 4

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NOT_CONVERGED = 0, 1, 2, 3

CSV_COLUMNS = (
    "schema_version",
    "protocol",
    "n",
    "m",
    "trial",
    "seed",
    "total_iterations",
    "restarts_used",
    "final_fidelity",
    "converged",
    "wall_time_seconds",
    "n_layers",
    "layer_iterations",
    "layer_final_losses",
)


class DataError(ValueError):
    """A records file or its contents cannot be used."""


@dataclass
class ExperimentRecord:
    """One Monte Carlo trial. Everything but ``wall_time_seconds`` replays exactly from the seed."""

    protocol: str
    n: int
    m: int | None
    trial: int
    seed: int
    total_iterations: int
    restarts_used: int
    final_fidelity: float
    converged: bool
    wall_time_seconds: float
    layers: list[dict] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "protocol": self.protocol,
            "n": self.n,
            "m": self.m,
            "trial": self.trial,
            "seed": self.seed,
            "total_iterations": self.total_iterations,
            "restarts_used": self.restarts_used,
            "final_fidelity": self.final_fidelity,
            "converged": self.converged,
            "wall_time_seconds": self.wall_time_seconds,
            "layers": self.layers,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def replay_key(self) -> str:
        """Canonical JSON of every field except the timing."""
        data = self.to_dict()
        del data["wall_time_seconds"]
        return json.dumps(data, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentRecord":
        if "schema_version" not in data:
            raise DataError("missing schema_version")
        if data["schema_version"] != SCHEMA_VERSION:
            raise DataError(f"unsupported schema_version {data['schema_version']!r}")
        if data.get("protocol") not in PROTOCOLS:
            raise DataError(f"unknown protocol {data.get('protocol')!r}")
        try:
            return cls(
                protocol=data["protocol"],
                n=int(data["n"]),
                m=None if data.get("m") is None else int(data["m"]),
                trial=int(data["trial"]),
                seed=int(data["seed"]),
                total_iterations=int(data["total_iterations"]),
                restarts_used=int(data["restarts_used"]),
                final_fidelity=float(data["final_fidelity"]),
                converged=bool(data["converged"]),
                wall_time_seconds=float(data["wall_time_seconds"]),
                layers=list(data.get("layers", [])),
                schema_version=data["schema_version"],
            )
        except KeyError as err:
            raise DataError(f"missing field {err.args[0]!r}") from None
        except (TypeError, ValueError) as err:
            raise DataError(str(err)) from None


# ---------------------------------------------------------------- campaigns


def derive_seed(base_seed: int, protocol: str, n: int, trial: int) -> int:
    """Stable 64-bit seed from the campaign coordinates (independent of ``PYTHONHASHSEED``)."""
    digest = hashlib.blake2b(f"{base_seed}|{protocol}|{n}|{trial}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def default_modes(protocol: str, n: int) -> int | None:
    return n * n if protocol.startswith("optical") else None


def _run_protocol(protocol: str, n: int, m: int | None, config: VquConfig) -> VquResult:
    rng = np.random.default_rng(config.seed)
    if protocol == "qubit-vqu":
        return qubit_vqu(haar_unitary(2**n, rng), config)
    if protocol == "optical-direct":
        return optical_vqu_direct(haar_unitary(m, rng), n, config)
    if protocol == "optical-compressed":
        return optical_vqu_compressed(haar_unitary(m, rng), n, config)
    if protocol == "ansatz-validation":
        return ansatz_validate(laughlin_state(n), config=config)
    raise ValueError(f"unknown protocol {protocol!r}")


def run_trial(protocol: str, n: int, trial: int, base_seed: int, config: VquConfig, m: int | None = None) -> ExperimentRecord:
    """Run one seeded trial. The Haar draw and the optimizer restarts both derive from the trial seed."""
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}")
    m = m if m is not None else default_modes(protocol, n)
    seed = derive_seed(base_seed, protocol, n, trial)
    cfg = dataclasses.replace(config, seed=seed)
    start = time.perf_counter()
    result = _run_protocol(protocol, n, m, cfg)
    elapsed = time.perf_counter() - start
    return ExperimentRecord(
        protocol=protocol,
        n=n,
        m=m if protocol.startswith("optical") else None,
        trial=trial,
        seed=seed,
        total_iterations=result.total_iterations,
        restarts_used=result.restarts_used,
        final_fidelity=float(result.final_fidelity),
        converged=result.converged,
        wall_time_seconds=elapsed,
        layers=[{"label": s["label"], "iterations": s["iterations"], "final_loss": s["final_loss"]} for s in result.layer_summaries()],
    )


def _trial_job(args):
    return run_trial(*args)


def _load_existing(path: Path) -> dict[tuple[str, int, int], ExperimentRecord]:
    """Records already on disk; a torn final line from a crash is cut off."""
    if not path.exists():
        return {}
    raw = path.read_bytes()
    if raw and not raw.endswith(b"\n"):
        raw = raw[: raw.rfind(b"\n") + 1]
        with open(path, "r+b") as fh:
            fh.truncate(len(raw))
    return {(r.protocol, r.n, r.trial): r for r in parse_records(raw.decode())}


def run_campaign(
    protocol: str,
    n_range: Iterable[int],
    trials_per_n: int,
    base_seed: int,
    config: VquConfig | None = None,
    out: str | os.PathLike | None = None,
    modes: int | None = None,
    workers: int = 1,
) -> Iterator[ExperimentRecord]:
    """Yield records ordered by ``(n, trial)``, appending new ones to ``out`` as they finish.

    Pairs already present in ``out`` are read back instead of rerun, so an
    interrupted campaign resumes where it stopped. With ``workers > 1`` the
    trials run in a process pool; writing stays in this process and keeps
    the ``(n, trial)`` order.
    """
    if trials_per_n < 1:
        raise ValueError("trials_per_n must be >= 1")
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}")
    config = config or VquConfig()
    path = Path(out) if out is not None else None
    existing: dict = {}
    if path is not None:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            existing = _load_existing(path)
            fh = open(path, "a", encoding="utf-8")
        except OSError as err:
            raise OSError(f"cannot write records to {path}: {err}") from err
    jobs = [(protocol, n, t, base_seed, config, modes) for n in n_range for t in range(trials_per_n)]
    todo = [j for j in jobs if (protocol, j[1], j[2]) not in existing]
    try:
        if workers > 1 and len(todo) > 1:
            pool = ProcessPoolExecutor(max_workers=workers)
            fresh = pool.map(_trial_job, todo)
        else:
            pool = None
            fresh = map(_trial_job, todo)
        try:
            for job in jobs:
                key = (protocol, job[1], job[2])
                if key in existing:
                    if existing[key].seed != derive_seed(base_seed, *key):
                        raise DataError(f"{path} holds n={key[1]} trial={key[2]} from a different base seed")
                    yield existing[key]
                    continue
                record = next(fresh)
                if path is not None:
                    fh.write(record.to_json() + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
                yield record
        finally:
            if pool is not None:
                pool.shutdown(cancel_futures=True)
    finally:
        if path is not None:
            fh.close()


# ------------------------------------------------------------------ records


def parse_records(text: str) -> list[ExperimentRecord]:
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as err:
            raise DataError(f"line {lineno}: malformed JSON ({err.msg})") from None
        if not isinstance(data, dict):
            raise DataError(f"line {lineno}: expected a JSON object")
        try:
            records.append(ExperimentRecord.from_dict(data))
        except DataError as err:
            raise DataError(f"line {lineno}: {err}") from None
    return records


def read_records(path: str | os.PathLike) -> list[ExperimentRecord]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise DataError(f"cannot read {path}: {err}") from None
    return parse_records(text)


def _csv_row(r: ExperimentRecord) -> list[str]:
    losses = ["" if s.get("final_loss") is None else repr(float(s["final_loss"])) for s in r.layers]
    return [
        str(r.schema_version),
        r.protocol,
        str(r.n),
        "" if r.m is None else str(r.m),
        str(r.trial),
        str(r.seed),
        str(r.total_iterations),
        str(r.restarts_used),
        repr(r.final_fidelity),
        "true" if r.converged else "false",
        repr(r.wall_time_seconds),
        str(len(r.layers)),
        ";".join(str(s["iterations"]) for s in r.layers),
        ";".join(losses),
    ]


def records_to_csv(records: Sequence[ExperimentRecord]) -> str:
    """Flat CSV, one row per record, columns :data:`CSV_COLUMNS`.

    Floats are written with ``repr`` so they parse back to the same
    doubles. Per-layer values are ``;``-joined.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow(_csv_row(r))
    return buf.getvalue()


def records_to_json(records: Sequence[ExperimentRecord]) -> str:
    return json.dumps([r.to_dict() for r in records], indent=2) + "\n"


def export(records_path: str | os.PathLike, fmt: str = "csv", out: str | os.PathLike | None = None) -> str:
    """Export a records file as ``csv`` or ``json``; writes ``out`` when given and returns the text."""
    records = read_records(records_path)
    if fmt == "csv":
        text = records_to_csv(records)
    elif fmt == "json":
        text = records_to_json(records)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if out is not None:
        Path(out).write_text(text, encoding="utf-8")
    return text


# ------------------------------------------------------------------ fitting


@dataclass(frozen=True)
class ModelFit:
    """Fit of one scaling model; ``status`` is ``"ok"`` or ``"underdetermined"`` (no fit attempted)."""

    model: str
    coefficients: tuple[float, ...]
    r_squared: float | None
    status: str = "ok"

    @property
    def residual_error(self) -> float | None:
        return None if self.r_squared is None else 1.0 - self.r_squared

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "formula": MODEL_FORMULAS[self.model],
            "status": self.status,
            "coefficients": list(self.coefficients),
            "r_squared": self.r_squared,
            "residual_error": self.residual_error,
        }


@dataclass
class ScalingReport:
    photon_counts: list[int]
    mean_iterations: list[float]
    std_iterations: list[float]
    fits: dict[str, ModelFit]

    def residual_ordering(self) -> list[str]:
        """Fitted models from smallest to largest ``1 - R^2``; underdetermined models are left out."""
        ok = [f for f in self.fits.values() if f.residual_error is not None]
        return [f.model for f in sorted(ok, key=lambda f: (f.residual_error, MODELS.index(f.model)))]

    def to_dict(self) -> dict:
        return {
            "photon_counts": self.photon_counts,
            "mean_iterations": self.mean_iterations,
            "std_iterations": self.std_iterations,
            "fits": {k: v.to_dict() for k, v in self.fits.items()},
            "residual_ordering": self.residual_ordering(),
        }

    def table(self) -> str:
        """Plain-text table in the layout model | parameters | 1 - R^2."""
        lines = [f"{'model':<18} {'1 - R^2':>12}  parameters"]
        for name, fit in self.fits.items():
            if fit.status != "ok":
                lines.append(f"{MODEL_FORMULAS[name]:<18} {'n/a':>12}  {fit.status}")
                continue
            params = ", ".join(f"{c:.6g}" for c in fit.coefficients)
            lines.append(f"{MODEL_FORMULAS[name]:<18} {fit.residual_error:12.3e}  {params}")
        lines.append("ordering: " + " < ".join(self.residual_ordering()))
        return "\n".join(lines)


def _n_params(model: str) -> int:
    # b and d of the exponential only enter as b*e^d
    return {"linear": 2, "quadratic": 3, "cubic": 4, "exponential": 3}[model]


def fit_exponential(x, y) -> ModelFit:
    """Least-squares ``a + b e^{cx + d}`` with the optimizer.

    ``b`` and ``d`` are not separately identifiable, so ``d`` is reported as
    zero. The search runs in centred and scaled variables and is seeded by a
    log-linear regression of ``y`` on ``x`` plus one start offset by
    ``min(y)``; the better of the two runs wins.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xc, xs = float(x.mean()), float(x.std()) or 1.0
    ys = float(np.max(np.abs(y))) or 1.0
    u = (x - xc) / xs
    ss_tot = float(np.sum((y - y.mean()) ** 2)) or 1.0

    pos = y > 0
    if pos.sum() >= 2 and np.ptp(u[pos]) > 0:
        slope, intercept = np.polyfit(u[pos], np.log(y[pos] / ys), 1)
    else:
        slope, intercept = 0.1, 0.0
    starts = [
        np.clip([0.0, math.exp(intercept), slope], -19.0, 19.0),
        np.clip([float(y.min()) / ys, 1.0 - float(y.min()) / ys, max(abs(slope), 0.1)], -19.0, 19.0),
    ]

    def loss(p):
        with np.errstate(over="ignore", invalid="ignore"):
            model = p[0] + p[1] * np.exp(p[2] * u)
            val = float(np.sum((y / ys - model) ** 2)) * ys * ys / ss_tot
        return val if math.isfinite(val) else 1e300

    best = None
    for x0 in starts:
        trace = minimize(OptimizationProblem(loss, x0, lower=-20.0, upper=20.0, budget=3000, target=1e-16))
        if best is None or trace.best_loss < best.best_loss:
            best = trace
    a, big_b, c_u = best.best_point
    c = c_u / xs
    b = big_b * ys * math.exp(-c_u * xc / xs)
    coeffs = (float(a * ys), float(b), float(c), 0.0)
    return ModelFit("exponential", coeffs, r_squared(y, coeffs[0] + coeffs[1] * np.exp(coeffs[2] * x)))


def fit_models(x, y, models: Sequence[str] = MODELS) -> dict[str, ModelFit]:
    """Fit every requested model to the points ``(x, y)``; models with more parameters than points are marked underdetermined."""
    fits = {}
    for model in models:
        if model not in MODELS:
            raise ValueError(f"unknown model {model!r}")
        if len(x) < _n_params(model):
            fits[model] = ModelFit(model, (), None, "underdetermined")
        elif model == "exponential":
            fits[model] = fit_exponential(x, y)
        else:
            res = polyfit(x, y, {"linear": 1, "quadratic": 2, "cubic": 3}[model])
            fits[model] = ModelFit(model, tuple(float(c) for c in res.coefficients), res.r_squared)
    return fits


def fit_scaling(records, models: Sequence[str] = MODELS) -> ScalingReport:
    """Fit mean iterations against ``n`` over converged records.

    ``records`` is a path or a sequence of :class:`ExperimentRecord`. The
    result does not depend on record order: values are sorted before the
    exactly rounded sums.
    """
    if isinstance(records, (str, os.PathLike)):
        records = read_records(records)
    by_n: dict[int, list[int]] = {}
    seen = set()
    for r in records:
        seen.add(r.n)
        if r.converged:
            by_n.setdefault(r.n, []).append(r.total_iterations)
    counts = sorted(by_n)
    if len(counts) < 2:
        missing = sorted(seen - set(counts))
        detail = f"; no converged records for n = {missing}" if missing else ""
        have = counts or "none"
        raise InsufficientDataError(f"need converged records for at least 2 distinct n, have n = {have}{detail}")
    means, stds = [], []
    for n in counts:
        vals = sorted(by_n[n])
        mean = math.fsum(vals) / len(vals)
        means.append(mean)
        stds.append(math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / len(vals)))
    return ScalingReport(counts, means, stds, fit_models(counts, means, models))


# ---------------------------------------------------------------------- CLI


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_n(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError(f"bad photon/qubit counts {text!r}")
    return sorted(set(out))


def _parse_shots(text: str) -> int | None:
    if text == "exact":
        return None
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("shots must be a positive integer or 'exact'")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="unsampling", description="Variational unsampling experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a seeded Monte Carlo campaign")
    run.add_argument("--protocol", required=True, choices=PROTOCOLS + ("optical",))
    run.add_argument("--n", required=True, type=_parse_n, help="counts like 3, 2-4 or 2,4")
    run.add_argument("--modes", type=int, help="optical mode count (default n^2)")
    run.add_argument("--trials", type=int, default=1)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", default="records.jsonl")
    run.add_argument("--threshold", type=float, default=1e-5)
    run.add_argument("--max-restarts", type=int, default=10)
    run.add_argument("--ansatz", choices=("reck-full", "diagonal"), default="reck-full")
    run.add_argument("--pipeline", choices=("direct", "compressed"))
    run.add_argument("--shots", type=_parse_shots, default=None, help="positive integer or 'exact'")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--allow-large", action="store_true", help="permit n > 4 (slow)")

    fit = sub.add_parser("fit", help="fit scaling models to a records file")
    fit.add_argument("records")
    fit.add_argument("--models", default=",".join(MODELS))
    fit.add_argument("--out", help="write the report as JSON")

    exp = sub.add_parser("export", help="export a records file as CSV or JSON")
    exp.add_argument("records")
    exp.add_argument("--format", choices=("csv", "json"), default="csv")
    exp.add_argument("--out", help="output file (default stdout)")

    ver = sub.add_parser("verify", help="run the acceptance suite")
    ver.add_argument("--only", type=_parse_n, help="criterion numbers to run, e.g. 1-5")
    return p


def _resolve_protocol(protocol: str, pipeline: str | None, n: int) -> str:
    if protocol == "optical":
        return "optical-" + (pipeline or ("direct" if n <= 2 else "compressed"))
    if pipeline is not None and protocol.startswith("optical") and protocol != f"optical-{pipeline}":
        raise ValueError(f"--pipeline {pipeline} contradicts --protocol {protocol}")
    return protocol


def _cmd_run(args) -> int:
    if args.trials < 1:
        raise ValueError("--trials must be >= 1")
    if max(args.n) > MAX_DEFAULT_N:
        if not args.allow_large:
            raise ValueError(f"n > {MAX_DEFAULT_N} needs --allow-large")
        warnings.warn(f"n = {max(args.n)} runs take a long time", RuntimeWarning, stacklevel=1)
    config = VquConfig(
        threshold=args.threshold,
        max_restarts=args.max_restarts,
        ansatz=args.ansatz,
        pipeline=args.pipeline,
        shots=args.shots,
    )
    total = converged = 0
    for n in args.n:
        protocol = _resolve_protocol(args.protocol, args.pipeline, n)
        for rec in run_campaign(protocol, [n], args.trials, args.seed, config, args.out, args.modes, args.workers):
            total += 1
            converged += rec.converged
            print(
                f"{rec.protocol} n={rec.n} trial={rec.trial} iterations={rec.total_iterations} "
                f"fidelity={rec.final_fidelity:.10f} converged={rec.converged}"
            )
    print(f"{converged}/{total} converged; records in {args.out}")
    return EXIT_OK


def _cmd_fit(args) -> int:
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    unknown = [m for m in models if m not in MODELS]
    if unknown:
        raise ValueError(f"unknown models {unknown}; choose from {MODELS}")
    report = fit_scaling(args.records, models)
    print(report.table())
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def _cmd_export(args) -> int:
    text = export(args.records, args.format, args.out)
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .acceptance import run_all

    results = run_all(args.only)
    return EXIT_OK if all(r.passed for r in results) else EXIT_NOT_CONVERGED


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "fit": _cmd_fit, "export": _cmd_export, "verify": _cmd_verify}[args.command]
    try:
        return handler(args)
    except (DataError, InsufficientDataError, CapacityError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
