import csv
import io
import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from unsampling.cli import (
    CSV_COLUMNS,
    DataError,
    ExperimentRecord,
    derive_seed,
    export,
    fit_models,
    fit_scaling,
    main,
    parse_records,
    read_records,
    records_to_csv,
    run_campaign,
)
from unsampling.linalg import InsufficientDataError
from unsampling.protocols import VquConfig


def record(n, iterations, trial=0, converged=True, fidelity=0.9999987654321, protocol="optical-compressed"):
    return ExperimentRecord(
        protocol=protocol,
        n=n,
        m=n * n,
        trial=trial,
        seed=derive_seed(0, protocol, n, trial),
        total_iterations=iterations,
        restarts_used=1,
        final_fidelity=fidelity,
        converged=converged,
        wall_time_seconds=0.125,
        layers=[{"label": "a", "iterations": iterations, "final_loss": 1.2345678901234567e-06}],
    )


def write(path, records):
    path.write_text("".join(r.to_json() + "\n" for r in records))
    return path


def test_seed_derivation_is_stable():
    assert derive_seed(0, "qubit-vqu", 2, 0) == derive_seed(0, "qubit-vqu", 2, 0)
    assert derive_seed(0, "qubit-vqu", 2, 0) != derive_seed(0, "qubit-vqu", 2, 1)
    assert derive_seed(0, "qubit-vqu", 2, 0) != derive_seed(1, "qubit-vqu", 2, 0)
    assert 0 <= derive_seed(5, "optical-direct", 3, 9) < 2**64


def test_single_qubit_trial(tmp_path):
    out = tmp_path / "r.jsonl"
    records = list(run_campaign("qubit-vqu", [2], 1, 7, VquConfig(), out))
    assert len(records) == 1 and records[0].converged
    assert records[0].m is None
    assert json.loads(out.read_text())["schema_version"] == 1


def test_rerun_is_identical_except_timing(tmp_path):
    a = list(run_campaign("qubit-vqu", [2], 3, 1, VquConfig(), tmp_path / "a.jsonl"))
    b = list(run_campaign("qubit-vqu", [2], 3, 1, VquConfig(), tmp_path / "b.jsonl"))
    assert [r.replay_key() for r in a] == [r.replay_key() for r in b]

    def strip(path):
        return [{k: v for k, v in json.loads(line).items() if k != "wall_time_seconds"} for line in path.read_text().splitlines()]

    assert strip(tmp_path / "a.jsonl") == strip(tmp_path / "b.jsonl")


def test_record_count(tmp_path):
    recs = list(run_campaign("optical-compressed", [2, 3], 2, 0, VquConfig(), tmp_path / "c.jsonl"))
    assert len(recs) == 4
    assert [(r.n, r.trial) for r in recs] == [(2, 0), (2, 1), (3, 0), (3, 1)]
    assert all(r.m == r.n**2 for r in recs)


def test_resume_matches_uninterrupted(tmp_path):
    full = list(run_campaign("qubit-vqu", [1, 2], 3, 4, VquConfig(), tmp_path / "full.jsonl"))
    part = tmp_path / "part.jsonl"
    gen = run_campaign("qubit-vqu", [1, 2], 3, 4, VquConfig(), part)
    list(itertools.islice(gen, 4))
    gen.close()
    assert len(part.read_text().splitlines()) == 4
    # a crash mid-write leaves a torn line behind
    with open(part, "a") as fh:
        fh.write('{"schema_version": 1, "prot')
    resumed = list(run_campaign("qubit-vqu", [1, 2], 3, 4, VquConfig(), part))
    assert [r.replay_key() for r in resumed] == [r.replay_key() for r in full]
    assert [r.replay_key() for r in read_records(part)] == [r.replay_key() for r in full]


def test_resume_refuses_other_seed(tmp_path):
    out = tmp_path / "r.jsonl"
    list(run_campaign("qubit-vqu", [1], 1, 0, VquConfig(), out))
    with pytest.raises(DataError, match="different base seed"):
        list(run_campaign("qubit-vqu", [1], 1, 99, VquConfig(), out))


def test_campaign_errors(tmp_path):
    with pytest.raises(ValueError):
        list(run_campaign("qubit-vqu", [2], 0, 0))
    with pytest.raises(ValueError):
        list(run_campaign("nope", [2], 1, 0))
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        list(run_campaign("qubit-vqu", [1], 1, 0, out=blocker / "r.jsonl"))


def test_export_empty_is_header_only(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    assert export(path, "csv").splitlines() == [",".join(CSV_COLUMNS)]
    assert json.loads(export(path, "json")) == []


def test_export_three_records(tmp_path):
    path = write(tmp_path / "r.jsonl", [record(2, 10), record(3, 20), record(4, 40)])
    text = export(path, "csv", tmp_path / "out.csv")
    assert len(text.splitlines()) == 4
    assert (tmp_path / "out.csv").read_text() == text


@given(
    st.floats(0, 1, allow_nan=False),
    st.floats(0, 1e6, allow_nan=False),
    st.integers(0, 2**64 - 1),
    st.floats(1e-300, 1, allow_nan=False),
)
def test_csv_round_trip_is_exact(fidelity, wall, seed, loss):
    r = record(3, 1234, fidelity=fidelity)
    r.wall_time_seconds = wall
    r.seed = seed
    r.layers = [{"label": "x", "iterations": 5, "final_loss": loss}]
    row = next(csv.DictReader(io.StringIO(records_to_csv([r]))))
    assert float(row["final_fidelity"]) == fidelity
    assert float(row["wall_time_seconds"]) == wall
    assert int(row["seed"]) == seed
    assert float(row["layer_final_losses"]) == loss
    assert int(row["total_iterations"]) == 1234


def test_json_export_round_trip(tmp_path):
    recs = [record(2, 10), record(3, 17, converged=False, fidelity=0.1 + 0.2)]
    path = write(tmp_path / "r.jsonl", recs)
    back = [ExperimentRecord.from_dict(d) for d in json.loads(export(path, "json"))]
    assert [r.to_dict() for r in back] == [r.to_dict() for r in recs]


def test_malformed_line_cites_line_number(tmp_path):
    good = record(2, 10).to_json()
    with pytest.raises(DataError, match="line 2"):
        parse_records(good + "\n{not json\n")
    with pytest.raises(DataError, match="line 1.*schema_version"):
        parse_records(json.dumps({"protocol": "qubit-vqu"}))
    with pytest.raises(DataError, match="line 3"):
        parse_records(good + "\n\n" + json.dumps({"schema_version": 1, "protocol": "qubit-vqu"}))


def test_fit_exact_cubic():
    recs = [record(n, int(5 + 2 * n + 3 * n**3)) for n in range(2, 7)]
    report = fit_scaling(recs)
    assert report.fits["cubic"].residual_error < 1e-10
    assert report.fits["linear"].residual_error > 1e3 * max(report.fits["cubic"].residual_error, 1e-16)
    assert report.residual_ordering()[0] in ("cubic", "quadratic")
    assert "a+bx+cx^2+dx^3" in report.table()


def test_fit_uses_converged_means():
    recs = [record(2, 10), record(2, 30), record(2, 999, converged=False), record(3, 50), record(4, 90)]
    report = fit_scaling(recs)
    assert report.photon_counts == [2, 3, 4]
    assert report.mean_iterations == [20, 50, 90]
    assert report.std_iterations[0] == 10
    assert report.fits["cubic"].status == "underdetermined"
    assert report.fits["cubic"].residual_error is None


def test_fit_insufficient_data():
    with pytest.raises(InsufficientDataError, match="2"):
        fit_scaling([record(2, 10), record(2, 12)])
    with pytest.raises(InsufficientDataError, match=r"n = \[3\]"):
        fit_scaling([record(2, 10), record(3, 12, converged=False)])


def test_exponential_fit_recovers_model():
    x = np.arange(2, 8, dtype=float)
    y = 40 + 3 * np.exp(0.9 * x - 0.5)
    fit = fit_models(list(x), list(y), ["exponential"])["exponential"]
    a, b, c, d = fit.coefficients
    assert fit.residual_error < 1e-8
    assert c == pytest.approx(0.9, rel=1e-3)
    assert b * np.exp(d) == pytest.approx(3 * np.exp(-0.5), rel=1e-2)


@given(st.permutations(list(range(9))))
def test_fit_is_order_invariant(order):
    base = [record(n, it, trial=t) for t, (n, it) in enumerate([(2, 11), (2, 13), (3, 40), (3, 47), (4, 101), (4, 99), (5, 230), (5, 250), (6, 420)])]
    a = fit_scaling(base).to_dict()
    b = fit_scaling([base[i] for i in order]).to_dict()
    assert a == b


# ---- command line


def test_cli_run_export_fit(tmp_path, capsys):
    out = tmp_path / "r.jsonl"
    assert main(["run", "--protocol", "qubit-vqu", "--n", "1-2", "--trials", "2", "--seed", "3", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 4
    csv_path = tmp_path / "r.csv"
    assert main(["export", str(out), "--format", "csv", "--out", str(csv_path)]) == 0
    assert len(csv_path.read_text().splitlines()) == 5
    assert main(["fit", str(out), "--models", "linear", "--out", str(tmp_path / "fit.json")]) == 0
    assert json.loads((tmp_path / "fit.json").read_text())["photon_counts"] == [1, 2]
    assert "converged" in capsys.readouterr().out


def test_cli_optical_pipeline_resolution(tmp_path):
    out = tmp_path / "r.jsonl"
    args = ["run", "--protocol", "optical", "--n", "2", "--pipeline", "direct", "--shots", "exact", "--out", str(out)]
    assert main(args) == 0
    assert read_records(out)[0].protocol == "optical-direct"


def test_cli_exit_codes(tmp_path):
    assert main(["run", "--protocol", "qubit-vqu", "--n", "5", "--out", str(tmp_path / "x")]) == 1
    assert main(["run", "--protocol", "optical-direct", "--pipeline", "compressed", "--n", "2", "--out", str(tmp_path / "x")]) == 1
    with pytest.raises(SystemExit) as info:
        main(["run", "--protocol", "qubit-vqu"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["run", "--protocol", "qubit-vqu", "--n", "2", "--shots", "0"])
    assert info.value.code == 1
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{oops\n")
    assert main(["export", str(bad)]) == 2
    assert main(["fit", str(tmp_path / "missing.jsonl")]) == 2
    single = write(tmp_path / "one.jsonl", [record(2, 10)])
    assert main(["fit", str(single)]) == 2
    assert main(["fit", str(single), "--models", "quartic"]) == 1


def test_cli_verify_exit_codes():
    assert main(["verify", "--only", "5"]) == 0
    assert main(["verify", "--only", "4"]) == 3
