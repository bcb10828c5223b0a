import dataclasses
import json
from pathlib import Path

import pytest
from mpmath import mp

from znkz.algebra import OrderedPartition
from znkz.cli import main
from znkz.kz import solve_integral
from znkz.verify import REGISTRY, mutate


def _curve(tmp_path, data, name="curve.json"):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(path)


def _run(capsys, *argv):
    code = main(["--quiet", *argv])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


N2M2 = {"N": 2, "m": 2, "lambdas": ["0", "1", "2", "3"], "precision_bits": 128}


def test_dim_count(capsys):
    code, report = _run(capsys, "dim-count", "--N", "3", "--m", "2")
    assert code == 0
    assert (report["mult"], report["I"], report["ratio"]) == (5, 4, "5/4")
    assert report["command"] == "dim-count"


def test_dim_count_needs_both_sizes(capsys):
    code, _ = _run(capsys, "dim-count", "--N", "3")
    assert code == 2


def test_genus(tmp_path, capsys):
    code, report = _run(capsys, "genus", _curve(tmp_path, N2M2))
    assert code == 0
    assert (report["genus"], report["L"], report["partitions"]) == (1, 1, 6)


def test_report_hash_is_stable(tmp_path, capsys):
    path = _curve(tmp_path, N2M2)
    _, first = _run(capsys, "genus", path)
    _, second = _run(capsys, "genus", path)
    assert first == second
    _, other = _run(capsys, "genus", path, "--seed", "3")
    assert other["input_hash"] != first["input_hash"]


def test_output_file(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["--quiet", "genus", _curve(tmp_path, N2M2), "--output", str(out)]) == 0
    assert json.loads(out.read_text())["genus"] == 1


@pytest.mark.parametrize("data", [
    "{not json",
    {"N": 2, "m": 2, "lambdas": ["0", "1", "2"]},
    {"N": 2, "m": 2, "lambdas": ["0", "1", "1", "3"]},
    {"N": 2, "m": 2, "lambdas": ["0", "1", "2", "3"], "extra": 1},
    {"N": 2, "m": 2, "lambdas": [["0", "1", "2"], "1", "2", "3"]},
])
def test_bad_curve_files_exit_with_input_error(tmp_path, capsys, data):
    code, _ = _run(capsys, "genus", _curve(tmp_path, data))
    assert code == 2


def test_missing_curve_file(tmp_path, capsys):
    code, _ = _run(capsys, "genus", str(tmp_path / "absent.json"))
    assert code == 2


def test_check_identities_pass(capsys):
    code, report = _run(capsys, "check-identities", "--id", "qsum_neg", "--id", "qsum_pos",
                        "--N", "3", "--m", "1", "--trials", "2")
    assert code == 0
    assert report["pass"] is True
    assert {r["id"] for r in report["results"]} == {"qsum_neg", "qsum_pos"}


def test_check_identities_failure_exit_code(capsys, monkeypatch):
    spec = REGISTRY["qsum_neg"]
    broken = dataclasses.replace(spec, builder=lambda ix, params: mutate(spec.builder(ix, params)))
    monkeypatch.setitem(REGISTRY, "qsum_neg", broken)
    code, report = _run(capsys, "check-identities", "--id", "qsum_neg", "--N", "3", "--m", "1", "--trials", "2")
    assert code == 1
    assert report["pass"] is False
    assert "witness" in report["results"][0]


def test_check_identities_needs_both_sizes(capsys):
    code, _ = _run(capsys, "check-identities", "--m", "2")
    assert code == 2


@pytest.mark.slow
def test_check_singlet(tmp_path, capsys):
    code, report = _run(capsys, "--workers", "2", "check-singlet", _curve(tmp_path, N2M2))
    assert code == 0
    assert report["pass"] is True


FIXTURES = Path(__file__).resolve().parent.parent / "data" / "fixtures"
FIXTURE_CONTEXTS = {"n2_m2": "context_n2m2", "n3_m1": "context_n3m1"}


def _complex(pair):
    return mp.mpc(mp.mpf(pair[0]), mp.mpf(pair[1]))


def _assert_matches_stored(directory, name, context):
    periods_report = json.loads((directory / f"{name}_periods.json").read_text())
    solve_report = json.loads((directory / f"{name}_solve.json").read_text())
    spec = context.spec
    assert periods_report["curve"] == spec.to_json()
    assert periods_report["provenance"]["precision_bits"] == spec.precision_bits
    with mp.workprec(spec.precision_bits):
        floor = mp.mpf(2) ** -(spec.precision_bits - 8)
        err = max(mp.mpf(periods_report["err"]), floor)
        tau = context.periods.tau
        for i, row in enumerate(periods_report["tau"]):
            for j, pair in enumerate(row):
                assert abs(_complex(pair) - tau[i, j]) <= err
        sol = solve_integral(spec, context.periods, workers=2)
        stored = {OrderedPartition(tuple(tuple(b) for b in e["partition"])): _complex(e["value"])
                  for e in solve_report["solutions"]}
        assert set(stored) == set(sol.entries)
        for key, value in sol.entries.items():
            assert abs(stored[key] - value) <= err * abs(value)


@pytest.mark.slow
def test_regenerated_fixtures_match_recomputation(tmp_path, request):
    assert main(["--quiet", "--workers", "2", "--fixtures", str(tmp_path)]) == 0
    for name, fixture in FIXTURE_CONTEXTS.items():
        _assert_matches_stored(tmp_path, name, request.getfixturevalue(fixture))


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(FIXTURE_CONTEXTS))
def test_committed_fixtures_match_recomputation(name, request):
    if not (FIXTURES / f"{name}_solve.json").exists():
        pytest.skip(f"no stored {name} fixture; run python -m znkz --fixtures data/fixtures")
    _assert_matches_stored(FIXTURES, name, request.getfixturevalue(FIXTURE_CONTEXTS[name]))
