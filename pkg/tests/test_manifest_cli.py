"""Unit tests for manifests and the command-line interface."""

import json
from fractions import Fraction
from types import SimpleNamespace

import pytest

from stabreg.cli import (
    EXIT_DOMAIN,
    EXIT_OK,
    EXIT_STRICT,
    _finish,
    main,
    parse_beta,
)
from stabreg.manifest import (
    SCHEMA_VERSION,
    ExperimentManifest,
    ManifestSchemaError,
    load_manifest,
    result_entry,
)


def _manifest(results=()):
    return ExperimentManifest(
        experiment_id="t",
        tool_version="0.0",
        started="2026-01-01T00:00:00+00:00",
        finished="2026-01-01T00:00:01+00:00",
        config={"seed": 1},
        results=list(results),
    )


def test_result_entry_verdict_validation():
    entry = result_entry("x", 1.0, [0.9, 1.1], 1.0, "pass")
    assert entry["name"] == "x" and entry["verdict"] == "pass"
    with pytest.raises(ValueError):
        result_entry("x", 1.0, None, None, "maybe")


def test_manifest_round_trip_byte_exact(tmp_path):
    m = _manifest([result_entry("a", 0.5, None, 0.5, "pass")])
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    m.save(p1)
    loaded = load_manifest(p1)
    loaded.save(p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert loaded.verdicts == ["pass"]
    assert loaded.schema_version == SCHEMA_VERSION


def test_manifest_rejects_unknown_and_missing_fields(tmp_path):
    m = _manifest()
    raw = json.loads(m.to_json())
    raw["surprise"] = 1
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(raw))
    with pytest.raises(ManifestSchemaError):
        load_manifest(p)
    del raw["surprise"], raw["config"]
    p.write_text(json.dumps(raw))
    with pytest.raises(ManifestSchemaError):
        load_manifest(p)


def test_manifest_rejects_bad_version_and_verdict(tmp_path):
    raw = json.loads(_manifest().to_json())
    raw["schema_version"] = 99
    p = tmp_path / "v.json"
    p.write_text(json.dumps(raw))
    with pytest.raises(ManifestSchemaError):
        load_manifest(p)
    raw["schema_version"] = SCHEMA_VERSION
    raw["results"] = [{"name": "x", "verdict": "maybe"}]
    p.write_text(json.dumps(raw))
    with pytest.raises(ManifestSchemaError):
        load_manifest(p)


def test_parse_beta():
    assert parse_beta("0.25") == 0.25
    assert parse_beta("1/2") == Fraction(1, 2)
    assert isinstance(parse_beta("1/3"), Fraction)
    with pytest.raises(ValueError):
        parse_beta("one half")


def test_finish_exit_codes(tmp_path, capsys):
    m = _manifest([result_entry("a", 0.0, None, 1.0, "fail")])
    args = SimpleNamespace(strict=False)
    assert _finish(args, m, tmp_path) == EXIT_OK
    args.strict = True
    assert _finish(args, m, tmp_path) == EXIT_STRICT
    m2 = _manifest([result_entry("a", 1.0, None, 1.0, "pass")])
    assert _finish(args, m2, tmp_path) == EXIT_OK
    assert (tmp_path / "manifest.json").exists()
    capsys.readouterr()


def test_cli_theory(capsys):
    code = main(["theory", "--alpha", "1", "--beta", "0.25", "--p", "2"])
    assert code == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["regime"] == "sub-critical"
    assert out["shape_D"] == pytest.approx(0.5)
    assert out["candidate_ei_bracket"][0] < out["vartheta"] < out["candidate_ei_bracket"][1]
    # exact ratio input lands exactly on the critical line
    code = main(["theory", "--alpha", "1", "--beta", "1/2", "--p", "2"])
    assert code == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["regime"] == "critical" and out["theta"] == 0.0


def test_cli_bad_usage_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["theory", "--alpha", "1", "--beta", "0.25"])  # missing --p
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_cli_domain_error_exits_3(capsys):
    # alpha outside (0, 2) is a model-domain error, not a usage error
    code = main(["theory", "--alpha", "3", "--beta", "0.25", "--p", "2"])
    assert code == EXIT_DOMAIN
    # too few replicates for the tail-process conditioning
    code = main(
        [
            "tailproc",
            "--alpha", "1", "--beta", "0.25", "--p", "2",
            "--window", "50", "--replicates", "60", "--seed", "1",
        ]
    )
    assert code == EXIT_DOMAIN
    capsys.readouterr()


def test_cli_simulate_writes_outputs(tmp_path, capsys):
    code = main(
        [
            "simulate",
            "--alpha", "1", "--beta", "0.25", "--p", "2",
            "--window", "20", "--replicates", "2", "--seed", "3",
            "--out", str(tmp_path),
        ]
    )
    assert code == EXIT_OK
    outdir = tmp_path / "simulate-seed3"
    assert (outdir / "paths.csv").exists()
    assert (outdir / "paths.csv.manifest.json").exists()
    manifest = load_manifest(outdir / "manifest.json")
    assert manifest.config["seed"] == 3
    assert manifest.config["rng_derivation"] == "pcg64-seedseq-v1"
    capsys.readouterr()


def test_cli_output_dir_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("STABREG_OUT", str(tmp_path))
    code = main(
        [
            "simulate",
            "--alpha", "1", "--beta", "0.25", "--p", "2",
            "--window", "10", "--replicates", "1", "--seed", "4",
        ]
    )
    assert code == EXIT_OK
    assert (tmp_path / "simulate-seed4" / "paths.csv").exists()
    capsys.readouterr()


def test_cli_simulate_deterministic(tmp_path, capsys):
    argv = [
        "simulate",
        "--alpha", "1", "--beta", "0.25", "--p", "2",
        "--window", "15", "--replicates", "2", "--seed", "8",
    ]
    assert main(argv + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(argv + ["--out", str(tmp_path / "b")]) == EXIT_OK
    a = (tmp_path / "a" / "simulate-seed8" / "paths.csv").read_bytes()
    b = (tmp_path / "b" / "simulate-seed8" / "paths.csv").read_bytes()
    assert a == b
    capsys.readouterr()


def test_cli_selftest(capsys):
    assert main(["selftest"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out
