import csv
import hashlib
import json
import math

import numpy as np
import pytest

from cpbsim.cli import main
from cpbsim.config import config_from_mapping


def _write_config(tmp_path, mapping, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(mapping), encoding="utf-8")
    return str(path)


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def _read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_unknown_config_key_exits_2(tmp_path, capsys):
    cfg = _write_config(tmp_path, {"bogus": 1})
    code = main(["spectrum", "--config", cfg, "--out", str(tmp_path / "o")])
    assert code == 2
    assert "bogus" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path):
    code = main(["spectrum", "--config", str(tmp_path / "nope.json")])
    assert code == 2


def test_bad_temperatures_flag_exits_2(tmp_path):
    code = main(["gibbs", "--temperatures", "ten", "--out", str(tmp_path / "o")])
    assert code == 2
    code = main(["gibbs", "--temperatures", "-5", "--out", str(tmp_path / "o")])
    assert code == 2


def test_spectrum_outputs_and_manifest(tmp_path):
    out = tmp_path / "levels"
    cfg = _write_config(tmp_path, {"spectrum_samples": 41})
    assert main(["spectrum", "--config", cfg, "--out", str(out)]) == 0
    rows = _read_csv(out / "spectrum.csv")
    assert len(rows) == 42
    assert rows[0][0] == "t_ns" and rows[0][1] == "e00" and rows[0][-1] == "e50"
    for row in rows[1:]:
        levels = [float(c) for c in row[1:]]
        assert levels[0] == 0.0
        assert all(b >= a for a, b in zip(levels, levels[1:]))

    manifest = _read_json(out / "manifest.json")
    assert manifest["tool"] == "cpbsim"
    digest = hashlib.sha256((out / "spectrum.csv").read_bytes()).hexdigest()
    assert manifest["outputs"]["spectrum.csv"] == digest
    # the resolved-config echo must round-trip through the parser unchanged
    echo = manifest["config"]
    assert config_from_mapping(echo).resolved() == echo


def test_run_forward_exact_outputs(tmp_path):
    out = tmp_path / "run"
    assert main(["run", "--dt", "1e-3", "--exact", "--out", str(out)]) == 0
    rows = _read_csv(out / "transition_matrix.csv")
    assert len(rows) == 52
    matrix = np.array([[float(c) for c in row[1:]] for row in rows[1:]])
    np.testing.assert_allclose(matrix.sum(axis=0), 1.0, atol=1e-10)
    np.testing.assert_allclose(matrix.sum(axis=1), 1.0, atol=1e-10)

    prep = _read_csv(out / "preparation.csv")
    assert prep[0] == ["label", "probability"]
    total = sum(float(r[1]) for r in prep[1:])
    assert total == pytest.approx(1.0, abs=1e-10)

    report = _read_json(out / "run_report.json")
    assert report["stochasticity_defect"] < 1e-12
    assert report["subspace"] == [-2, -1, 0, 1, 2]
    assert report["subspace_mass"] > 0.999
    assert not (out / "counts.csv").exists()


def test_run_sampled_counts(tmp_path):
    out = tmp_path / "runs"
    code = main(
        ["run", "--dt", "1e-3", "--sampled", "--events", "2000", "--seed", "9",
         "--out", str(out)]
    )
    assert code == 0
    rows = _read_csv(out / "counts.csv")
    counts = np.array([[int(c) for c in row[1:]] for row in rows[1:]])
    assert counts.sum() == 2000
    assert _read_json(out / "run_report.json")["events"] == 2000


def test_run_backward_skips_preparation(tmp_path):
    out = tmp_path / "bwd"
    cfg = _write_config(tmp_path, {"protocol": {"direction": "backward"}})
    assert main(["run", "--config", cfg, "--dt", "1e-3", "--out", str(out)]) == 0
    assert not (out / "preparation.csv").exists()
    doc = _read_json(out / "transition_matrix.json")
    assert doc["direction"] == "backward"


def test_microrev_passes_by_default(tmp_path):
    out = tmp_path / "mr"
    assert main(["microrev", "--dt", "1e-3", "--out", str(out)]) == 0
    doc = _read_json(out / "microrev.json")
    assert doc["passed"] is True
    assert doc["max_abs"] < 1e-3
    cells = _read_csv(out / "microrev_cells.csv")
    assert len(cells) == 26  # header + 5x5 subspace
    # cells carry 12 significant digits, so recomputation is only that good
    for row in cells[1:]:
        assert abs(float(row[2]) - float(row[3])) == pytest.approx(
            float(row[4]), abs=1e-11
        )


def test_microrev_flags_broken_reversal(tmp_path):
    out = tmp_path / "mrbad"
    code = main(["microrev", "--dt", "1e-3", "--no-flux-inversion", "--out", str(out)])
    assert code == 3
    doc = _read_json(out / "microrev.json")
    assert doc["passed"] is False
    assert doc["max_abs"] > 1e-2
    assert doc["invert_flux"] is False


def test_gibbs_exact_full_space(tmp_path):
    out = tmp_path / "gibbs"
    cfg = _write_config(tmp_path, {"subspace": "all", "temperatures_k": [10.0]})
    code = main(["gibbs", "--config", cfg, "--dt", "1e-3", "--exact", "--out", str(out)])
    assert code == 0
    report = _read_json(out / "bk_report.json")
    assert report["mode"] == "exact"
    assert len(report["ladder"]["labels"]) == 51
    assert abs(report["table"][0]["one_minus_mean"]) < 1e-9

    work = _read_csv(out / "work_forward_T10K.csv")
    assert work[0] == ["W_rad_per_ns", "probability"]
    total = math.fsum(float(r[1]) for r in work[1:])
    assert total == pytest.approx(1.0, abs=1e-9)

    ratio = _read_csv(out / "bk_ratio_T10K.csv")
    assert ratio[0][:3] == ["W_rad_per_ns", "log_ratio", "reference"]
    assert len(ratio) > 1


def test_gibbs_sampled_counts(tmp_path):
    out = tmp_path / "gibbs_s"
    code = main(
        ["gibbs", "--temperatures", "10", "--sampled", "--events", "5000",
         "--dt", "1e-3", "--seed", "7", "--out", str(out)]
    )
    assert code == 0
    work = _read_csv(out / "work_forward_T10K.csv")
    assert work[0] == ["W_rad_per_ns", "count"]
    counts = [int(r[1]) for r in work[1:]]
    row = _read_json(out / "bk_report.json")["table"][0]
    assert sum(counts) == row["n_events"]
    assert row["n_events"] + row["n_discarded"] == 5000


def test_payloads_are_byte_deterministic(tmp_path):
    cfg = _write_config(tmp_path, {"temperatures_k": [10.0]})
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code = main(["gibbs", "--config", cfg, "--dt", "1e-3", "--exact",
                     "--out", str(out)])
        assert code == 0
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    assert names == sorted(p.name for p in outs[1].iterdir())
    for name in names:
        if name == "manifest.json":
            continue
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    # manifests agree except for the timestamp and the differing --out echo
    docs = [_read_json(out / "manifest.json") for out in outs]
    for doc in docs:
        doc.pop("timestamp_utc")
        doc["config"].pop("output_dir")
    assert docs[0] == docs[1]


def test_waveform_table_protocol(tmp_path):
    table = tmp_path / "wave.csv"
    times = np.linspace(0.0, 2.0 / 3.0, 201)
    with open(table, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_ns", "flux_phi0", "n_g"])
        for t in times:
            writer.writerow(
                [f"{t:.12g}",
                 f"{0.5 * math.cos(3.0 * math.pi * t):.12g}",
                 f"{0.05 - 2.0 * math.cos(3.0 * math.pi * t):.12g}"]
            )
    cfg = _write_config(
        tmp_path,
        {"protocol": {"family": "table", "table_path": str(table)},
         "spectrum_samples": 11},
    )
    out = tmp_path / "tab"
    assert main(["spectrum", "--config", cfg, "--out", str(out)]) == 0
    rows = _read_csv(out / "spectrum.csv")
    assert len(rows) == 12
    assert float(rows[-1][0]) == pytest.approx(2.0 / 3.0)


def test_waveform_table_rejects_duration(tmp_path):
    table = tmp_path / "wave.csv"
    table.write_text("t_ns,flux_phi0,n_g\n0,0.5,-1.95\n0.5,0.5,-1.95\n")
    cfg = _write_config(
        tmp_path,
        {"protocol": {"family": "table", "table_path": str(table), "duration": 1.0}},
    )
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_seed_changes_sampled_output(tmp_path):
    blobs = []
    for seed in ("5", "6"):
        out = tmp_path / f"s{seed}"
        code = main(["run", "--dt", "1e-3", "--sampled", "--events", "1000",
                     "--seed", seed, "--out", str(out)])
        assert code == 0
        blobs.append((out / "counts.csv").read_bytes())
    assert blobs[0] != blobs[1]
