"""Pipeline driver tests: config round-trips, exit codes, manifests, PNGs."""

import hashlib
import json
import os

import numpy as np
import pytest
from PIL import Image

from modescope.cli import (
    SceneConfig,
    _child_seed,
    config_from_dict,
    export_png,
    main,
    parse_config,
    preset_config,
    serialize_config,
)
from modescope.fieldgrid import ComplexGrid, conjugate_pitch


def small_config_doc(out_dir, side=4, cycles=3):
    """A 4x4 static two-scatterer scene cheap enough for pipeline tests."""
    pitch = conjugate_pitch(1550e-9, 10.0, side)
    return {
        "geometry": {"lambda_c": 1550e-9, "Z1": 10.0, "Z2": 10.0, "Zd": 10.0,
                     "D": 0.01, "alpha": 0.0, "beta": 0.0, "x_r": 0.0},
        "timing": {"T_p": 1 / 64.0, "N_s": cycles * side * side,
                   "f_IF": 16.0, "t_start": 0.0},
        "motion": {"v": 0.0, "theta": 0.0, "gamma": 0.0, "noise_sigma": 0.0},
        "patterns": {"coding": "hadamard", "side": side,
                     "samples_per_pattern": 1, "cycles": cycles},
        "target": {
            "type": "discrete", "rows": side, "cols": side, "pitch": pitch,
            "scatterers": [
                {"row": 1, "col": 2, "reflectivity_re": 1.0,
                 "reflectivity_im": 0.0, "components": [],
                 "alphaQ": 0.0, "betaQ": 0.0},
                {"row": 3, "col": 0, "reflectivity_re": 0.0,
                 "reflectivity_im": -0.5, "components": [],
                 "alphaQ": 0.0, "betaQ": 0.0},
            ],
        },
        "spectral": {"n_samples": 48, "window_len": 32, "hop": 16},
        "recon": [
            {"method": "static"},
            {"method": "type1", "N_t": 3, "t0": [0, 1], "kspace": True},
            {"method": "type2", "N_i": 3, "t0": 0, "mode_index": 0},
        ],
        "seed": 7,
        "out_dir": out_dir,
    }


def write_config(tmp_path, doc):
    path = os.path.join(tmp_path, "config.json")
    with open(path, "w") as fh:
        json.dump(doc, fh)
    return path


def read_manifest(out_dir):
    with open(os.path.join(out_dir, "manifest.json")) as fh:
        return json.load(fh)


def test_preset_configs_round_trip():
    for name in ("table2_discrete", "table3_plate_type1"):
        cfg = preset_config(name)
        assert parse_config(serialize_config(cfg)) == cfg


def test_small_config_round_trips(tmp_path):
    cfg = config_from_dict(small_config_doc(str(tmp_path)))
    assert parse_config(serialize_config(cfg)) == cfg


def test_unknown_preset_raises():
    with pytest.raises(ValueError):
        preset_config("no_such_scene")


def test_config_validation(tmp_path):
    good = small_config_doc(str(tmp_path))

    def variant(**edits):
        doc = json.loads(json.dumps(good))
        doc.update(edits)
        return doc

    with pytest.raises(ValueError):
        config_from_dict({k: v for k, v in good.items() if k != "seed"})
    with pytest.raises(ValueError):
        config_from_dict(variant(seed=-1))
    with pytest.raises(ValueError):
        config_from_dict(variant(patterns={"coding": "morse", "side": 4}))
    # side^2 must be a power of two for Hadamard coding
    with pytest.raises(ValueError):
        config_from_dict(variant(patterns={"coding": "hadamard", "side": 3}))
    # timing must fit inside the schedule
    bad = variant()
    bad["timing"]["N_s"] = 49
    with pytest.raises(ValueError):
        config_from_dict(bad)
    with pytest.raises(ValueError):
        config_from_dict(variant(recon=[{"method": "wavelet"}]))
    with pytest.raises(ValueError):
        config_from_dict(variant(recon=[{"method": "discrete"}]))
    with pytest.raises(ValueError):
        config_from_dict(variant(recon=[{"method": "discrete", "mode_index": 9}]))
    with pytest.raises(ValueError):
        config_from_dict(variant(recon=[{"method": "type1", "N_t": 3, "t0": -1}]))
    # t0 sweeps are a type1 feature
    with pytest.raises(ValueError):
        config_from_dict(variant(recon=[{"method": "type2", "N_i": 3, "t0": [0, 1]}]))
    with pytest.raises(ValueError):
        config_from_dict(variant(spectral={"n_samples": 16, "window_len": 32}))


def test_child_seeds_are_stable_and_distinct():
    assert _child_seed(7, 0) == _child_seed(7, 0)
    assert _child_seed(7, 0) != _child_seed(7, 1)
    assert _child_seed(7, 0) != _child_seed(8, 0)


def test_export_png_zero_grid_is_black(tmp_path):
    path = os.path.join(tmp_path, "zero.png")
    export_png(ComplexGrid.zeros(6, 6, 1e-3), "magnitude", path)
    img = np.asarray(Image.open(path))
    assert img.shape == (6, 6)
    assert img.dtype == np.uint8
    assert np.all(img == 0)


def test_export_png_phase_ramp_is_periodic(tmp_path):
    # one phase turn every 8 columns must render as a repeating gradient
    cols = np.arange(16) % 8
    data = np.exp(1j * 2.0 * np.pi * cols / 8.0)[None, :].repeat(4, axis=0)
    path = os.path.join(tmp_path, "ramp.png")
    export_png(ComplexGrid(4, 16, 1e-3, data), "phase", path)
    img = np.asarray(Image.open(path))
    assert np.array_equal(img[:, :8], img[:, 8:])
    assert len(np.unique(img[0])) == 8


def test_export_png_rejects_bad_input(tmp_path):
    grid = ComplexGrid.zeros(2, 2, 1e-3)
    with pytest.raises(ValueError):
        export_png(grid, "heatmap", os.path.join(tmp_path, "x.png"))
    bad = ComplexGrid(2, 2, 1e-3, np.array([[np.nan, 0], [0, 0]], complex))
    with pytest.raises(ValueError):
        export_png(bad, "magnitude", os.path.join(tmp_path, "y.png"))


def test_exit_codes_for_config_errors(tmp_path, capsys):
    assert main(["run"]) == 2
    assert main(["run", "--preset", "no_such_scene"]) == 2
    assert main(["run", "--config", os.path.join(tmp_path, "absent.json")]) == 2
    assert main(["run", "--preset", "table2_discrete", "--config", "x"]) == 2
    assert main(["run", "--preset", "table2_discrete", "--threads", "0"]) == 2
    bad = os.path.join(tmp_path, "bad.json")
    with open(bad, "w") as fh:
        fh.write("{not json")
    assert main(["run", "--config", bad]) == 2
    err = capsys.readouterr().err.strip().splitlines()[-1]
    doc = json.loads(err)
    assert doc["stage"] == "config"
    assert doc["exit_code"] == 2


def test_exit_code_for_missing_request_and_wrong_target(tmp_path):
    doc = small_config_doc(str(tmp_path / "out"))
    doc["recon"] = [{"method": "static"}]
    path = write_config(tmp_path, doc)
    assert main(["recon-type2", "--config", path]) == 2
    assert main(["plate-modes", "--config", path]) == 2


def test_exit_code_for_numeric_failure(tmp_path, capsys):
    # a type1 interval longer than the record leaves patterns unvisited
    doc = small_config_doc(str(tmp_path / "out"))
    doc["recon"] = [{"method": "type1", "N_t": 40, "t0": 0}]
    path = write_config(tmp_path, doc)
    assert main(["recon-type1", "--config", path]) == 3
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["stage"] == "recon_00_type1"
    assert err["parameter"] == "recon[0]"
    assert "unvisited" in err["error"]


def test_gen_patterns_writes_hashed_schedule(tmp_path):
    out = str(tmp_path / "out")
    path = write_config(tmp_path, small_config_doc(out))
    assert main(["gen-patterns", "--config", path]) == 0
    manifest = read_manifest(out)
    cgrds = [f for f in manifest["files"] if f.endswith(".cgrd")]
    assert len(cgrds) == 16
    name, digest = sorted(manifest["files"].items())[0]
    with open(os.path.join(out, name), "rb") as fh:
        assert hashlib.sha256(fh.read()).hexdigest() == digest


def test_simulate_determinism_and_seed_override(tmp_path):
    path = write_config(tmp_path, small_config_doc(str(tmp_path / "unused")))
    outs = [str(tmp_path / d) for d in ("a", "b", "c")]
    assert main(["simulate", "--config", path, "--out", outs[0]]) == 0
    assert main(["simulate", "--config", path, "--out", outs[1]]) == 0
    assert main(["simulate", "--config", path, "--out", outs[2],
                 "--seed", "99"]) == 0
    blobs = [open(os.path.join(o, "echo.cech"), "rb").read() for o in outs]
    assert blobs[0] == blobs[1]
    assert blobs[0] != blobs[2]


def test_run_manifest_is_complete_and_exact(tmp_path):
    out = str(tmp_path / "out")
    path = write_config(tmp_path, small_config_doc(out))
    assert main(["run", "--config", path, "--threads", "2"]) == 0
    manifest = read_manifest(out)

    for key in ("command", "config_sha256", "versions", "timings", "metrics",
                "files", "seed"):
        assert key in manifest
    assert manifest["command"] == "run"
    assert manifest["versions"]["numpy"] == np.__version__

    # every listed file exists with the stated hash, and nothing was
    # written that the manifest does not list
    on_disk = set()
    for root, _, names in os.walk(out):
        for name in names:
            on_disk.add(os.path.relpath(os.path.join(root, name), out))
    assert on_disk - set(manifest["files"]) == {"manifest.json"}
    for rel, digest in manifest["files"].items():
        with open(os.path.join(out, rel), "rb") as fh:
            assert hashlib.sha256(fh.read()).hexdigest() == digest

    # the scene is static, so the static image equals the snapshot
    assert manifest["metrics"]["recon_00_static"]["complex_correlation"] > 0.999999
    assert len(manifest["metrics"]["recon_01_type1"]["frames"]) == 2
    assert "residual_energy" in manifest["metrics"]["recon_02_type2"]
    assert os.path.exists(os.path.join(out, "recon_01_type1_stack.json"))


def test_rerun_artifacts_are_byte_identical(tmp_path):
    doc = small_config_doc("ignored")
    path = write_config(tmp_path, doc)
    outs = [str(tmp_path / d) for d in ("a", "b")]
    for o in outs:
        assert main(["run", "--config", path, "--out", o]) == 0
    ma, mb = read_manifest(outs[0]), read_manifest(outs[1])
    assert ma["files"] == mb["files"]
    for rel in ma["files"]:
        a = open(os.path.join(outs[0], rel), "rb").read()
        b = open(os.path.join(outs[1], rel), "rb").read()
        assert a == b, rel


def test_kspace_subcommand_writes_spectra_only(tmp_path):
    out = str(tmp_path / "out")
    path = write_config(tmp_path, small_config_doc(out))
    assert main(["kspace", "--config", path]) == 0
    manifest = read_manifest(out)
    kfiles = [f for f in manifest["files"] if "kspace" in f]
    assert len(kfiles) == 4  # two frames, each a cgrd plus a png
    assert not any("frame" in f and f.endswith(".cgrd") for f in manifest["files"])
    assert "kspace_argmax" in manifest["metrics"]["recon_01_type1"]


def test_spectrum_subcommand_csv_shape(tmp_path):
    out = str(tmp_path / "out")
    path = write_config(tmp_path, small_config_doc(out))
    assert main(["spectrum", "--config", path]) == 0
    with open(os.path.join(out, "spectrum.csv")) as fh:
        rows = fh.read().strip().splitlines()
    assert rows[0] == "time,frequency,magnitude"
    # 48 samples, window 32, hop 16 -> 2 frames of 17 one-sided bins
    assert len(rows) == 1 + 2 * 17
    t, f, m = rows[1].split(",")
    assert float(t) == 0.0 and float(f) == 0.0 and float(m) >= 0.0
    assert os.path.exists(os.path.join(out, "detected_modes.json"))


def test_plate_modes_outputs(tmp_path):
    cfg = preset_config("table3_plate_type1", out_dir=str(tmp_path / "out"))
    path = write_config(tmp_path, json.loads(serialize_config(cfg)))
    assert main(["plate-modes", "--config", path]) == 0
    out = str(tmp_path / "out")
    manifest = read_manifest(out)
    assert manifest["metrics"]["plate-modes"]["omega_11"] > 0
    with open(os.path.join(out, "eigenfrequencies.csv")) as fh:
        rows = fh.read().strip().splitlines()
    assert len(rows) == 1 + 16
    modes = [f for f in manifest["files"]
             if f.startswith("mode_") and f.endswith(".cgrd")]
    assert len(modes) == 3


def test_run_preset_table2_recovers_all_modes(tmp_path):
    out = str(tmp_path / "out")
    with pytest.warns(UserWarning):
        # off-bin harmonic lines trip the integer-period advisory
        assert main(["run", "--preset", "table2_discrete", "--out", out]) == 0
    manifest = read_manifest(out)
    tags = set()
    for idx in range(3):
        m = manifest["metrics"][f"recon_{idx:02d}_discrete"]
        assert m["support_f1"] == 1.0
        tags.add(m["mode_tag"])
    assert tags == {"10Hz", "5Hz", "15Hz"}
    detected = [d["f_mn"] for d in manifest["metrics"]["spectrum"]["modes"]]
    for f_v in (5.0, 10.0, 15.0):
        assert any(abs(f - f_v) < 0.1 for f in detected)
