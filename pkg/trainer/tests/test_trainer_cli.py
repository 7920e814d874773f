"""The srnz-train command line, including registration through srnz."""
import json

import numpy as np
import pytest

from helpers_trainer import run_srnz, write_sidecar

from srnz_trainer import read_bundle
from srnz_trainer.cli import main


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli-fields")
    r = np.random.Generator(np.random.PCG64(50))
    x = np.linspace(0.0, 2.0, 48)
    base = np.sin(3 * x)[:, None] * np.cos(x)[None, :]
    for k in range(2):
        write_sidecar(d, f"field-{k}", base + 0.05 * r.random((48, 48)), precision="f64")
    return d


@pytest.fixture(scope="module")
def trained(data_dir, tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("cli-out")
    bundle = out_dir / "tiny.srnb"
    report = out_dir / "tiny.json"
    code = main(
        [
            "train",
            "--data",
            str(data_dir),
            "--out",
            str(bundle),
            "--tier",
            "none",
            "--iterations",
            "10",
            "--crop",
            "16",
            "--batch",
            "4",
            "--seed",
            "1",
            "--report",
            str(report),
        ]
    )
    assert code == 0
    return bundle, report


class TestTrain:
    def test_writes_bundle_and_report(self, trained, capsys):
        bundle, report = trained
        tier, graph, tensors = read_bundle(bundle)
        assert tier == "none" and len(tensors) == 36
        doc = json.loads(report.read_text())
        assert doc["tier"] == "none" and doc["iterations"] == 10
        assert doc["hash"] == bundle.read_bytes()[-32:].hex()

    def test_stdout_reports_hash_and_losses(self, data_dir, tmp_path, capsys):
        out = tmp_path / "b.srnb"
        code = main(
            ["train", "--data", str(data_dir), "--out", str(out), "--tier", "none",
             "--iterations", "3", "--crop", "16", "--batch", "2", "--log-every", "1"]
        )
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert sum(1 for ln in lines if ln.startswith("iter ")) == 3
        assert f"{out}: none tier, 3 iterations, hash " in lines[-2]
        assert lines[-1].startswith("L1 first/last: ")

    def test_missing_data_dir(self, tmp_path, capsys):
        code = main(
            ["train", "--data", str(tmp_path / "nope"), "--out", str(tmp_path / "b.srnb")]
        )
        assert code == 2
        assert "no field sidecars" in capsys.readouterr().err

    def test_bad_crop(self, data_dir, tmp_path, capsys):
        code = main(
            ["train", "--data", str(data_dir), "--out", str(tmp_path / "b.srnb"),
             "--crop", "17"]
        )
        assert code == 2
        assert "even and >= 8" in capsys.readouterr().err


class TestInspectReexport:
    def test_inspect(self, trained, capsys):
        bundle, _ = trained
        assert main(["inspect", str(bundle)]) == 0
        out = capsys.readouterr().out
        assert "tier: none" in out
        assert "conv2d" in out and "pixel_shuffle" in out
        assert "tensors: 36 (" in out

    def test_inspect_missing_file(self, tmp_path, capsys):
        assert main(["inspect", str(tmp_path / "nope.srnb")]) == 2

    def test_inspect_corrupt(self, tmp_path, capsys):
        bad = tmp_path / "bad.srnb"
        bad.write_bytes(b"SRNB" + b"\x00" * 60)
        assert main(["inspect", str(bad)]) == 3
        assert "error:" in capsys.readouterr().err

    def test_reexport_byte_identical(self, trained, tmp_path, capsys):
        bundle, _ = trained
        out = tmp_path / "again.srnb"
        assert main(["reexport", str(bundle), "--out", str(out)]) == 0
        assert out.read_bytes() == bundle.read_bytes()


class TestRegister:
    def test_register_then_verify(self, trained, tmp_path, capsys):
        bundle, _ = trained
        registry = tmp_path / "models"
        code = main(["register", str(bundle), "-r", str(registry), "--domain", "synth"])
        out = capsys.readouterr().out
        assert code == 0
        assert f"added synth/none: {bundle.read_bytes()[-32:].hex()}" in out
        code, out, _ = run_srnz("models", "-r", registry, "verify")
        assert code == 0 and "1 model(s) verified" in out

    def test_register_missing_bundle(self, tmp_path, capsys):
        code = main(["register", str(tmp_path / "nope.srnb"), "-r", str(tmp_path / "m")])
        assert code == 2
        assert "error:" in capsys.readouterr().err
