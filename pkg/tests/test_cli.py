"""Command-line interface, exercised in process through cli.main."""

import numpy as np
import pytest

from ferpipe import cli, pipeline, synth
from ferpipe import facedetect as fd
from ferpipe.bundle import load_bundle
from ferpipe.config import PipelineConfig, save_config
from ferpipe.imgio import write_pgm


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    """Small on-disk synthetic dataset written through the CLI itself."""
    root = tmp_path_factory.mktemp("data")
    assert cli.main(["synth", "--out", str(root), "--per-class", "4"]) == 0
    return root


@pytest.fixture(scope="module")
def fast_config_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "fast.json"
    save_config(PipelineConfig(feature="lbp", embed_dim=12, classifier="mean"), path)
    return path


@pytest.fixture(scope="module")
def trained_bundle_path(tmp_path_factory, data_dir, fast_config_path):
    out = tmp_path_factory.mktemp("model") / "model.ferb"
    code = cli.main(["train", "--root", str(data_dir),
                     "--manifest", str(data_dir / "manifest.csv"),
                     "--config", str(fast_config_path), "--out", str(out)])
    assert code == 0
    return out


class TestSynth:
    def test_writes_images_and_manifest(self, data_dir):
        assert (data_dir / "manifest.csv").exists()
        assert len(list(data_dir.glob("*.pgm"))) == 28

    def test_deterministic_bytes(self, data_dir, tmp_path):
        again = tmp_path / "again"
        assert cli.main(["synth", "--out", str(again), "--per-class", "4"]) == 0
        name = "happy_00.pgm"
        assert (again / name).read_bytes() == (data_dir / name).read_bytes()
        assert (again / "manifest.csv").read_bytes() == (data_dir / "manifest.csv").read_bytes()

    def test_out_is_required(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["synth"])
        assert exc.value.code == 2


class TestIngest:
    def test_reports_counts(self, data_dir, capsys):
        code = cli.main(["ingest", "--root", str(data_dir),
                         "--manifest", str(data_dir / "manifest.csv")])
        out = capsys.readouterr().out
        assert code == 0
        assert "ingested 28 images across 7 classes" in out

    def test_missing_manifest_exits_3(self, data_dir, capsys):
        code = cli.main(["ingest", "--root", str(data_dir),
                         "--manifest", str(data_dir / "absent.csv")])
        assert code == 3
        assert capsys.readouterr().err.startswith("error:")

    def test_row_with_missing_file_exits_3(self, data_dir, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        text = (data_dir / "manifest.csv").read_text(encoding="utf-8")
        bad.write_text(text.replace("happy_00.pgm", "gone.pgm"), encoding="utf-8")
        code = cli.main(["ingest", "--root", str(data_dir), "--manifest", str(bad)])
        assert code == 3
        assert "gone.pgm" in capsys.readouterr().err


class TestTrain:
    def test_reports_timings_and_checksum(self, data_dir, fast_config_path,
                                          tmp_path, capsys):
        out = tmp_path / "m.ferb"
        code = cli.main(["train", "--root", str(data_dir),
                         "--manifest", str(data_dir / "manifest.csv"),
                         "--config", str(fast_config_path), "--out", str(out)])
        stdout = capsys.readouterr().out
        assert code == 0
        for stage in ("preprocess", "normalize", "extract", "sdle_fit", "prototypes"):
            assert stage in stdout
        assert f"bundle {out} checksum " in stdout
        assert out.exists()

    def test_seed_flag_overrides_config(self, data_dir, fast_config_path, tmp_path):
        out = tmp_path / "m.ferb"
        code = cli.main(["train", "--root", str(data_dir),
                         "--manifest", str(data_dir / "manifest.csv"),
                         "--config", str(fast_config_path),
                         "--seed", "7", "--out", str(out)])
        assert code == 0
        assert load_bundle(out).config.seed == 7

    def test_invalid_config_exits_2(self, data_dir, tmp_path, capsys):
        cfg = tmp_path / "broken.json"
        cfg.write_text('{"feature": "hog"}', encoding="utf-8")
        code = cli.main(["train", "--root", str(data_dir),
                         "--manifest", str(data_dir / "manifest.csv"),
                         "--config", str(cfg), "--out", str(tmp_path / "m.ferb")])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_default_embed_dim_too_large_exits_2(self, data_dir, tmp_path, capsys):
        code = cli.main(["train", "--root", str(data_dir),
                         "--manifest", str(data_dir / "manifest.csv"),
                         "--out", str(tmp_path / "m.ferb")])
        assert code == 2
        assert "embedding dimension" in capsys.readouterr().err


class TestPredict:
    def test_labels_an_image(self, trained_bundle_path, data_dir, capsys):
        code = cli.main(["predict", "--bundle", str(trained_bundle_path),
                         "--image", str(data_dir / "happy_00.pgm")])
        out = capsys.readouterr().out.strip()
        assert code == 0
        label, score = out.split()
        assert label in ("happy", "angry", "sad", "surprise", "disgust", "fear", "calm")
        assert 0.0 <= float(score) <= 1.0

    def test_corrupt_image_exits_3(self, trained_bundle_path, tmp_path, capsys):
        img = tmp_path / "junk.pgm"
        img.write_text("this is not a pgm", encoding="utf-8")
        code = cli.main(["predict", "--bundle", str(trained_bundle_path),
                         "--image", str(img)])
        assert code == 3
        assert "error:" in capsys.readouterr().err

    def test_tampered_bundle_exits_9(self, trained_bundle_path, data_dir,
                                     tmp_path, capsys):
        bad = tmp_path / "bad.ferb"
        text = trained_bundle_path.read_text(encoding="utf-8")
        bad.write_text(text.replace("method mean", "method cluster"), encoding="utf-8")
        code = cli.main(["predict", "--bundle", str(bad),
                         "--image", str(data_dir / "happy_00.pgm")])
        assert code == 9
        assert "checksum" in capsys.readouterr().err


class TestEvaluate:
    def test_prints_and_writes_report(self, data_dir, tmp_path, capsys):
        cfg = tmp_path / "eval.json"
        save_config(PipelineConfig(feature="lbp", reduction="none",
                                   classifier="knn", cv_folds=4), cfg)
        out = tmp_path / "report.txt"
        code = cli.main(["evaluate", "--root", str(data_dir),
                         "--manifest", str(data_dir / "manifest.csv"),
                         "--config", str(cfg), "--out", str(out)])
        stdout = capsys.readouterr().out
        assert code == 0
        assert "AVR" in stdout
        assert f"report written to {out}" in stdout
        assert out.read_text(encoding="utf-8") in stdout


class TestBench:
    def test_formats_all_stages(self, data_dir, capsys, monkeypatch):
        rows = tuple(zip(pipeline.BENCH_STAGES, (0.0351, 0.0018, 0.0119,
                                                 0.0003, 0.00005, 0.00002)))
        monkeypatch.setattr(pipeline, "bench", lambda *a, **k: rows)
        code = cli.main(["bench", "--root", str(data_dir),
                         "--manifest", str(data_dir / "manifest.csv")])
        out = capsys.readouterr().out
        assert code == 0
        for stage in pipeline.BENCH_STAGES:
            assert stage in out
        assert "35.100 ms/image" in out


class TestTrainDetector:
    def test_saves_cascade_and_reports_rates(self, tmp_path, capsys, monkeypatch):
        from test_bundle import tiny_cascade

        cascade = tiny_cascade()
        monkeypatch.setattr(pipeline, "train_detector",
                            lambda seed: (cascade, 0.995, 0.004))
        out = tmp_path / "c.fcd"
        code = cli.main(["train-detector", "--out", str(out)])
        stdout = capsys.readouterr().out
        assert code == 0
        assert "stages 2" in stdout
        assert "detection rate 0.9950" in stdout
        loaded = fd.load_cascade(out)
        assert len(loaded.stages) == 2


class TestDetect:
    def test_reports_boxes(self, tmp_path, detector_cascade, capsys):
        scene, truth = synth.planted_noise_scene(5)
        img_path = tmp_path / "scene.pgm"
        write_pgm(img_path, scene)
        cas_path = tmp_path / "c.fcd"
        fd.save_cascade(cas_path, detector_cascade)
        code = cli.main(["detect", "--cascade", str(cas_path),
                         "--image", str(img_path)])
        out = capsys.readouterr().out.splitlines()
        assert code == 0
        assert out[0].endswith("detection(s)")
        n = int(out[0].split()[0])
        assert len(out) == n + 1
        for row in out[1:]:
            x, y, side, score = row.split()
            assert int(side) >= 24

    def test_missing_cascade_exits_9(self, tmp_path, capsys):
        code = cli.main(["detect", "--cascade", str(tmp_path / "absent.fcd"),
                         "--image", str(tmp_path / "absent.pgm")])
        assert code == 9

    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["transmogrify"])
        assert exc.value.code == 2
