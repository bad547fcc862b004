import csv
import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from plcnoise.cli import main
from plcnoise.report import EvalParams, evaluate_sets, write_report
from plcnoise.rng import Rng
from plcnoise.synth import desk_fresh_config, gen_fresh
from plcnoise.traces import TraceSet, load_traceset, normalize_maxabs, save_traceset

# desk-scale analysis grid: fs 25 kHz, Nyquist 12.5 kHz
DESK_EVAL = EvalParams(fundamental_hz=122.0, n_harmonics=6, thresh=0.5,
                       f_range=(0.0, 10e3), nfft=256,
                       bands=((0.0, 2e3), (2e3, 4.5e3), (4.5e3, 8e3),
                              (8e3, 12.5e3)))


@pytest.fixture(scope="module")
def fresh_set():
    ts, _ = normalize_maxabs(gen_fresh(desk_fresh_config(), 24, 1024, Rng(3)))
    return ts


@pytest.fixture(scope="module")
def white_set():
    rng = Rng(4)
    std = 0.05
    data = np.stack([rng.substream(i).gaussian(1024, 0.0, std) for i in range(24)])
    return TraceSet(np.clip(data, -1, 1), 25e3)


class TestEvaluate:
    def test_set_vs_itself_is_degenerate(self, fresh_set):
        rep = evaluate_sets(fresh_set, fresh_set, DESK_EVAL)
        assert rep.fid_value <= 1e-9
        assert rep.exceedance.error == 0.0
        assert np.allclose(rep.exceedance.pct, 100.0)
        assert rep.band_error == 0.0
        assert np.array_equal(rep.band_pct["reference"], rep.band_pct["generated"])
        assert np.array_equal(rep.feature_stats["reference"],
                              rep.feature_stats["generated"])

    def test_metric_separation_fresh_vs_white(self, fresh_set, white_set):
        rep = evaluate_sets(fresh_set, white_set, DESK_EVAL)
        assert rep.fid_value > 1.0
        # exceedance at the fundamental differs sharply from the reference
        assert abs(rep.exceedance.pct[0] - 100.0) > 10.0

    def test_report_files_and_structure(self, fresh_set, tmp_path):
        rep = evaluate_sets(fresh_set, fresh_set, DESK_EVAL)
        files = write_report(rep, tmp_path)
        assert set(files) == {"features.csv", "exceedance.csv", "bands.csv",
                              "fid.csv", "pca_scatter.csv"}
        with open(tmp_path / "features.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["feature", "name", "ref_mean", "ref_std",
                           "ref_median", "gen_mean", "gen_std", "gen_median"]
        assert len(rows) == 1 + 9
        assert [r[0] for r in rows[1:]] == [f"({i})" for i in range(1, 10)]
        with open(tmp_path / "exceedance.csv") as fh:
            rows = list(csv.reader(fh))
        # six harmonic rows 122..732 plus the Error row
        assert [r[0] for r in rows[1:]] == ["122", "244", "366", "488",
                                            "610", "732", "Error"]
        assert float(rows[-1][1]) == 0.0

    def test_pca_fid_space_option(self, fresh_set, white_set):
        params = EvalParams(**{**DESK_EVAL.__dict__, "fid_space": "pca"})
        rep = evaluate_sets(fresh_set, white_set, params)
        assert np.isfinite(rep.fid_value) and rep.fid_value > 0


def run_cli(*argv):
    return main([str(a) for a in argv])


class TestCli:
    def test_synth_deterministic_hash(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run_cli("synth", "--preset", "desk-fresh", "--n", 4,
                           "--length", 1024, "--seed", 5, "--out", out) == 0
        ha = json.loads((a / "manifest.json").read_text())["artifacts"]
        hb = json.loads((b / "manifest.json").read_text())["artifacts"]
        assert ha == hb
        ts = load_traceset(a / "traces.ngts")
        assert len(ts) == 4 and ts.trace_len == 1024

    def test_synth_unknown_preset_lists_valid(self, tmp_path, capsys):
        code = run_cli("synth", "--preset", "nope", "--out", tmp_path)
        assert code == 2
        err = capsys.readouterr().err
        assert "dataset1-like" in err and "dataset2-like" in err

    def test_synth_from_config_file(self, tmp_path):
        cfg = Path("configs/dataset2_like.ini")
        out = tmp_path / "cfg"
        assert run_cli("synth", "--config", cfg, "--n", 2, "--length", 16384,
                       "--seed", 1, "--out", out) == 0
        ts = load_traceset(out / "traces.ngts")
        assert ts.sample_rate_hz == 400e3

    def test_missing_file_is_data_error(self, tmp_path):
        assert run_cli("evaluate", tmp_path / "no.ngts", tmp_path / "no.ngts",
                       "--out", tmp_path) == 3

    def test_evaluate_and_report(self, fresh_set, tmp_path):
        ref = tmp_path / "ref.ngts"
        save_traceset(fresh_set, ref)
        out = tmp_path / "eval"
        assert run_cli("evaluate", ref, ref, "--thresh", 0.5,
                       "--fundamental", 122, "--nfft", 256, "--out", out) == 0
        fid_row = (out / "fid.csv").read_text().strip().splitlines()[-1]
        assert float(fid_row.split(",")[1]) <= 1e-9
        manifest = json.loads((out / "manifest.json").read_text())
        assert set(manifest["artifacts"]) >= {"fid.csv", "features.csv"}
        # report renders the directory
        assert run_cli("report", out, "--out", tmp_path / "report.txt") == 0
        text = (tmp_path / "report.txt").read_text()
        assert "Frechet" in text and "Error" in text

    def test_train_generate_pipeline(self, tmp_path):
        data_dir = tmp_path / "data"
        assert run_cli("synth", "--preset", "desk-fresh", "--n", 72,
                       "--length", 1024, "--normalize", "--seed", 1,
                       "--out", data_dir) == 0
        ini = tmp_path / "train.ini"
        ini.write_text(
            "[train]\nblocks = 3\nbase_len = 16\nbase_ch = 16\n"
            "latent_dim = 16\nkernel_len = 9\nbatch = 32\nepochs = 2\n"
            "sample_rate_hz = 25e3\nholdout_frac = 0.0\neval_every = 1\n"
        )
        run_dir = tmp_path / "run"
        assert run_cli("train", "--config", ini, "--data",
                       data_dir / "traces.ngts", "--seed", 2, "--out", run_dir,
                       "--quiet") == 0
        assert (run_dir / "epoch_002.ckpt").exists()
        log = (run_dir / "training_log.csv").read_text().strip().splitlines()
        assert log[0] == "epoch,d_loss,g_loss,fid,seconds"
        assert len(log) == 3  # header + 2 epochs

        gen_dir = tmp_path / "gen"
        assert run_cli("generate", "--checkpoint", run_dir / "epoch_002.ckpt",
                       "--n", 8, "--seed", 3, "--out", gen_dir) == 0
        ts = load_traceset(gen_dir / "generated.ngts")
        assert len(ts) == 8 and ts.trace_len == 1024
        assert ts.sample_rate_hz == 25e3

        # resume continues the epoch counter
        resume_dir = tmp_path / "resume"
        assert run_cli("train", "--config", ini, "--data",
                       data_dir / "traces.ngts", "--seed", 2,
                       "--resume", run_dir / "epoch_002.ckpt",
                       "--out", resume_dir, "--quiet") == 0
        log2 = (resume_dir / "training_log.csv").read_text().strip().splitlines()
        assert log2[1].startswith("3,")

    def test_entry_point_installed(self):
        exe = shutil.which("plcnoise")
        if exe is None:
            pytest.skip("console script not on PATH")
        out = subprocess.run([exe, "--help"], capture_output=True, text=True)
        assert out.returncode == 0
        for sub in ("synth", "train", "generate", "evaluate", "report"):
            assert sub in out.stdout


def test_train_length_mismatch_exit_code(tmp_path):
    data_dir = tmp_path / "d"
    run_cli("synth", "--preset", "desk-fresh", "--n", 8, "--length", 2048,
            "--normalize", "--seed", 1, "--out", data_dir)
    ini = tmp_path / "t.ini"
    ini.write_text("[train]\nblocks = 3\nbase_len = 16\nbase_ch = 16\n"
                   "latent_dim = 8\nkernel_len = 9\nbatch = 4\nepochs = 1\n")
    code = run_cli("train", "--config", ini, "--data", data_dir / "traces.ngts",
                   "--out", tmp_path / "r", "--quiet")
    assert code == 2


def test_spectrogram_csv_and_plots(fresh_set, tmp_path):
    from plcnoise.report import spectrogram_csv, write_diagnostic_plots

    spectrogram_csv(fresh_set.trace(0), 128, 64, tmp_path / "sg.csv")
    lines = (tmp_path / "sg.csv").read_text().strip().splitlines()
    assert lines[0].startswith("time_s,")
    assert len(lines) == 1 + (1024 - 128) // 64 + 1  # header + full frames

    pytest.importorskip("matplotlib")
    files = write_diagnostic_plots(fresh_set, fresh_set, DESK_EVAL, tmp_path)
    for f in files:
        assert (tmp_path / f).stat().st_size > 0
