import csv
import json

import numpy as np
import pytest

from afa.cli import main
from afa.config import RunConfig
from afa.data import read_pgm_ppm, synth_dataset, write_pgm_ppm
from afa.nn import load_checkpoint
from afa.tensor_core import ImageTensor, Rng, read_tensor, write_tensor

SMALL_RUN = RunConfig(
    seed=1,
    data_image_size=16,
    data_num_classes=5,
    data_train_per_class=8,
    data_test_per_class=4,
    model_channels=(4, 8),
    epochs=2,
    train_batch_size=8,
    eval_kinds=("gaussian_noise", "brightness", "planar_wave"),
    eval_grid=2,
    eval_seq_frames=3,
    eval_seq_images=6,
)


def test_wave(tmp_path, capsys):
    assert main(["wave", "--f", "2", "--omega", "0", "--size", "16", "--out", str(tmp_path / "w")]) == 0
    assert capsys.readouterr().out.strip() == "l2=1.000000"
    grid = read_tensor(tmp_path / "w.afat")
    assert grid.shape == (1, 16, 16)
    pgm = read_pgm_ppm(tmp_path / "w.pgm")
    assert pgm.data.min() == 0 and pgm.data.max() == 1


def test_wave_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["wave", "--f", "2", "--omega", "0", "--size", "16"])
    assert exc.value.code == 2
    assert main(["wave", "--f", "0.5", "--omega", "0", "--size", "16", "--out", str(tmp_path / "w")]) == 1
    assert "InvalidFrequency" in capsys.readouterr().err


def _augment(tmp_path, src, name, strength="10"):
    out = tmp_path / name
    code = main(["augment", "--in", str(src), "--out", str(out), "--mean-strength", strength, "--seed", "4"])
    return code, out


def test_augment_tensor_input(tmp_path):
    imgs = Rng(0).uniform((3, 3, 16, 16)).astype(np.float32)
    write_tensor(tmp_path / "in.afat", imgs)
    code, out1 = _augment(tmp_path, tmp_path / "in.afat", "a")
    _, out2 = _augment(tmp_path, tmp_path / "in.afat", "b")
    assert code == 0
    assert (out1 / "augmented.afat").read_bytes() == (out2 / "augmented.afat").read_bytes()
    rows = list(csv.reader(open(out1 / "manifest.csv")))
    assert rows[0][:4] == ["index", "f_R", "omega_R", "sigma_R"]
    assert len(rows) - 1 == 3
    assert len(list(out1.glob("aug_*.ppm"))) == 3


def test_augment_tiny_strength_is_near_identity(tmp_path):
    imgs = Rng(1).uniform((2, 3, 8, 8)).astype(np.float32)
    write_tensor(tmp_path / "in.afat", imgs)
    _, out = _augment(tmp_path, tmp_path / "in.afat", "o", "1e-9")
    assert np.max(np.abs(read_tensor(out / "augmented.afat") - imgs)) <= 1e-6


def test_augment_directory_and_mismatch(tmp_path):
    src = tmp_path / "imgs"
    src.mkdir()
    for i in range(2):
        write_pgm_ppm(src / f"{i}.pgm", ImageTensor(Rng(i).uniform((1, 8, 8)), clamped=True))
    code, out = _augment(tmp_path, src, "o")
    assert code == 0 and len(list(out.glob("aug_*.pgm"))) == 2
    write_pgm_ppm(src / "z.pgm", ImageTensor(np.zeros((1, 4, 4)), clamped=True))
    assert _augment(tmp_path, src, "p")[0] == 1
    write_tensor(tmp_path / "rect.afat", np.zeros((1, 3, 8, 6), np.float32))
    assert _augment(tmp_path, tmp_path / "rect.afat", "q")[0] == 1


@pytest.mark.parametrize("suite", ["fft", "metrics"])
def test_verify(suite, capsys):
    assert main(["verify", "--suite", suite]) == 0
    records = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert records and all(r["passed"] for r in records)
    if suite == "metrics":
        assert next(r for r in records if r["check"] == "self_mCE")["value"] == 100.0


def test_verify_unknown_suite():
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--suite", "nope"])
    assert exc.value.code == 2


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    root = tmp_path_factory.mktemp("run")
    (root / "run.cfg").write_text(SMALL_RUN.to_text())
    assert main(["train", "--config", str(root / "run.cfg"), "--out-dir", str(root / "train")]) == 0
    return root


def test_train_outputs(trained):
    out = trained / "train"
    assert (out / "checkpoint" / "model.manifest").is_file()
    assert (out / "config.resolved").read_text() == SMALL_RUN.to_text()
    assert (out / "VERSION").is_file()
    assert (out / "epochs.csv").read_text().startswith("epoch,loss,accuracy\n")


def test_eval_self_baseline(trained, capsys):
    code = main(["eval", "--model", str(trained / "train" / "checkpoint"), "--out-dir", str(trained / "eval")])
    assert code == 0
    assert "mCE=100.0000" in capsys.readouterr().out
    rows = list(csv.DictReader(open(trained / "eval" / "metrics.csv")))
    assert {r["metric"] for r in rows} >= {"error", "FP", "T5D", "SA", "RA", "mCE", "mFR"}


def test_heatmap_zero_v_is_flat(trained, capsys):
    ck = trained / "train" / "checkpoint"
    assert main(["heatmap", "--model", str(ck), "--v", "0", "--grid", "2", "--out", str(trained / "hm" / "h")]) == 0
    grid = read_tensor(trained / "hm" / "h.afat")
    assert grid.shape == (5, 3)
    assert np.all(grid == grid[0, 0])
    _, test = synth_dataset(SMALL_RUN.synthetic_spec())
    clean = np.mean(load_checkpoint(ck).predict(test.images) != test.labels)
    assert grid[0, 0] == pytest.approx(clean)


@pytest.mark.parametrize("diag,header", [("bn-divergence", "depth,layer,weight_mad,bias_mad"),
                                          ("weight-norms", "depth,weight_norm")])
def test_report(trained, tmp_path, diag, header):
    out = tmp_path / "r.csv"
    assert main(["report", "--model", str(trained / "train" / "checkpoint"), "--diagnostic", diag,
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == header and len(lines) == 3


def test_missing_checkpoint(tmp_path):
    assert main(["eval", "--model", str(tmp_path / "none"), "--out-dir", str(tmp_path / "e")]) == 1
