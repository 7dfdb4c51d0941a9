import subprocess
import sys

import numpy as np
import pytest

from mvp_pclip.cli import main, read_scores

SMALL = ["--points_per_cloud=200", "--clouds_per_category=3", "--image_size=32", "--patch_size=8",
         "--dim=16", "--n_heads=2", "--n_layers=4", "--key_layers=2,4", "--text_layers=2"]


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    assert main(["synth", f"--data_dir={data}", *SMALL]) == 0
    assert main(["train", f"--data_dir={data}", f"--out={root / 'train'}", "--epochs=1", *SMALL]) == 0
    return root, data


def test_synth_and_train_outputs(workspace):
    root, data = workspace
    assert (data / "manifest.txt").exists() and (data / "stamp.txt").exists()
    train = root / "train"
    for name in ("model.ckpt", "epoch_1.ckpt", "loss.log", "epochs.txt", "stamp.txt", "config.txt"):
        assert (train / name).exists(), name
    stamp = (train / "stamp.txt").read_text()
    assert "config_sha256 = " in stamp and "seed = 0" in stamp


def test_eval_report(workspace, capsys):
    root, data = workspace
    out = root / "eval"
    args = ["eval", f"--data_dir={data}", "--checkpoint", str(root / "train" / "model.ckpt"),
            "--out", str(out), *SMALL]
    assert main(args) == 0
    kv = dict(line.split(" = ") for line in (out / "report.kv").read_text().splitlines())
    for k in ("o_auroc", "o_maxf1", "o_ap", "p_auroc", "p_maxf1", "p_ap"):
        assert 0.0 <= float(kv[k]) <= 1.0
    assert "Mean" in capsys.readouterr().out
    first = (out / "report.txt").read_bytes()
    assert main(args) == 0
    assert (out / "report.txt").read_bytes() == first


def test_score_and_viz(workspace, capsys):
    root, data = workspace
    cloud = data / "clouds" / "torus" / "torus_000.ply"
    scores = root / "s" / "torus.txt"
    assert main(["score", str(cloud), "--checkpoint", str(root / "train" / "model.ckpt"),
                 "--category", "torus", "--output", str(scores), *SMALL]) == 0
    values = read_scores(scores, 200)
    assert ((values >= 0) & (values <= 1)).all()
    assert "object_score" in (root / "s" / "torus.summary").read_text()
    assert (root / "s" / "stamp.txt").exists()
    assert main(["viz", str(cloud), str(scores), str(root / "s" / "torus_colored.ply")]) == 0
    assert (root / "s" / "torus_colored.ply").stat().st_size > 0


def test_lr_zero_checkpoint_scores_like_untrained(workspace):
    root, data = workspace
    assert main(["train", f"--data_dir={data}", f"--out={root / 'lr0'}", "--epochs=1",
                 "--learning_rate=0", *SMALL]) == 0
    cloud = data / "clouds" / "cone" / "cone_001.ply"
    a, b = root / "a.txt", root / "b.txt"
    assert main(["score", str(cloud), "--checkpoint", str(root / "lr0" / "model.ckpt"),
                 "--category", "cone", "--output", str(a), *SMALL]) == 0
    assert main(["score", str(cloud), "--category", "cone", "--output", str(b), *SMALL]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.with_suffix(".summary").read_bytes() == b.with_suffix(".summary").read_bytes()


def test_render(workspace):
    root, data = workspace
    out = root / "render"
    assert main(["render", str(data / "clouds" / "box" / "box_000.ply"), "--out", str(out),
                 "--views=3", *SMALL]) == 0
    assert (out / "box_000_view2.png").exists() and (out / "box_000_view2_mask.png").exists()
    assert len((out / "views.txt").read_text().splitlines()) == 4


def test_sweep_views(workspace):
    root, data = workspace
    out = root / "sweep"
    assert main(["sweep-views", f"--data_dir={data}", "--out", str(out), "--sweep_repeats=1", *SMALL]) == 0
    rows = (out / "sweep.txt").read_text().splitlines()[2:]
    assert [int(r.split()[0]) for r in rows] == [1, 3, 5, 7, 9]
    cov = [float(r.split()[1]) for r in rows]
    assert all(b >= a for a, b in zip(cov, cov[1:]))


def test_errors_are_one_line(tmp_path, capsys):
    assert main(["train", "--bogus=1"]) != 0
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and "bogus" in err[0]
    assert main(["score", str(tmp_path / "missing.ply")]) != 0
    assert len(capsys.readouterr().err.strip().splitlines()) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "mvp_pclip", "eval", "--views=zero"],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    assert proc.stderr.strip().endswith("cannot parse value 'zero'")
