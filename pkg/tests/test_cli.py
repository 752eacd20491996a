import subprocess
import sys
from pathlib import Path

import pytest

from conftest import linear_problem

from mrsvm.cli import main
from mrsvm.formats import load_model, read_predictions, write_sparse
from mrsvm.solver import train_binary

TOY = Path(__file__).parent / "data" / "toy_corpus.tsv"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def tiny_sparse(tmp_path):
    data = linear_problem(11, n=80, dim=4, noise=0.05)
    path = tmp_path / "tiny.svm"
    write_sparse(path, data)
    return path, data


def test_single_partition_train_matches_monolithic(capsys, tmp_path, tiny_sparse):
    path, data = tiny_sparse
    code, out, _ = run(capsys, "train", "--input", path, "--model-out", tmp_path / "m.txt",
                       "--partitions", 1, "--gamma", 0)
    assert code == 0 and "converged" in out
    assert load_model(tmp_path / "m.txt").support_ids == train_binary(data).support_ids


def test_monolithic_flag(capsys, tmp_path, tiny_sparse):
    path, data = tiny_sparse
    code, _, _ = run(capsys, "train", "--input", path, "--model-out", tmp_path / "m.txt", "--monolithic")
    assert code == 0
    assert load_model(tmp_path / "m.txt") == train_binary(data)


def test_sparse_predict_and_perfect_evaluate(capsys, tmp_path, tiny_sparse):
    path, data = tiny_sparse
    run(capsys, "train", "--input", path, "--model-out", tmp_path / "m.txt", "--partitions", 2)
    code, _, _ = run(capsys, "predict", "--model", tmp_path / "m.txt", "--input", path,
                     "--output", tmp_path / "p.csv")
    assert code == 0
    labels = tmp_path / "truth.svm"
    preds = read_predictions(tmp_path / "p.csv")
    # rewrite the dataset with the predicted labels so evaluation is perfect by construction
    write_sparse(labels, data.relabel(lambda y, it=iter([p for _, _, p in preds]): next(it)))
    code, out, _ = run(capsys, "evaluate", "--predictions", tmp_path / "p.csv", "--labels", labels,
                       "--csv-out", tmp_path / "cm.csv")
    assert code == 0
    assert "accuracy 1.0000" in out
    assert (tmp_path / "cm.csv").read_text().startswith("actual,")


def test_rank_by_positive(capsys, tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("id,entity_key,predicted\n0,a,1\n1,a,-1\n2,b,1\n3,c,-1\n4,c,-1\n5,c,1\n", encoding="utf-8")
    code, out, _ = run(capsys, "rank", "--predictions", p, "--by", "positive", "--csv-out", tmp_path / "r.csv")
    assert code == 0
    assert [line.split()[1] for line in out.splitlines()[1:]] == ["b", "a", "c"]
    code, out, _ = run(capsys, "rank", "--predictions", p, "--top", 1)
    assert [line.split()[1] for line in out.splitlines()[1:]] == ["c"]


@pytest.mark.parametrize("argv", [
    ["train", "--input", "x", "--model-out", "m", "--gamma", "-1"],
    ["train", "--input", "x", "--model-out", "m", "--partitions", "0"],
    ["train", "--input", "x", "--model-out", "m", "--c", "0"],
    ["train", "--input", "x", "--model-out", "m", "--kernel", "rbf"],
    ["train", "--input", "x", "--model-out", "m", "--rbf-gamma", "1"],
    ["train", "--input", "x", "--model-out", "m", "--format", "messages_tsv"],
    ["train", "--input", "x", "--model-out", "m", "--bogus"],
    ["predict", "--model", "m", "--input", "x", "--output", "o", "--format", "messages_tsv"],
    ["rank", "--predictions", "p", "--by", "loudest"],
    [],
])
def test_usage_errors_exit_before_work(capsys, argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2


def test_runtime_error_is_one_line(capsys, tmp_path):
    bad = tmp_path / "bad.svm"
    bad.write_text("1 3:1 0:1\n", encoding="utf-8")
    code, _, err = run(capsys, "train", "--input", bad, "--model-out", tmp_path / "m.txt")
    assert code == 1
    assert err.startswith("mrsvm: error: ") and f"{bad}:1:" in err
    assert len(err.strip().splitlines()) == 1


def test_neutral_labels_need_multiclass(capsys, tmp_path):
    code, _, err = run(capsys, "train", "--input", TOY, "--format", "messages_tsv",
                       "--vocab-out", tmp_path / "v.txt", "--model-out", tmp_path / "m.txt")
    assert code == 1 and "--multiclass" in err


def _pipeline(capsys, out: Path, partitions=4, seed=3):
    steps = [
        ["vectorize", "--input", TOY, "--vocab-out", out / "vocab.txt", "--data-out", out / "data.svm"],
        ["train", "--input", out / "data.svm", "--model-out", out / "model.txt", "--multiclass",
         "--partitions", partitions, "--seed", seed],
        ["predict", "--model", out / "model.txt", "--input", TOY, "--format", "messages_tsv",
         "--vocab", out / "vocab.txt", "--output", out / "pred.csv"],
        ["evaluate", "--predictions", out / "pred.csv", "--labels", TOY, "--format", "messages_tsv"],
        ["rank", "--predictions", out / "pred.csv", "--by", "positive"],
    ]
    outputs = []
    for argv in steps:
        code, stdout, err = run(capsys, *argv)
        assert code == 0, err
        outputs.append(stdout)
    return outputs


def test_toy_pipeline_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    out_a = _pipeline(capsys, a)
    out_b = _pipeline(capsys, b)
    assert (a / "pred.csv").read_bytes() == (b / "pred.csv").read_bytes()
    assert (a / "model.txt").read_bytes() == (b / "model.txt").read_bytes()
    assert out_a[-1] == out_b[-1]
    assert len(out_a[-1].splitlines()) == 9
    assert "accuracy" in out_a[3]


def test_train_directly_from_messages(capsys, tmp_path):
    code, _, err = run(capsys, "train", "--input", TOY, "--format", "messages_tsv", "--multiclass",
                       "--vocab-out", tmp_path / "v.txt", "--model-out", tmp_path / "m.txt",
                       "--partitions", 2, "--workers", 2)
    assert code == 0, err
    assert len(load_model(tmp_path / "m.txt").classes) == 3


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "mrsvm", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "vectorize" in proc.stdout
