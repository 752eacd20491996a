"""Acceptance criteria, one test each; every test logs a PASS/FAIL line in the summary."""

import time
from pathlib import Path

import numpy as np
import pytest

from conftest import dataset_from_arrays, linear_problem, three_blobs
from oracles import brute_force_dual, dual_value

from mrsvm.cascade import CascadeConfig, train_cascade
from mrsvm.cli import main
from mrsvm.evaluation import accuracy, confusion, predict_multiclass_many, train_multiclass
from mrsvm.solver import SolverConfig, empirical_risk, kkt_violations, train_binary
from mrsvm.text import TURKISH_STOPWORDS, Message, StopwordList, fit_vocabulary, messages_to_dataset, preprocess, vectorize

DATA = Path(__file__).parent / "data"
TOY = DATA / "toy_corpus.tsv"


def _expand(counts, classes):
    actual, predicted = [], []
    for i, row in enumerate(counts):
        for j, n in enumerate(row):
            actual += [classes[i]] * n
            predicted += [classes[j]] * n
    return actual, predicted


def test_table_arithmetic(acceptance_report):
    cm2 = confusion(*_expand(((4061, 903), (504, 4531)), (-1, 1)), (-1, 1))
    cm3 = confusion(*_expand(((2363, 624, 325), (344, 2147, 806), (216, 846, 2328)), (-1, 0, 1)), (-1, 0, 1))
    a2, a3 = accuracy(cm2), accuracy(cm3)
    ok = abs(a2 - 0.8592) <= 1e-4 and abs(a3 - 0.6838) <= 1e-4
    acceptance_report("table arithmetic fixtures", ok, f"two-class {a2:.6f}, three-class {a3:.6f}")
    assert ok


def _oracle_case(rng, c):
    n = int(rng.integers(2, 7))
    d = int(rng.integers(1, 4))
    X = rng.normal(size=(n, d))
    if rng.random() < 0.3:
        X = np.round(X, 0)  # coincident and collinear points
    y = rng.choice([-1, 1], size=n)
    y[rng.choice(n, 2, replace=False)] = [-1, 1]
    return X, y


def test_solver_oracle_suite(acceptance_report):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst, failures, cases = 0.0, [], 0
    for c in (0.1, 1.0, 10.0):
        for _ in range(80):
            X, y = _oracle_case(rng, c)
            data = dataset_from_arrays(X, y)
            model = train_binary(data, SolverConfig(c=c))
            alpha = np.zeros(len(y))
            for s, a in zip(model.support_samples, model.alphas):
                alpha[s.id] = a
            K = X @ X.T
            _, best = brute_force_dual(K, y, c)
            rel = abs(dual_value(alpha, y, K) - best) / abs(best)
            worst = max(worst, rel)
            if rel > 1e-4 or kkt_violations(model, data, 1e-3):
                failures.append((cases, c))
            cases += 1
    elapsed = time.perf_counter() - start
    ok = cases >= 200 and not failures and elapsed < 30
    acceptance_report("solver oracle suite", ok,
                      f"{cases} datasets, worst relative gap {worst:.2e}, {len(failures)} failures, {elapsed:.1f}s")
    assert ok, failures[:5]


def test_analytic_two_point(acceptance_report, two_point):
    m = train_binary(two_point, SolverConfig(c=10))
    errs = [abs(m.weights[0] - 1.0), abs(m.bias + 1.0)] + [abs(a - 0.5) for a in m.alphas]
    ok = len(m.alphas) == 2 and max(errs) <= 1e-6
    acceptance_report("analytic two-point fixture", ok, f"max error {max(errs):.1e}")
    assert ok


def test_single_partition_equivalence(acceptance_report):
    start = time.perf_counter()
    mismatches = []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(50, 501))
        data = linear_problem(500 + seed, n=n, dim=int(rng.integers(2, 11)), noise=float(rng.uniform(0, 0.15)))
        mono = train_binary(data)
        model, state = train_cascade(data, CascadeConfig(num_partitions=1, gamma=0.0))
        if model.support_ids != mono.support_ids or empirical_risk(model, data) != empirical_risk(mono, data):
            mismatches.append(seed)
    elapsed = time.perf_counter() - start
    ok = not mismatches and elapsed < 30
    acceptance_report("cascade equivalence l=1", ok, f"10 datasets, mismatches {mismatches}, {elapsed:.1f}s")
    assert ok


QUALITY_SETS = [(m, noise) for m in (0.05, 0.1, 0.2, 0.4) for noise in (0.0, 0.02, 0.05, 0.1, 0.15)]


def test_cascade_quality(acceptance_report):
    start = time.perf_counter()
    worst_gap, problems, monotone = -1.0, [], True
    iterations = []
    for k, (margin, noise) in enumerate(QUALITY_SETS):
        data = linear_problem(1000 + k, n=1000, dim=20, margin=margin, noise=noise)
        mono = empirical_risk(train_binary(data), data)
        for l in (2, 4, 8):
            cfg = CascadeConfig(num_partitions=l, gamma=0.001, max_iterations=20, seed=k)
            model, state = train_cascade(data, cfg)
            gap = empirical_risk(model, data) - mono
            worst_gap = max(worst_gap, gap)
            iterations.append(state.iteration)
            monotone &= all(a <= b for a, b in zip(state.sv_counts, state.sv_counts[1:]))
            if gap > 0.02 or not state.converged:
                problems.append((k, l, round(gap, 4), state.converged))
    elapsed = time.perf_counter() - start
    ok = not problems and monotone and elapsed < 300
    acceptance_report("cascade quality l in {2,4,8}", ok,
                      f"{len(QUALITY_SETS)} datasets, worst risk gap {worst_gap:+.4f}, "
                      f"max iterations {max(iterations)}, {elapsed:.1f}s")
    assert ok, problems


def _cli(*argv):
    return main([str(a) for a in argv])


def test_union_monotonicity_and_determinism(acceptance_report, tmp_path, capsys):
    monotone = True
    for seed in range(5):
        data = linear_problem(77 + seed, n=400, dim=8, noise=0.1)
        for l in (2, 4, 8):
            _, state = train_cascade(data, CascadeConfig(num_partitions=l, seed=seed))
            monotone &= all(a <= b for a, b in zip(state.sv_counts, state.sv_counts[1:]))
    files = []
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        codes = [
            _cli("vectorize", "--input", TOY, "--vocab-out", d / "v.txt", "--data-out", d / "d.svm"),
            _cli("train", "--input", d / "d.svm", "--model-out", d / "m.txt", "--multiclass",
                 "--partitions", 4, "--seed", 9),
            _cli("predict", "--model", d / "m.txt", "--input", d / "d.svm", "--output", d / "p.csv"),
        ]
        assert codes == [0, 0, 0]
        files.append((d / "p.csv").read_bytes())
    capsys.readouterr()
    identical = files[0] == files[1]
    ok = monotone and identical
    acceptance_report("union monotonicity and determinism", ok,
                      f"monotone {monotone}, prediction files identical {identical}")
    assert ok


def test_tfidf_fixtures(acceptance_report):
    log2, log4 = 0.3010299956639812, 0.6020599913279624
    texts = ["Bu kampüs çok güzel, kampüs!", "kampüs kötü", "yemekhane güzel güzel", "ders"]
    expected = [
        {"kampüs": 2 * log2, "güzel": log2},
        {"kampüs": log2, "kötü": log4},
        {"yemekhane": log4, "güzel": 2 * log2},
        {"ders": log4},
    ]
    stops = StopwordList.default()
    msgs = [Message(k, "", t, 1) for k, t in enumerate(texts)]
    vocab = fit_vocabulary(msgs, stops, min_df=1)
    worst = 0.0
    keys_match = True
    for sample, want in zip(messages_to_dataset(msgs, vocab, stops), expected):
        got = {vocab.terms[i]: v for i, v in sample.features.items()}
        keys_match &= got.keys() == want.keys()
        worst = max([worst] + [abs(got.get(t, 0.0) - w) for t, w in want.items()])
    listed = [w.strip() for w in (DATA / "stopwords_fixture.txt").read_text("utf-8").split(",")]
    big = fit_vocabulary([Message(k, "", w) for k, w in enumerate(TURKISH_STOPWORDS)], None, min_df=1)
    non_empty = [w for w in listed if len(vectorize(preprocess(w, stops), big))]
    ok = keys_match and worst <= 1e-9 and not non_empty and len(listed) == 115
    acceptance_report("TF-IDF fixtures", ok, f"max weight error {worst:.1e}, "
                      f"{len(listed)} listed stopwords, non-empty vectors {len(non_empty)}")
    assert ok


def test_three_class_pipeline(acceptance_report):
    data = three_blobs(7)

    def trainer(d):
        return train_cascade(d, CascadeConfig(num_partitions=4))[0]

    model = train_multiclass(data, (-1, 0, 1), trainer)
    cm = confusion(data.labels, predict_multiclass_many(model, [s.features for s in data]), (-1, 0, 1))
    diagonal = all(cm.counts[i][j] == 0 for i in range(3) for j in range(3) if i != j)
    ok = accuracy(cm) == 1.0 and diagonal
    acceptance_report("three-class OvR cascade pipeline", ok, f"accuracy {accuracy(cm):.4f}, diagonal {diagonal}")
    assert ok


def test_cli_end_to_end(acceptance_report, tmp_path, capsys):
    rankings, codes = [], []
    lines = [ln for ln in TOY.read_text("utf-8").splitlines() if ln.strip()]
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        codes += [
            _cli("vectorize", "--input", TOY, "--vocab-out", d / "v.txt", "--data-out", d / "d.svm"),
            _cli("train", "--input", d / "d.svm", "--model-out", d / "m.txt", "--multiclass",
                 "--partitions", 4, "--workers", 2, "--seed", 1),
            _cli("predict", "--model", d / "m.txt", "--input", TOY, "--format", "messages_tsv",
                 "--vocab", d / "v.txt", "--output", d / "p.csv"),
            _cli("evaluate", "--predictions", d / "p.csv", "--labels", TOY, "--format", "messages_tsv"),
        ]
        capsys.readouterr()
        codes.append(_cli("rank", "--predictions", d / "p.csv", "--by", "positive", "--csv-out", d / "r.csv"))
        rankings.append((capsys.readouterr().out, (d / "r.csv").read_bytes()))
    ok = len(lines) == 300 and set(codes) == {0} and rankings[0] == rankings[1]
    acceptance_report("CLI end-to-end on the toy corpus", ok,
                      f"{len(lines)} messages, exit codes {sorted(set(codes))}, ranking identical {rankings[0] == rankings[1]}")
    assert ok
