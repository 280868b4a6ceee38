"""End-to-end acceptance criteria, one test each.

Every test prints a single ``[ACCEPTANCE] <n> PASS|FAIL ...`` line to the
terminal (also under plain ``pytest -q``) before asserting.
"""
import hashlib
import time

import numpy as np
import pytest

from hetbench.autotune import default_space, optimize, split_ratio_sweep, tuned_benchmark
from hetbench.classifiers import (
    ALGORITHMS,
    KNNConfig,
    RandomForestConfig,
    default_config,
    fit_arrays,
    predict_many,
)
from hetbench.classifiers.logistic import loss_and_grad, LRWeights
from hetbench.classifiers.naive_bayes import gnb_fit_stats
from hetbench.cli import main
from hetbench.datagen import GenConfig, Label, generate_dataset, label_rule
from hetbench.evaluation import SplitConfig, confusion_matrix, metrics_from_confusion

from oracles import knn_instance, knn_oracle, stump_instance, stump_oracle

# sha256 of the Markdown table for the paper-mode tuned report on the
# default dataset (seed 3, n=10000, test_size 0.5).
GOLDEN_REPORT_MD_SHA256 = "c74563c949af957a9ae30ad637d1f589a51a775046024877290225574813d12c"


@pytest.fixture
def verdict(capsys):
    def emit(number, name, ok, elapsed, limit, detail=""):
        ok = ok and elapsed < limit
        line = f"[ACCEPTANCE] {number} {'PASS' if ok else 'FAIL'} {name} ({elapsed:.2f}s < {limit}s) {detail}".rstrip()
        with capsys.disabled():
            print("\n" + line)
        return ok
    return emit


def test_1_fixture_fidelity(verdict, reference_sample):
    t0 = time.perf_counter()
    hits = sum(label_rule(f) == lab for f, lab in reference_sample)
    elapsed = time.perf_counter() - t0
    assert verdict(1, "fixture fidelity", hits == 20, elapsed, 1, f"{hits}/20 rows")


def test_2_ranking_reproduction(verdict):
    t0 = time.perf_counter()
    data = generate_dataset(GenConfig())
    report = tuned_benchmark(data, SplitConfig(), ALGORITHMS, mode="paper")
    elapsed = time.perf_counter() - t0
    best = {r.algorithm: r.best_accuracy for r in report.results}
    ranked = sorted(best, key=lambda a: (-best[a], a))
    others = [best[a] for a in ALGORITHMS if a != "rf"]
    checks = {
        "rf strictly first": best["rf"] > max(others),
        "rf - lr >= 0.01": best["rf"] - best["lr"] >= 0.01,
        "rf - svm >= 0.01": best["rf"] - best["svm"] >= 0.01,
        "knn bottom two (best accuracy)": ranked.index("knn") >= 3,
        "knn bottom two (report order)": [r.algorithm for r in report.results].index("knn") >= 3,
        "golden checksum": hashlib.sha256(report.to_markdown().encode()).hexdigest() == GOLDEN_REPORT_MD_SHA256,
    }
    failed = [k for k, v in checks.items() if not v]
    detail = " ".join(f"{a}={best[a]:.4f}" for a in ranked) + (f" failed: {failed}" if failed else "")
    assert verdict(2, "ranking reproduction", not failed, elapsed, 120, detail)


def test_3_noiseless_separability(verdict):
    t0 = time.perf_counter()
    data = generate_dataset(GenConfig(seed=3, n_samples=2000).noiseless())
    space = default_space("rf")
    size = len(space.grid())
    result = optimize("rf", space, data, SplitConfig(), size, size, mode="honest")
    elapsed = time.perf_counter() - t0
    small_best = max(t.score for t in result.trials if t.config["n_estimators"] <= 6)
    ok = result.test_score >= 0.99 and small_best == result.best_score
    detail = f"test={result.test_score:.4f} best={result.best_score:.4f} best(n_estimators<=6)={small_best:.4f}"
    assert verdict(3, "noiseless separability", ok, elapsed, 30, detail)


def test_4_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    knn_ok = 0
    for seed in range(50):
        X, y, Xq = knn_instance(1000 + seed)
        k = 1 + seed % 7
        knn_ok += list(predict_many(fit_arrays(KNNConfig(k=k), X, y), Xq)) == knn_oracle(X, y, Xq, k)
    stump_ok = 0
    cfg = RandomForestConfig(n_estimators=1, max_depth=1, features_per_split=4, bootstrap=False)
    for seed in range(50):
        X, y, Xq = stump_instance(2000 + seed)
        stump_ok += list(predict_many(fit_arrays(cfg, X, y), Xq)) == stump_oracle(X, y, Xq)

    s = gnb_fit_stats(np.array([[1.0, 2.0], [3.0, 4.0], [10.0, 0.0], [14.0, 2.0]]), np.array([0, 0, 1, 1]), 2)
    gnb_ok = (
        np.array_equal(s.priors, [0.5, 0.5])
        and np.array_equal(s.means, [[2.0, 3.0], [12.0, 1.0]])
        and np.array_equal(s.variances, [[1.0, 1.0], [4.0, 1.0]])
    )

    worst = 0.0
    rng = np.random.default_rng(7)
    X = rng.normal(size=(8, 4))
    Y = np.eye(4)[rng.integers(0, 4, 8)]
    w = LRWeights(rng.normal(size=(4, 4)), rng.normal(size=4))
    _, gW, gb = loss_and_grad(w, X, Y, 0.05)
    h = 1e-6
    for which, grad in (("W", gW), ("b", gb)):
        for idx in np.ndindex(grad.shape):
            plus, minus = LRWeights(w.W.copy(), w.b.copy()), LRWeights(w.W.copy(), w.b.copy())
            getattr(plus, which)[idx] += h
            getattr(minus, which)[idx] -= h
            num = (loss_and_grad(plus, X, Y, 0.05)[0] - loss_and_grad(minus, X, Y, 0.05)[0]) / (2 * h)
            worst = max(worst, abs(grad[idx] - num) / max(abs(num), abs(grad[idx]), 1e-3))
    elapsed = time.perf_counter() - t0
    ok = knn_ok == 50 and stump_ok == 50 and gnb_ok and worst <= 1e-5
    detail = f"knn {knn_ok}/50 stump {stump_ok}/50 gnb {'exact' if gnb_ok else 'MISMATCH'} lr-grad rel err {worst:.1e}"
    assert verdict(4, "oracle equivalence", ok, elapsed, 60, detail)


def test_5_metric_correctness(verdict):
    t0 = time.perf_counter()
    S, P = Label.SOLID, Label.PORE
    m = metrics_from_confusion(confusion_matrix([S, S, P, P], [S, P, P, P]))
    example_ok = m.accuracy == 0.75 and abs(m.f1[S] - 2 / 3) < 1e-15 and abs(m.f1[P] - 0.8) < 1e-15
    rng = np.random.default_rng(11)
    identity_ok = 0
    for _ in range(1000):
        n = int(rng.integers(1, 100))
        t, p = rng.integers(0, 4, n), rng.integers(0, 4, n)
        c = confusion_matrix(t, p)
        identity_ok += metrics_from_confusion(c).accuracy == np.trace(c) / c.sum() == np.mean(t == p)
    elapsed = time.perf_counter() - t0
    ok = example_ok and identity_ok == 1000
    detail = f"example {'exact' if example_ok else 'MISMATCH'}; identity {identity_ok}/1000"
    assert verdict(5, "metric correctness", ok, elapsed, 30, detail)


def _pipeline(root, jobs):
    root.mkdir()
    data, rep, svg = root / "data.csv", root / "report.json", root / "bars.svg"
    codes = [
        main(["--quiet", "generate", "--seed", "3", "--n", "2000", "--out", str(data)]),
        main(["--quiet", "benchmark", "--data", str(data), "--tune", "paper", "--jobs", str(jobs), "--out", str(rep)]),
        main(["--quiet", "plot", str(rep), "--kind", "bars", "--out", str(svg)]),
        main(["--quiet", "plot", str(data), "--kind", "scatter", "--out", str(root / "scatter.svg")]),
    ]
    names = ["data.csv", "data.csv.json", "report.json", "report.md", "bars.svg", "scatter.svg"]
    return codes, {n: hashlib.sha256((root / n).read_bytes()).hexdigest() for n in names}


def test_6_end_to_end_determinism(verdict, tmp_path):
    t0 = time.perf_counter()
    runs = [_pipeline(tmp_path / f"run{i}", jobs) for i, jobs in enumerate((1, 1, 4))]
    elapsed = time.perf_counter() - t0
    codes_ok = all(c == 0 for codes, _ in runs for c in codes)
    same = runs[0][1] == runs[1][1] == runs[2][1]
    detail = f"{len(runs[0][1])} files x 3 runs (jobs 1, 1, 4) {'identical' if same else 'DIFFER'}"
    assert verdict(6, "end-to-end determinism", codes_ok and same, elapsed, 120, detail)


def test_7_split_ratio_sweep(verdict):
    t0 = time.perf_counter()
    data = generate_dataset(GenConfig())
    rows = split_ratio_sweep(data, (0.05, 0.2, 0.5), [default_config(a) for a in ALGORITHMS], 3)
    elapsed = time.perf_counter() - t0
    rf = {r.key: r.test_score for r in rows if r.algorithm == "rf"}
    ok = len(rows) == 15 and all(r.test_score is not None for r in rows) and rf[0.05] >= rf[0.5] - 0.02
    detail = f"{len(rows)} rows; rf@0.05={rf[0.05]:.4f} rf@0.5={rf[0.5]:.4f}"
    assert verdict(7, "split-ratio sweep", ok, elapsed, 180, detail)
