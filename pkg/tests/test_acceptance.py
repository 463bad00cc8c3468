"""The acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Every tolerance is pinned here, not configurable.
"""

import itertools
import json
import math
import time

import numpy as np

from spinex.bench import (
    DatasetSource,
    ExperimentSpec,
    ModelSpec,
    run_experiment,
)
from spinex.cli import main as cli_main
from spinex.cv import kfold_split, stratified_kfold_split
from spinex.data import CLASSIFICATION, REGRESSION, Dataset, PreprocessConfig
from spinex.evalrank import (
    REGRESSION_ACCURACY_GROUP,
    MetricRecord,
    accuracy,
    auc,
    estimated_energy,
    logloss,
    mae,
    r2,
    rank_models,
)
from spinex.explain import (
    combination_impact,
    feature_contributions,
    global_feature_importance,
    interaction_effects,
)
from spinex.predictor import (
    SpinexConfig,
    fit,
    predict_class,
    predict_proba,
    predict_regression,
    regressor_defaults,
)
from spinex.synthgen import (
    LINEAR,
    REGRESSION_FAMILIES,
    RegressionGenSpec,
    gen_classification,
    gen_regression,
    gen_regression_family,
    gen_regression_linear,
    table3_specs,
    table5a_specs,
    table5b_specs,
)

import oracles


def report_line(number: int, name: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{status}] criterion {number}: {name}{suffix}")
    assert ok, f"criterion {number} failed: {name} {suffix}"


RAW = PreprocessConfig(outlier_handling_method="none")


def test_criterion_1_knn_equivalence():
    """Uniform-weight SPINEX equals brute-force kNN on 20 seeded datasets."""
    start = time.perf_counter()
    worst = 0.0
    for trial in range(20):
        gen = np.random.default_rng(100 + trial)
        n = int(gen.integers(20, 301))
        d = int(gen.integers(1, 9))
        k = int(gen.integers(1, 8))
        X = gen.random((n, d))
        queries = gen.random((15, d))
        names = [f"x{j}" for j in range(d)]
        cfg = SpinexConfig(n_neighbors=k, weighting="uniform", metric="manhattan",
                           preprocess=RAW)
        if trial % 2 == 0:
            y = gen.random(n)
            model = fit(cfg, Dataset(X, y, names, REGRESSION))
            got = predict_regression(model, queries)
            for i, q in enumerate(queries):
                expect = oracles.knn_regression(X.tolist(), y.tolist(), q.tolist(), k)
                worst = max(worst, abs(got[i] - expect))
                assert abs(got[i] - expect) <= 1e-12
        else:
            y = gen.integers(0, 3, n)
            y[:3] = [0, 1, 2]  # keep the label set contiguous
            model = fit(cfg, Dataset(X, y, names, CLASSIFICATION))
            got = predict_class(model, queries)
            for i, q in enumerate(queries):
                expect = oracles.knn_majority(X.tolist(), y.tolist(), q.tolist(), k)
                assert got[i] == expect
    elapsed = time.perf_counter() - start
    report_line(1, "kNN equivalence", elapsed < 10.0,
                f"max regression delta {worst:.2e}, {elapsed:.1f}s")


def test_criterion_2_explanation_oracles():
    """C_k, I_kl, and I_F reproduce their multi-predict-call oracles to 1e-12."""
    start = time.perf_counter()
    worst = 0.0
    for trial in range(10):
        gen = np.random.default_rng(200 + trial)
        n, d = 40, 4
        X = gen.random((n, d))
        names = [f"x{j}" for j in range(d)]
        exclude_method = "zero" if trial % 2 == 0 else "mean"
        cfg = SpinexConfig(preprocess=RAW, exclude_method=exclude_method)
        if trial < 5:
            data = Dataset(X, gen.random(n), names, REGRESSION)
        else:
            labels = gen.integers(0, 2, n)
            labels[:2] = [0, 1]
            data = Dataset(X, labels, names, CLASSIFICATION)
        model = fit(cfg, data)
        queries = gen.random((3, d))

        def quantity_for(row):
            if model.task == REGRESSION:
                return lambda r: predict_regression(model, [r])[0]
            cls = predict_class(model, [row])[0]
            return lambda r: predict_proba(model, [r])[0][cls]

        def drop(row, cols, fn):
            r = np.array(row, copy=True)
            if exclude_method == "zero":
                r[list(cols)] = 0.0
            else:
                r[list(cols)] = model.feature_means[list(cols)]
            return fn(r)

        contribs = feature_contributions(model, queries)
        inters = interaction_effects(model, queries)
        impacts = dict(combination_impact(model, queries, max_size=2).entries)
        importances = global_feature_importance(model, queries)

        per_subset_deltas = {s: [] for s in impacts}
        for i, row in enumerate(queries):
            fn = quantity_for(row)
            base = fn(row)
            c_oracle = np.array([base - drop(row, [k], fn) for k in range(d)])
            worst = max(worst, np.abs(contribs[i].values - c_oracle).max())
            assert np.abs(contribs[i].values - c_oracle).max() <= 1e-12
            for k, l in itertools.combinations(range(d), 2):
                c_kl = base - drop(row, [k, l], fn)
                expect = c_oracle[k] + c_oracle[l] - c_kl
                delta = abs(inters[i].values[k, l] - expect)
                worst = max(worst, delta)
                assert delta <= 1e-12
            assert np.array_equal(np.diag(inters[i].values), np.zeros(d))
            assert np.allclose(inters[i].values, inters[i].values.T, atol=1e-9)
            for subset in impacts:
                per_subset_deltas[subset].append(base - drop(row, subset, fn))
        for subset, deltas in per_subset_deltas.items():
            delta = abs(impacts[subset] - np.mean(deltas))
            worst = max(worst, delta)
            assert delta <= 1e-12
        stacked = np.stack([c.values for c in contribs])
        assert np.abs(importances - np.abs(stacked).mean(axis=0)).max() <= 1e-12
    elapsed = time.perf_counter() - start
    report_line(2, "explanation oracles", elapsed < 30.0,
                f"max delta {worst:.2e}, {elapsed:.1f}s")


def test_criterion_3_generator_fidelity():
    """Noiseless targets match the published formulas; all table shapes hold."""
    start = time.perf_counter()
    worst = 0.0
    for family in REGRESSION_FAMILIES:
        if family == LINEAR:
            spec = RegressionGenSpec(family=LINEAR, n_samples=80, n_features=5,
                                     n_informative=3, noise=0.0, bias=2.0,
                                     shuffle=False, seed=301)
            data = gen_regression_linear(spec)
            rng = np.random.default_rng(301)
            X = rng.standard_normal((80, 5))
            w = np.zeros(5)
            w[:3] = rng.standard_normal(3)
            delta = np.abs(data.targets - (X @ w + 2.0)).max()
        else:
            spec = RegressionGenSpec(family=family, n_samples=80, n_features=4,
                                     noise=0.0, n_outliers=0, seed=302)
            data = gen_regression_family(spec)
            expect = np.array([oracles.family_formula(family, row.tolist())
                               for row in data.features])
            delta = np.abs(data.targets - expect).max()
        worst = max(worst, delta)
        assert delta < 1e-9, family

    for name, spec in table3_specs(base_seed=7):
        data = gen_regression(spec)
        assert (data.n_samples, data.n_features) == (spec.n_samples, spec.n_features), name
    for name, spec in table5a_specs(base_seed=7):
        data = gen_classification(spec)
        assert (data.n_samples, data.n_features) == (spec.n_samples, spec.n_features), name
    for name, spec in table5b_specs(base_seed=7):
        data = gen_classification(spec)
        assert (data.n_samples, data.n_features) == (spec.n_samples, spec.n_features), name
        counts = np.bincount(data.targets, minlength=2)
        expect1 = math.floor(spec.weights[1] * spec.n_samples)
        assert counts.tolist() == [spec.n_samples - expect1, expect1], name
    # the published example: 0.9/0.1 at n=50 gives a 45/5 split
    d1 = gen_classification(table5b_specs(base_seed=7)[0][1])
    assert np.bincount(d1.targets).tolist() == [45, 5]
    elapsed = time.perf_counter() - start
    report_line(3, "generator fidelity", elapsed < 60.0,
                f"max formula delta {worst:.2e}, {elapsed:.1f}s")


def test_criterion_4_metric_fixtures():
    gen = np.random.default_rng(400)
    a = gen.standard_normal(100)
    ok = abs(r2(a, np.full(100, a.mean()))) <= 1e-12
    ok &= mae(a, a) == 0.0
    ok &= accuracy([0, 1, 1], [0, 1, 1]) == 1.0
    ok &= auc([0, 0, 1, 1], [0.1, 0.2, 0.3, 0.4]) == 1.0
    ok &= abs(logloss([0, 1], np.full((2, 2), 0.5)) - math.log(2)) <= 1e-12
    ok &= estimated_energy(1.0, 10.0, 0.0) == 10.0
    worst = 0.0
    for trial in range(50):
        n = int(gen.integers(4, 60))
        labels = gen.integers(0, 2, n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        scores = np.round(gen.random(n), 1)
        expect = oracles.auc_pairwise(labels.tolist(), scores.tolist())
        worst = max(worst, abs(auc(labels, scores) - expect))
    ok &= worst <= 1e-12
    report_line(4, "metric fixtures", bool(ok), f"max AUC delta {worst:.2e}")


def test_criterion_5_cv_protocol():
    gen = np.random.default_rng(500)
    checked = 0
    for trial in range(15):  # plain k-fold configurations
        n = int(gen.integers(10, 200))
        seed = int(gen.integers(0, 10_000))
        folds = kfold_split(n, 5, seed)
        tests = [t for _, t in folds]
        union = np.sort(np.concatenate(tests))
        assert np.array_equal(union, np.arange(n))
        sizes = [len(t) for t in tests]
        assert max(sizes) - min(sizes) <= 1
        again = kfold_split(n, 5, seed)
        assert all(np.array_equal(a[1], b[1]) for a, b in zip(folds, again))
        checked += 1
    for trial in range(15):  # stratified configurations
        n = int(gen.integers(60, 400))
        frac = float(gen.uniform(0.15, 0.5))
        labels = (gen.random(n) < frac).astype(int)
        if labels.sum() < 10:
            labels[:10] = 1
        seed = int(gen.integers(0, 10_000))
        folds = stratified_kfold_split(labels, 10, seed)
        union = np.sort(np.concatenate([t for _, t in folds]))
        assert np.array_equal(union, np.arange(n))
        for cls in (0, 1):
            total = (labels == cls).sum()
            for _, test in folds:
                assert abs((labels[test] == cls).sum() - total / 10) <= 1
        again = stratified_kfold_split(labels, 10, seed)
        assert all(np.array_equal(a[1], b[1]) for a, b in zip(folds, again))
        checked += 1

    # leak-freedom sentinel: mutate fold-0 test targets, fold-0 model unmoved
    gen2 = np.random.default_rng(501)
    X = gen2.random((40, 3))
    y = X @ [1.0, 2.0, 3.0]
    folds = kfold_split(40, 5, seed=77)
    _, test0 = folds[0]

    def fingerprint(dataset):
        spec = ExperimentSpec(
            suite="sentinel", datasets=[DatasetSource("d", dataset=dataset)],
            models=[ModelSpec("SPINEX", "spinex",
                              {"config": SpinexConfig(preprocess=RAW)})],
            cv={"kfold": 5}, seed=77,
        )
        return run_experiment(spec).cells[0]["folds"][0]["model_fingerprint"]

    base = fingerprint(Dataset(X, y, ["a", "b", "c"], REGRESSION))
    mutated = np.array(y, copy=True)
    mutated[test0] += 999.0
    other = fingerprint(Dataset(X, mutated, ["a", "b", "c"], REGRESSION))
    sentinel_ok = base == other
    report_line(5, "CV protocol", checked == 30 and sentinel_ok,
                f"{checked} seeded configurations, sentinel {'ok' if sentinel_ok else 'LEAK'}")


def test_criterion_6_ranking_fixtures():
    rec = lambda m, d, **kw: MetricRecord(m, d, kw)
    # dominance
    t1 = rank_models([rec("good", "d1", mae=0.1, r2=0.9),
                      rec("bad", "d1", mae=0.9, r2=0.1)], REGRESSION_ACCURACY_GROUP)
    ok = t1.overall_rank == {"good": 1, "bad": 2} and t1.rank_sum == {"good": 2, "bad": 4}
    # tie
    t2 = rank_models([rec("a", "d1", mae=0.2, r2=0.8),
                      rec("b", "d1", mae=0.2, r2=0.8),
                      rec("c", "d1", mae=0.4, r2=0.5)], REGRESSION_ACCURACY_GROUP)
    ok &= t2.ranks["mae"] == {"a": 1, "b": 1, "c": 3}
    ok &= t2.overall_rank == {"a": 1, "b": 1, "c": 3}
    # 3-model / 2-dataset mix, rank table computed by hand
    t3 = rank_models([
        rec("A", "d1", mae=0.1, r2=0.9), rec("A", "d2", mae=0.3, r2=0.7),
        rec("B", "d1", mae=0.2, r2=0.9), rec("B", "d2", mae=0.4, r2=0.8),
        rec("C", "d1", mae=0.2, r2=0.5), rec("C", "d2", mae=0.3, r2=0.7),
    ], REGRESSION_ACCURACY_GROUP)
    ok &= t3.ranks["mae"] == {"A": 1, "B": 3, "C": 2}
    ok &= t3.ranks["r2"] == {"A": 2, "B": 1, "C": 3}
    ok &= t3.rank_sum == {"A": 3, "B": 4, "C": 5}
    ok &= t3.overall_rank == {"A": 1, "B": 2, "C": 3}
    report_line(6, "ranking fixtures", bool(ok))


def test_criterion_7_soft_performance():
    """Dataset-15 parameters: default SPINEX reaches R^2 >= 0.80 and does not
    lose more than 5% MAE to the unweighted kNN baseline."""
    source = DatasetSource(
        "complex_interaction",
        generator=RegressionGenSpec(family="complex_interaction", n_samples=500,
                                    n_features=7, noise=0.0, seed=15),
    )
    spec = ExperimentSpec(
        suite="soft-check",
        datasets=[source],
        models=[
            ModelSpec("SPINEX", "spinex", {"config": regressor_defaults()}),
            ModelSpec("KNN", "baseline_knn", {"k": 5, "metric": "manhattan"}),
        ],
        cv={"kfold": 5},
        seed=42,
    )
    report = run_experiment(spec)
    agg = {cell["model"]: cell["aggregate"] for cell in report.cells}
    spinex_r2 = agg["SPINEX"]["r2"]
    ratio = agg["SPINEX"]["mae"] / agg["KNN"]["mae"]
    ok = spinex_r2 >= 0.80 and ratio <= 1.05
    report_line(7, "soft performance", ok,
                f"mean R2 {spinex_r2:.4f}, MAE ratio {ratio:.4f}")


def test_criterion_8_end_to_end_determinism(tmp_path):
    """The published regression suite finishes in budget with a stable hash."""
    hashes = []
    start = time.perf_counter()
    for run_no in (1, 2):
        out = tmp_path / f"run{run_no}"
        code = cli_main(["bench", "--suite", "synthetic-regression", "--seed", "42",
                         "--formats", "json", "--out", str(out)])
        assert code == 0
        with open(out / "report.json", encoding="utf-8") as fh:
            hashes.append(json.load(fh)["determinism_hash"])
    elapsed = time.perf_counter() - start
    ok = hashes[0] == hashes[1] and (elapsed / 2) < 300.0
    report_line(8, "end-to-end determinism and budget", ok,
                f"{elapsed / 2:.1f}s per run, hash {hashes[0][:12]}")
