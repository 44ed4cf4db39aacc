from dataclasses import replace

import numpy as np
import pytest

from msgs_lab import trainer as T
from msgs_lab.datagen import SbmConfig, generate_sbm, split


@pytest.fixture(scope="module")
def separable():
    # two pure-homophily blocks with well separated class means
    cfg = SbmConfig(num_nodes=120, p_in=0.15, p_out=0.0, feature_dim=4, mu=6.0, sigma=0.5,
                    seed=1, require_connected=False)
    ds = generate_sbm(cfg)
    assert ds.graph.degrees.min() > 0
    return split(ds, (0.2, 0.2, 0.6), seed=0)


FAST = T.TrainConfig(hidden=8, layers=2, epochs=50, dropout=0.0, lr=0.01)


def test_separability_oracle(separable):
    x = np.hstack([separable.features, np.ones((120, 1))])
    m = separable.train_mask
    w, *_ = np.linalg.lstsq(x[m], np.where(separable.labels[m] == 1, 1.0, -1.0), rcond=None)
    pred = (x @ w > 0).astype(int)
    assert np.all(pred[separable.test_mask] == separable.labels[separable.test_mask])


@pytest.mark.parametrize("kind", ["gcn", "sgc", "fagcn", "rfagnn", "msgs"])
def test_every_model_fits_separable_data(separable, kind):
    res = T.train(separable, replace(FAST, model=kind, layers=1))
    # the earliest-best checkpoint can predate the fit; the epoch-50 model must be exact
    logits, _ = T.predict(res.last_params, separable)
    assert T.evaluate(logits, separable.labels, separable.test_mask).accuracy == 1.0
    assert res.test.accuracy >= 0.95
    assert len(res.log) == 50 and 1 <= res.best_epoch <= 50


def test_zero_learning_rate(separable):
    cfg = replace(FAST, lr=0.0, epochs=5)
    res = T.train(separable, cfg)
    init = T.init_params(cfg.model_spec(4, 2), cfg.seed)
    for k, v in init.tensors.items():
        np.testing.assert_array_equal(res.params.tensors[k], v)
    assert len({acc for _, _, acc in res.log}) == 1


def test_seed_determinism(separable):
    cfg = replace(FAST, epochs=10, dropout=0.5)
    a, b = T.train(separable, cfg), T.train(separable, cfg)
    assert a.log == b.log
    c = T.train(separable, replace(cfg, seed=1))
    assert c.log != a.log


def test_loss_decreases_early(separable):
    good = 0
    for seed in range(5):
        res = T.train(separable, replace(FAST, seed=seed, epochs=10, lr=0.01))
        losses = [row[1] for row in res.log]
        good += all(b <= a for a, b in zip(losses, losses[1:]))
    assert good >= 4


def test_best_validation_checkpoint(separable):
    res = T.train(separable, replace(FAST, epochs=20))
    best = max(acc for _, _, acc in res.log)
    first = next(e for e, _, acc in res.log if acc == best)
    assert res.best_epoch == first
    assert res.val.accuracy == pytest.approx(best)


def test_divergence_reports_epoch(separable):
    with np.errstate(all="ignore"):
        with pytest.raises(T.TrainingDiverged) as info:
            T.train(separable, replace(FAST, lr=1e300, epochs=5))
    assert info.value.epoch >= 1


def test_config_validation(separable):
    for bad in (dict(epochs=0), dict(layers=0), dict(dropout=1.0), dict(lr=-1.0)):
        with pytest.raises(ValueError):
            T.train(separable, replace(FAST, **bad))
    empty = replace(separable, train_mask=np.zeros(120, bool))
    with pytest.raises(ValueError):
        T.train(empty, FAST)


# -- optimiser ---------------------------------------------------------------------


def test_adam_zero_gradient_only_decays():
    p = {"W": np.full((2, 2), 3.0), "b": np.full((1, 2), 3.0)}
    opt = T.Adam(p, lr=0.1, weight_decay=0.01, decay=frozenset({"W"}))
    opt.step({"W": np.zeros((2, 2)), "b": np.zeros((1, 2))})
    np.testing.assert_array_equal(p["W"], 3.0 - 0.1 * 0.01 * 3.0)
    np.testing.assert_array_equal(p["b"], 3.0)


def test_adam_first_step_is_sign_times_lr():
    p = {"w": np.array([[1.0, -2.0]])}
    T.Adam(p, lr=0.01).step({"w": np.array([[0.5, -4.0]])})
    np.testing.assert_allclose(p["w"], [[0.99, -1.99]], atol=1e-9)


def test_adam_matches_reference_recursion(rng):
    x = rng.standard_normal((1, 3))
    p = {"x": x.copy()}
    opt = T.Adam(p, lr=0.05)
    m = v = np.zeros_like(x)
    ref = x.copy()
    for t in range(1, 6):
        g = 2 * ref
        opt.step({"x": 2 * p["x"]})
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        ref = ref - 0.05 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
        np.testing.assert_allclose(p["x"], ref, atol=1e-14)


# -- metrics -----------------------------------------------------------------------


def _logits_for(pred, c=2):
    return np.eye(c)[pred]


def test_metrics_counts_example():
    labels = np.array([1, 1, 1, 1, 0, 0, 0, 0, 0, 0])
    pred = np.array([1, 1, 1, 0, 1, 0, 0, 0, 0, 0])
    m = T.evaluate(_logits_for(pred), labels)
    assert (m.tp, m.fp, m.fn, m.tn) == (3, 1, 1, 5)
    assert (m.precision, m.recall, m.f1, m.accuracy) == (0.75, 0.75, 0.75, 0.8)


def test_metrics_all_correct_and_degenerate():
    labels = np.array([0, 1, 1, 0])
    m = T.evaluate(_logits_for(labels), labels)
    assert m.accuracy == 1 and m.f1 == 1
    zeros = np.zeros(4, int)
    m = T.evaluate(_logits_for(zeros), zeros)
    assert (m.precision, m.recall, m.f1) == (0, 0, 0)
    with pytest.raises(ValueError):
        T.evaluate(_logits_for(zeros), zeros, np.zeros(4, bool))


def test_metrics_permutation_invariant(rng):
    logits = rng.standard_normal((50, 2))
    labels = rng.integers(0, 2, 50)
    mask = rng.random(50) < 0.6
    perm = rng.permutation(50)
    assert T.evaluate(logits, labels, mask) == T.evaluate(logits[perm], labels[perm], mask[perm])


def test_random_logits_accuracy_near_half(rng):
    labels = np.repeat([0, 1], 50)
    accs = [T.evaluate(rng.standard_normal((100, 2)), labels).accuracy for _ in range(1000)]
    assert abs(np.mean(accs) - 0.5) < 0.05


def test_multiclass_accuracy():
    labels = np.array([0, 1, 2, 2])
    m = T.evaluate(_logits_for(np.array([0, 1, 2, 1]), 3), labels, positive_class=2)
    assert m.accuracy == 0.75 and m.recall == 0.5 and m.precision == 1.0


# -- drivers -------------------------------------------------------------------------


def test_depth_sweep_single_k_equals_train(separable):
    cfg = replace(FAST, epochs=5)
    recs = T.depth_sweep(separable, ["gcn"], [2], cfg, seeds=[0])
    assert len(recs) == 1
    direct = T.train(separable, replace(cfg, model="gcn", layers=2, seed=0))
    assert recs[0].metrics == direct.test


def test_sweep_rows_and_worker_pool(separable):
    cfg = replace(FAST, epochs=3)
    serial = T.depth_sweep(separable, ["gcn", "sgc"], [1, 2], cfg, seeds=[0, 1])
    pooled = T.depth_sweep(separable, ["gcn", "sgc"], [1, 2], cfg, seeds=[0, 1], workers=2)
    assert len(serial) == 8
    assert serial == pooled
    assert [(r.model, r.layers, r.seed) for r in serial] == sorted((r.model, r.layers, r.seed) for r in serial)


def test_ablation_suite_variants(separable):
    recs = T.ablation_suite(separable, replace(FAST, epochs=3), seeds=[0, 1])
    summary = T.summarize(recs)
    assert sorted(m for m, _ in summary) == ["msgs", "msgs:no-ms", "msgs:no-sam-node", "msgs:no-sam-scale"]
    assert len(recs) == 8


def test_csv_outputs(tmp_path, separable):
    res = T.train(separable, replace(FAST, epochs=3))
    T.write_metrics_csv([T.RunRecord("msgs", 2, 0, "test", res.test)], tmp_path / "m.csv")
    T.write_log_csv(res.log, tmp_path / "l.csv")
    m = (tmp_path / "m.csv").read_text().splitlines()
    assert m[0] == "model,layers,seed,split,accuracy,precision,recall,f1" and len(m) == 2
    log = (tmp_path / "l.csv").read_text().splitlines()
    assert log[0] == "epoch,train_loss,val_accuracy" and len(log) == 4
