import numpy as np
import pytest

from advaug.corpus import generate_corpus
from advaug.network import LabelBatch, forward, init_params, make_optimizer, mlp
from advaug.numerics import seeded_rng, substream
from advaug.training import (
    METRICS_HEADER,
    EvalReport,
    LabeledData,
    TrainConfig,
    batch_indices,
    evaluate,
    fit,
    format_records,
    run_epoch,
    train_epoch_adversarial,
    train_epoch_baseline,
    train_step,
)
from helpers import small_corpus_spec


@pytest.fixture(scope="module")
def data():
    rng = seeded_rng(0)
    x = rng.standard_normal((70, 5))
    y = (x[:, 0] > 0).astype(int) + 2 * (x[:, 1] > 0)
    return LabeledData(x, y, 4)


def fresh(seed=0):
    return init_params(mlp([5, 8, 4]), substream(seed, "init", 0))


def doubled_baseline(params, opt, data, cfg, epoch):
    """Oracle: every batch trained twice in a row, same shuffling."""
    for idx in batch_indices(len(data), cfg.batch_size, cfg.shuffle_seed, epoch):
        t = LabelBatch(data.labels[idx], data.n_classes)
        params, opt, _ = train_step(params, opt, data.features[idx], t)
        params, opt, _ = train_step(params, opt, data.features[idx], t)
    return params, opt


def test_config_validation():
    for bad in (dict(batch_size=0), dict(epsilon=-0.1), dict(origin="pgd"), dict(optimizer="sgd"), dict(patience=0)):
        with pytest.raises(ValueError):
            TrainConfig(**bad)


def test_batches_cover_each_sample_once():
    bs = batch_indices(70, 16, 3, 2)
    assert [len(b) for b in bs] == [16, 16, 16, 16, 6]
    assert sorted(np.concatenate(bs).tolist()) == list(range(70))
    assert all(np.array_equal(a, b) for a, b in zip(bs, batch_indices(70, 16, 3, 2)))
    assert not np.array_equal(bs[0], batch_indices(70, 16, 3, 3)[0])


def test_zero_epochs_leave_params_unchanged(data):
    p = fresh()
    res = fit(p, TrainConfig(epochs=0), lambda q, o, e: train_epoch_baseline(q, data, TrainConfig(), o, e))
    assert res.params.identical(p)


@pytest.mark.parametrize("optimizer", ["adam", "sgd"])
def test_epsilon_zero_equals_doubled_baseline(data, optimizer):
    cfg = TrainConfig(batch_size=16, epsilon=0.0, optimizer=optimizer, lr=0.05 if optimizer == "sgd" else None)
    p0 = fresh()
    pa, oa = p0, make_optimizer(optimizer, p0, cfg.lr)
    pb, ob = p0, make_optimizer(optimizer, p0, cfg.lr)
    for epoch in range(2):
        pa, oa, _ = train_epoch_adversarial(pa, data, cfg, oa, epoch)
        pb, ob = doubled_baseline(pb, ob, data, cfg, epoch)
    assert pa.identical(pb)
    assert oa.step == ob.step


def test_update_count_is_doubled(data):
    cfg = TrainConfig(batch_size=16, epsilon=0.1)
    p = fresh()
    _, ob, recs_b = train_epoch_baseline(p, data, cfg, make_optimizer("adam", p))
    _, oa, recs_a = train_epoch_adversarial(p, data, cfg, make_optimizer("adam", p))
    assert ob.step == 5 and oa.step == 10
    assert all(r.loss_adversarial is not None for r in recs_a)
    assert all(r.loss_adversarial is None for r in recs_b)


def test_adversarial_needs_epsilon(data):
    p = fresh()
    with pytest.raises(ValueError):
        train_epoch_adversarial(p, data, TrainConfig(), make_optimizer("adam", p))


def test_deterministic_epoch(data):
    cfg = TrainConfig(batch_size=8, epsilon=0.2)
    runs = [train_epoch_adversarial(fresh(), data, cfg, make_optimizer("adam", fresh()))[0] for _ in range(2)]
    assert runs[0].identical(runs[1])
    base = [train_epoch_baseline(fresh(), data, cfg, make_optimizer("adam", fresh()))[0] for _ in range(2)]
    assert base[0].identical(base[1])


def test_labels_preserved_and_perturbation_follows_update(data, monkeypatch):
    import advaug.training as tr

    seen = []
    real_step = tr.train_step

    def spy(params, opt, x, targets, loss=tr.softmax_cross_entropy):
        seen.append((getattr(x, "role", None), np.array(x.values), targets.indices.copy(), params))
        return real_step(params, opt, x, targets, loss)

    monkeypatch.setattr(tr, "train_step", spy)
    cfg = TrainConfig(batch_size=16, epsilon=0.3)
    p = fresh()
    train_epoch_adversarial(p, data, cfg, make_optimizer("adam", p))
    pairs = list(zip(seen[0::2], seen[1::2]))
    assert len(pairs) == 5
    for (r0, x0, y0, _), (r1, x1, y1, p1) in pairs:
        assert r0 == "original" and r1 == "adversarial"
        assert np.array_equal(y0, y1)
        # delta is the FGSM step of the parameters after the first update
        g = tr.input_gradient(p1, x0, LabelBatch(y0, 4))
        assert np.array_equal(x1, x0 + 0.3 * np.sign(g))


def test_random_origin_changes_only_delta(data, monkeypatch):
    import advaug.training as tr

    calls = []
    monkeypatch.setattr(tr, "fgsm_perturbation", lambda g, e: calls.append("fgsm") or tr.random_perturbation(seeded_rng(0), g.shape, e))
    cfg = TrainConfig(batch_size=16, epsilon=0.3, origin="random")
    p = fresh()
    _, opt, recs = train_epoch_adversarial(p, data, cfg, make_optimizer("adam", p))
    assert calls == [] and opt.step == 10 and len(recs) == 5
    prng = substream(0, "perturb", 0)
    x_first = data.features[batch_indices(70, 16, 0, 0)[0]]
    d = tr.random_perturbation(prng, x_first.shape, 0.3).delta
    assert set(np.unique(d)) == {-0.3, 0.3}


def test_loss_decreases_on_reference_like_corpus():
    corpus = generate_corpus(small_corpus_spec(n_train=2000))
    d = LabeledData(corpus.train_noisy, corpus.train_labels, 10)
    cfg = TrainConfig(batch_size=16)
    p = init_params(mlp([20, 32, 32, 10]), substream(0, "init", 0))
    _, _, recs = train_epoch_baseline(p, d, cfg, make_optimizer("adam", p))
    losses = np.array([r.loss_original for r in recs])
    tenth = len(losses) // 10
    assert losses[-tenth:].mean() < losses[:tenth].mean()


def test_early_stopping_returns_best(data):
    cfg = TrainConfig(epochs=10, patience=2, batch_size=16)
    errs = iter([0.5, 0.4, 0.45, 0.4, 0.3])
    snapshots = []

    def dev(p):
        snapshots.append(p)
        return next(errs)

    res = fit(fresh(), cfg, lambda q, o, e: train_epoch_baseline(q, data, cfg, o, e), dev)
    assert res.dev_errors == [0.5, 0.4, 0.45, 0.4]
    assert res.best_epoch == 1 and res.params.identical(snapshots[1])


def test_eval_report_rows_and_csv():
    r = EvalReport("test", ("A", "B"), (1, 3), (10, 10))
    assert r.rates == {"A": 0.1, "B": 0.3}
    assert r.average == pytest.approx(0.2, abs=1e-15)
    assert r.to_csv().splitlines()[0] == "condition,errors,total,rate"
    assert r.rows()[-1][0] == "avg"
    with pytest.raises(ValueError):
        EvalReport("t", ("A",), (11,), (10,))


def test_always_class_zero_scores_point_nine():
    corpus = generate_corpus(small_corpus_spec())
    p = init_params(mlp([20, 10]), seeded_rng(0))
    w = np.zeros((20, 10))
    b = np.zeros(10)
    b[0] = 1.0
    p = p.with_arrays([w, b])
    rep = evaluate(p, corpus, "test")
    for c in "ABCD":
        assert rep.rates[c] == pytest.approx(0.9, abs=1 / 200 + 0.1 * 0.1)
    assert evaluate(p, corpus, "test") == rep
    with pytest.raises(Exception):
        evaluate(p, corpus, "nope")


def test_metrics_format():
    from advaug.training import BatchRecord

    txt = METRICS_HEADER + format_records([BatchRecord(0, 0, 1.5), BatchRecord(0, 1, 1.25, 2.0)])
    lines = txt.splitlines()
    assert lines[0] == "ADVAUG-METRICS v1"
    assert lines[2] == "0\t0\t1.5\t-" and lines[3] == "0\t1\t1.25\t2.0"


def test_run_epoch_custom_loss_is_used(data):
    calls = []

    def loss(logits, t):
        calls.append(1)
        from advaug.network import softmax_cross_entropy

        return softmax_cross_entropy(logits, t)

    p = fresh()
    run_epoch(p, make_optimizer("adam", p), data.features, TrainConfig(batch_size=35), 0, lambda i: LabelBatch(data.labels[i], 4), loss=loss)
    assert len(calls) == 2
    assert forward(p, data.features)[0].shape == (70, 4)
