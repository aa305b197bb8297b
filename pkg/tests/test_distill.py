import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from advaug.distill import ParallelData, TsConfig, blended_targets, teacher_posteriors, train_epoch_ts, ts_loss_grad
from advaug.network import LabelBatch, SoftTargetBatch, init_params, make_optimizer, mlp, softmax, forward
from advaug.network.loss import cross_entropy_dense, softmax_cross_entropy
from advaug.numerics import ShapeError, seeded_rng, substream
from advaug.training import LabeledData, TrainConfig, batch_indices, train_epoch_adversarial, train_epoch_baseline, train_step


@pytest.fixture(scope="module")
def pdata():
    rng = seeded_rng(1)
    clean = rng.standard_normal((60, 4))
    noisy = clean + 0.5 * rng.standard_normal((60, 4))
    labels = (clean[:, 0] > 0).astype(int) + (clean[:, 1] > 0).astype(int)
    return ParallelData(clean, noisy, labels, 3)


def nets():
    spec = mlp([4, 6, 3])
    return init_params(spec, substream(5, "init", 1), "teacher"), init_params(spec, substream(5, "init", 0), "student")


@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_blended_target_equivalence(seed, alpha):
    rng = np.random.default_rng(seed)
    logits = rng.standard_normal((6, 5)) * 2
    hard = LabelBatch(rng.integers(0, 5, 6), 5)
    soft = SoftTargetBatch(softmax(rng.standard_normal((6, 5))))
    j, g = ts_loss_grad(logits, hard, soft, TsConfig(alpha))
    jh, gh = softmax_cross_entropy(logits, hard)
    js, gs = softmax_cross_entropy(logits, soft)
    assert abs(j - (alpha * jh + (1 - alpha) * js)) <= 1e-12
    np.testing.assert_allclose(g, alpha * gh + (1 - alpha) * gs, rtol=0, atol=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        TsConfig(alpha=1.5)
    with pytest.raises(ValueError):
        TsConfig(fgsm_loss="soft")
    with pytest.raises(ShapeError):
        ParallelData(np.zeros((3, 2)), np.zeros((4, 2)), np.zeros(3, int), 2)


def test_alpha_one_is_hard_label_training(pdata):
    teacher, student = nets()
    cfg = TrainConfig(batch_size=16)
    a, oa, _ = train_epoch_ts(teacher, student, pdata, TsConfig(1.0), cfg, make_optimizer("adam", student))
    b, ob, _ = train_epoch_baseline(student, LabeledData(pdata.noisy, pdata.labels, 3), cfg, make_optimizer("adam", student))
    assert a.identical(b) and oa.step == ob.step


def test_alpha_zero_is_soft_target_training(pdata):
    teacher, student = nets()
    cfg = TrainConfig(batch_size=16)
    a, _, _ = train_epoch_ts(teacher, student, pdata, TsConfig(0.0), cfg, make_optimizer("adam", student))
    b, o = student, make_optimizer("adam", student)
    for idx in batch_indices(len(pdata), 16, 0, 0):
        soft = SoftTargetBatch(softmax(forward(teacher, pdata.clean[idx])[0]))
        b, o, _ = train_step(b, o, pdata.noisy[idx], soft)
    assert a.identical(b)


def test_alpha_one_with_adversarial_pass(pdata):
    teacher, student = nets()
    cfg = TrainConfig(batch_size=16, epsilon=0.2)
    a, _, _ = train_epoch_ts(teacher, student, pdata, TsConfig(1.0), cfg, make_optimizer("adam", student))
    b, _, _ = train_epoch_adversarial(student, LabeledData(pdata.noisy, pdata.labels, 3), cfg, make_optimizer("adam", student))
    assert a.identical(b)


def test_teacher_untouched_and_sees_clean_inputs(pdata, monkeypatch):
    import advaug.distill as ds

    teacher, student = nets()
    before = [w.copy() for w in teacher.arrays()]
    seen = []
    real = ds.teacher_posteriors
    monkeypatch.setattr(ds, "teacher_posteriors", lambda t, x: seen.append(np.array(x)) or real(t, x))
    train_epoch_ts(teacher, student, pdata, TsConfig(0.5), TrainConfig(batch_size=20, epsilon=0.1), make_optimizer("adam", student))
    assert all(np.array_equal(a, b) for a, b in zip(before, teacher.arrays()))
    assert len(seen) == 3  # once per batch; reused for the adversarial copy
    for idx, x in zip(batch_indices(60, 20, 0, 0), seen):
        assert np.array_equal(x, pdata.clean[idx])


def test_fgsm_loss_choice_matters(pdata):
    teacher, student = nets()
    cfg = TrainConfig(batch_size=16, epsilon=0.3)
    a, _, _ = train_epoch_ts(teacher, student, pdata, TsConfig(0.5, "combined"), cfg, make_optimizer("adam", student))
    b, _, _ = train_epoch_ts(teacher, student, pdata, TsConfig(0.5, "hard"), cfg, make_optimizer("adam", student))
    assert not a.identical(b)


def test_spec_mismatch(pdata):
    teacher, _ = nets()
    other = init_params(mlp([4, 5, 3]), seeded_rng(0))
    with pytest.raises(ShapeError):
        train_epoch_ts(teacher, other, pdata, TsConfig(), TrainConfig(), make_optimizer("adam", other))


def test_teacher_posteriors_rows():
    teacher, _ = nets()
    post = teacher_posteriors(teacher, seeded_rng(0).standard_normal((5, 4)))
    np.testing.assert_allclose(post.probs.sum(axis=1), 1.0, atol=1e-12)
    blended = blended_targets(LabelBatch(np.zeros(5, int), 3), post, 0.25)
    np.testing.assert_allclose(blended.sum(axis=1), 1.0, atol=1e-12)
    j, _ = cross_entropy_dense(np.zeros((5, 3)), blended)
    assert j == pytest.approx(np.log(3))

