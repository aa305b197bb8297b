import numpy as np
import pytest

from advaug.network import adam_step, init_params, make_optimizer, mlp, optimizer_step, sgd_step
from advaug.network.optim import ADAM_DEFAULTS
from advaug.numerics import ShapeError, seeded_rng


def _pair(seed=0):
    rng = seeded_rng(seed)
    p = init_params(mlp([3, 4, 2]), rng)
    g = p.with_arrays([rng.standard_normal(a.shape) for a in p.arrays()], role="gradient")
    return p, g


def test_sgd_formula():
    p, g = _pair()
    q = sgd_step(p, g, 0.1)
    for a, b, c in zip(p.arrays(), g.arrays(), q.arrays()):
        assert np.array_equal(c, a - 0.1 * b)


def test_sgd_needs_lr():
    p, _ = _pair()
    with pytest.raises(ValueError):
        make_optimizer("sgd", p)
    with pytest.raises(ValueError):
        make_optimizer("rmsprop", p)


def test_adam_defaults_and_first_step():
    p, g = _pair(1)
    st = make_optimizer("adam", p)
    assert (st.lr, st.beta1, st.beta2, st.eps) == tuple(ADAM_DEFAULTS[k] for k in ("lr", "beta1", "beta2", "eps"))
    q, st2 = adam_step(p, g, st)
    assert st2.step == 1
    # bias-corrected first step moves each coordinate by about lr * sign(g)
    for a, b, c in zip(p.arrays(), g.arrays(), q.arrays()):
        np.testing.assert_allclose(a - c, 1e-3 * b / (np.abs(b) + 1e-8), rtol=1e-9, atol=1e-15)


def test_adam_oracle_three_steps():
    p, g = _pair(2)
    st = make_optimizer("adam", p, lr=0.01)
    m = [np.zeros_like(a) for a in p.arrays()]
    v = [np.zeros_like(a) for a in p.arrays()]
    ref = [a.copy() for a in p.arrays()]
    cur = p
    for t in range(1, 4):
        cur, st = optimizer_step(cur, g, st)
        for i, gi in enumerate(g.arrays()):
            m[i] = 0.9 * m[i] + 0.1 * gi
            v[i] = 0.999 * v[i] + 0.001 * gi * gi
            ref[i] = ref[i] - 0.01 * (m[i] / (1 - 0.9**t)) / (np.sqrt(v[i] / (1 - 0.999**t)) + 1e-8)
    for a, b in zip(cur.arrays(), ref):
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-15)
    assert st.step == 3


def test_step_counter_advances_for_sgd():
    p, g = _pair()
    st = make_optimizer("sgd", p, lr=0.5)
    _, st = optimizer_step(p, g, st)
    _, st = optimizer_step(p, g, st)
    assert st.step == 2


def test_layout_mismatch():
    p, _ = _pair()
    other = init_params(mlp([3, 5, 2]), seeded_rng(0))
    with pytest.raises(ShapeError):
        sgd_step(p, other, 0.1)


def test_originals_untouched():
    p, g = _pair()
    before = [a.copy() for a in p.arrays()]
    optimizer_step(p, g, make_optimizer("adam", p))
    assert all(np.array_equal(a, b) for a, b in zip(before, p.arrays()))
