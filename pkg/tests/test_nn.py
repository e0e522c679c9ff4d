"""Network substrate tests: finite-difference gradient oracles, Adam, I/O."""

import math

import numpy as np
import pytest

from overland.nn import (
    AdamState,
    MlpSpec,
    ParamVector,
    adam_step,
    backward,
    concat_params,
    dump_params,
    forward,
    gaussian_entropy,
    gaussian_logprob,
    gaussian_logprob_grad,
    init_mlp,
    make_param,
    parse_params,
    save_params,
    load_params,
)

# The exact network shapes the project instantiates.
PROJECT_SPECS = [
    MlpSpec((34, 64, 64, 2), activation="tanh"),
    MlpSpec((34, 64, 64, 1), activation="tanh"),
    MlpSpec((1024, 256, 64, 32), activation="relu"),
    MlpSpec((32, 64, 256, 1024), activation="relu"),
    MlpSpec((5, 8, 3), activation="tanh", output_activation="tanh"),
]


def scalar_loss(spec, params, x, direction):
    out, _ = forward(spec, params, x)
    return float(np.sum(out * direction))


# ------------------------------------------------------------- param vector


def test_param_vector_layout_checks():
    with pytest.raises(ValueError):
        ParamVector(np.zeros(5), [("a", (2, 2))])
    with pytest.raises(ValueError):
        ParamVector(np.zeros(8), [("a", (2, 2)), ("a", (4,))])


def test_param_vector_views_share_buffer():
    pv = ParamVector(np.arange(6, dtype=float), [("a", (2, 2)), ("b", (2,))])
    pv.view("a")[0, 0] = 99.0
    assert pv.values[0] == 99.0
    assert pv.view("b").tolist() == [4.0, 5.0]


def test_concat_params_preserves_entries():
    a = make_param("x", np.array([1.0, 2.0]))
    b = make_param("y", np.array([[3.0], [4.0]]))
    merged = concat_params([a, b])
    assert merged.view("x").tolist() == [1.0, 2.0]
    assert merged.view("y").shape == (2, 1)
    assert merged.size == 4


# ------------------------------------------------------------------ forward


def test_spec_validation():
    with pytest.raises(ValueError):
        MlpSpec((5,))
    with pytest.raises(ValueError):
        MlpSpec((5, 0, 2))
    with pytest.raises(ValueError):
        MlpSpec((5, 3), activation="sigmoid")


def test_init_bounds_and_zero_biases():
    spec = MlpSpec((10, 7, 3))
    pv = init_mlp(spec, np.random.default_rng(0))
    assert np.all(pv.view("b0") == 0.0) and np.all(pv.view("b1") == 0.0)
    assert np.max(np.abs(pv.view("W0"))) <= math.sqrt(6.0 / 17)
    assert np.max(np.abs(pv.view("W1"))) <= math.sqrt(6.0 / 10)


def test_forward_zero_params_zero_output():
    spec = MlpSpec((4, 5, 2), output_activation="tanh")
    pv = init_mlp(spec, np.random.default_rng(0))
    pv.values[:] = 0.0
    out, _ = forward(spec, pv, np.array([1.0, -2.0, 3.0, 4.0]))
    assert np.all(out == 0.0)


def test_forward_identity_linear_net():
    spec = MlpSpec((3, 3))
    pv = init_mlp(spec, np.random.default_rng(0))
    pv.view("W0")[...] = np.eye(3)
    pv.view("b0")[...] = 0.0
    x = np.array([0.3, -1.2, 2.0])
    out, _ = forward(spec, pv, x)
    assert np.allclose(out, x, atol=0)


def test_forward_deterministic_and_batch_consistent():
    spec = MlpSpec((6, 8, 4), activation="tanh")
    pv = init_mlp(spec, np.random.default_rng(1))
    x = np.random.default_rng(2).normal(size=(5, 6))
    out1, _ = forward(spec, pv, x)
    out2, _ = forward(spec, pv, x)
    assert np.array_equal(out1, out2)
    rows = np.stack([forward(spec, pv, row)[0] for row in x])
    assert np.allclose(out1, rows, atol=1e-15)


def test_forward_shape_mismatch():
    spec = MlpSpec((6, 4))
    pv = init_mlp(spec, np.random.default_rng(1))
    with pytest.raises(ValueError):
        forward(spec, pv, np.zeros(5))


# ----------------------------------------------------------------- backward


def test_backward_scalar_linear_net():
    spec = MlpSpec((1, 1))
    pv = init_mlp(spec, np.random.default_rng(0))
    pv.view("W0")[...] = 2.5
    x = np.array([1.7])
    out, tape = forward(spec, pv, x)
    grads, gx = backward(spec, pv, tape, np.array([3.0]))
    assert grads.view("W0")[0, 0] == pytest.approx(1.7 * 3.0)
    assert grads.view("b0")[0] == pytest.approx(3.0)
    assert gx[0] == pytest.approx(2.5 * 3.0)


def test_backward_zero_output_grad():
    spec = MlpSpec((4, 6, 2))
    pv = init_mlp(spec, np.random.default_rng(3))
    out, tape = forward(spec, pv, np.ones(4))
    grads, gx = backward(spec, pv, tape, np.zeros(2))
    assert np.all(grads.values == 0.0) and np.all(gx == 0.0)


@pytest.mark.parametrize("spec_idx", range(len(PROJECT_SPECS)))
def test_backward_matches_finite_differences(spec_idx):
    spec = PROJECT_SPECS[spec_idx]
    rng = np.random.default_rng(100 + spec_idx)
    pv = init_mlp(spec, rng)
    x = rng.normal(size=spec.layer_sizes[0])
    direction = rng.normal(size=spec.layer_sizes[-1])
    out, tape = forward(spec, pv, x)
    grads, gx = backward(spec, pv, tape, direction)

    h = 1e-5
    idx = rng.integers(0, pv.size, size=20)
    for i in idx:
        orig = pv.values[i]
        pv.values[i] = orig + h
        up = scalar_loss(spec, pv, x, direction)
        pv.values[i] = orig - h
        down = scalar_loss(spec, pv, x, direction)
        pv.values[i] = orig
        fd = (up - down) / (2 * h)
        got = grads.values[i]
        denom = max(abs(fd), abs(got), 1e-8)
        assert abs(got - fd) / denom < 1e-4, "param %d of spec %d" % (i, spec_idx)

    for j in rng.integers(0, x.size, size=5):
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        fd = (scalar_loss(spec, pv, xp, direction) -
              scalar_loss(spec, pv, xm, direction)) / (2 * h)
        denom = max(abs(fd), abs(gx[j]), 1e-8)
        assert abs(gx[j] - fd) / denom < 1e-4


def test_backward_batch_equals_sum_of_samples():
    spec = MlpSpec((5, 7, 3), activation="tanh")
    pv = init_mlp(spec, np.random.default_rng(8))
    xs = np.random.default_rng(9).normal(size=(4, 5))
    gs = np.random.default_rng(10).normal(size=(4, 3))
    out, tape = forward(spec, pv, xs)
    grads, _ = backward(spec, pv, tape, gs)
    total = np.zeros(pv.size)
    for x, g in zip(xs, gs):
        _, tape_i = forward(spec, pv, x)
        grads_i, _ = backward(spec, pv, tape_i, g)
        total += grads_i.values
    assert np.allclose(grads.values, total, atol=1e-12)


def test_backward_accumulates_into_shared_vector():
    spec = MlpSpec((3, 4, 2))
    pv = init_mlp(spec, np.random.default_rng(11), prefix="net_")
    extra = make_param("other", np.zeros(5))
    merged = concat_params([pv, extra])
    out, tape = forward(spec, merged, np.ones(3), prefix="net_")
    acc = merged.zeros_like()
    backward(spec, merged, tape, np.ones(2), prefix="net_", into=acc)
    backward(spec, merged, tape, np.ones(2), prefix="net_", into=acc)
    single, _ = backward(spec, merged, tape, np.ones(2), prefix="net_")
    assert np.allclose(acc.view("net_W0"), 2 * single.view("net_W0"))
    assert np.all(acc.view("other") == 0.0)


# --------------------------------------------------------------------- adam


def test_adam_zero_gradient_no_move():
    pv = make_param("w", np.array([1.0, -2.0]))
    state = AdamState.for_params(pv, learning_rate=0.1)
    new, _ = adam_step(pv, pv.zeros_like(), state)
    assert np.array_equal(new.values, pv.values)


def test_adam_first_step_magnitude():
    pv = make_param("w", np.zeros(4))
    state = AdamState.for_params(pv, learning_rate=0.01)
    g = make_param("w", np.array([0.5, -3.0, 10.0, -0.001]))
    new, state = adam_step(pv, g, state)
    # Bias-corrected first step is lr * sign(g) up to epsilon.
    assert np.allclose(new.values, -0.01 * np.sign(g.values), rtol=1e-4)
    assert state.step_count == 1


def test_adam_scale_invariant_first_direction():
    pv = make_param("w", np.array([0.3, -0.7, 1.1]))
    g = make_param("w", np.array([0.2, -0.05, 0.9]))
    g_scaled = make_param("w", g.values * 7.3)
    a, _ = adam_step(pv, g, AdamState.for_params(pv, learning_rate=0.01))
    b, _ = adam_step(pv, g_scaled, AdamState.for_params(pv, learning_rate=0.01))
    assert np.array_equal(np.sign(a.values - pv.values),
                          np.sign(b.values - pv.values))


def test_adam_quadratic_bowl_converges():
    pv = make_param("w", np.array([1.0]))
    state = AdamState.for_params(pv, learning_rate=1e-2)
    for _ in range(2000):
        g = make_param("w", 2.0 * pv.values)
        pv, state = adam_step(pv, g, state)
    assert abs(pv.values[0]) < 1e-3


# ----------------------------------------------------------------- gaussian


def test_gaussian_logprob_peak():
    for d in (1, 2, 5):
        lp = gaussian_logprob(np.zeros(d), np.zeros(d), np.zeros(d))
        assert lp == pytest.approx(-0.5 * d * math.log(2 * math.pi))


def test_gaussian_logprob_unit_sample():
    lp = gaussian_logprob(np.array([0.0]), np.array([0.0]), np.array([1.0]))
    assert lp == pytest.approx(-0.5 - 0.5 * math.log(2 * math.pi))
    assert lp == pytest.approx(-1.41894, abs=1e-5)


def test_gaussian_logprob_batch_shape():
    means = np.zeros((6, 2))
    samples = np.random.default_rng(0).normal(size=(6, 2))
    lp = gaussian_logprob(means, np.zeros(2), samples)
    assert lp.shape == (6,)


def test_gaussian_grads_match_finite_differences():
    rng = np.random.default_rng(5)
    mean = rng.normal(size=3)
    log_std = rng.normal(size=3) * 0.3
    sample = rng.normal(size=3)
    d_mean, d_log_std = gaussian_logprob_grad(mean, log_std, sample)
    h = 1e-6
    for j in range(3):
        for arr, grad in ((mean, d_mean), (log_std, d_log_std)):
            up, down = arr.copy(), arr.copy()
            up[j] += h
            down[j] -= h
            if arr is mean:
                fd = (gaussian_logprob(up, log_std, sample) -
                      gaussian_logprob(down, log_std, sample)) / (2 * h)
            else:
                fd = (gaussian_logprob(mean, up, sample) -
                      gaussian_logprob(mean, down, sample)) / (2 * h)
            assert abs(grad[j] - fd) < 1e-5


def test_gaussian_entropy_value():
    assert gaussian_entropy(np.zeros(2)) == pytest.approx(
        1.0 + math.log(2 * math.pi))
    assert gaussian_entropy(np.array([1.0])) > gaussian_entropy(np.array([0.0]))


# --------------------------------------------------------------- checkpoint


def test_checkpoint_roundtrip_bit_exact(tmp_path):
    spec = MlpSpec((7, 5, 3), activation="relu")
    pv = init_mlp(spec, np.random.default_rng(21), prefix="m_")
    merged = concat_params([pv, make_param("log_std", np.array([-0.5, 0.1]))])
    path = tmp_path / "ckpt.bin"
    save_params(path, merged)
    back = load_params(path)
    assert back.layout == merged.layout
    assert np.array_equal(back.values, merged.values)
    # Serialized form is itself stable.
    assert dump_params(back) == dump_params(merged)


def test_checkpoint_rejects_garbage():
    with pytest.raises(ValueError):
        parse_params(b"not a checkpoint")
