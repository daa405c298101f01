import json
import math
from pathlib import Path

import numpy as np
import pytest

from expresso import perceptron as mlp
from expresso.perceptron import (
    PerceptronModel,
    TrainConfig,
    evaluate,
    fermi,
    forward,
    gradient,
    init_paper_start,
    init_random,
    load_paper_final,
    train,
)

GOLDEN = Path(__file__).parent / "data" / "paper_final_golden.json"


def loop_forward(m, x):
    """Reference forward pass written with plain loops and math.exp."""
    sig = lambda z: 1.0 / (1.0 + math.exp(-z))
    h = [sig(sum(m.w_in_hidden[j][i] * x[i] for i in range(12))) for j in range(5)]
    return [sig(sum(m.w_hidden_out[k][j] * h[j] for j in range(5))) for k in range(5)]


def test_fermi_values():
    assert fermi(0.0) == 0.5
    for x in (-30.0, -2.0, 0.3, 5.0, 800.0, -800.0):
        assert fermi(-x) == pytest.approx(1 - fermi(x), abs=1e-15)
    assert np.isfinite(fermi(np.array([-1e4, 1e4]))).all()


@pytest.mark.parametrize("x", [-2.0, 0.0, 3.0])
def test_fermi_derivative(x):
    eps = 1e-5
    fd = (fermi(x + eps) - fermi(x - eps)) / (2 * eps)
    assert fd == pytest.approx(fermi(x) * (1 - fermi(x)), abs=1e-8)


def test_paper_start_spot_values():
    m = init_paper_start()
    assert m.w_in_hidden[2][8] == 0.001
    assert m.w_hidden_out[4][1] == -0.001
    assert m.w_in_hidden[0][0] == 0.050


def test_paper_final_spot_values():
    m = load_paper_final()
    assert m.w_in_hidden[0][1] == 0.327
    assert m.w_hidden_out[4][2] == 5.837
    assert m.w_in_hidden[0][0] == 0.083
    assert m.w_hidden_out[0][3] == 3.656
    assert m.w_in_hidden[1][9] == -0.053


def test_forward_zero_input():
    out = forward(init_paper_start(), np.zeros(12))
    assert out[0] == pytest.approx(fermi(0.0015), abs=1e-15)
    assert out[0] == pytest.approx(0.500375, abs=1e-9)
    zero = PerceptronModel(np.zeros((5, 12)), np.zeros((5, 5)))
    assert (forward(zero, np.arange(12.0)) == 0.5).all()


def test_forward_matches_loops_and_batches(rng):
    m = init_random(3, scale=1.0)
    X = rng.normal(size=(7, 12))
    batch = forward(m, X)
    for x, row in zip(X, batch):
        assert row == pytest.approx(loop_forward(m, x), abs=1e-14)
    out = forward(m, X * 1e6)
    assert ((out > 0) & (out < 1)).all()


def test_golden_outputs_of_final_weights():
    gold = json.loads(GOLDEN.read_text())
    m = load_paper_final()
    for x, expected in zip(gold["inputs"], gold["outputs"]):
        assert forward(m, np.array(x)).tolist() == pytest.approx(expected, abs=1e-12)
        assert loop_forward(m, x) == pytest.approx(expected, abs=1e-12)


def test_model_rejects_bad_shapes_and_values():
    with pytest.raises(ValueError):
        PerceptronModel(np.zeros((5, 11)), np.zeros((5, 5)))
    with pytest.raises(ValueError):
        PerceptronModel(np.full((5, 12), np.nan), np.zeros((5, 5)))


# -- gradients ------------------------------------------------------------------


def loss(m, x, t):
    return 0.5 * float(((forward(m, x) - t) ** 2).sum())


def test_gradient_zero_at_target():
    m = init_random(1)
    x = np.linspace(-1, 1, 12)
    g1, g2 = gradient(m, x, forward(m, x))
    assert not g1.any() and not g2.any()


def test_gradient_finite_differences(rng):
    m = init_random(9, scale=0.8)
    x, t = rng.normal(size=12), rng.uniform(size=5)
    g1, g2 = gradient(m, x, t)
    eps = 1e-5
    for W, G in ((m.w_in_hidden, g1), (m.w_hidden_out, g2)):
        for idx in np.ndindex(W.shape):
            old = W[idx]
            W[idx] = old + eps
            up = loss(m, x, t)
            W[idx] = old - eps
            down = loss(m, x, t)
            W[idx] = old
            assert G[idx] == pytest.approx((up - down) / (2 * eps), rel=1e-4, abs=1e-7)


def test_duplicated_sample_gives_same_per_sample_gradient():
    m = init_random(2)
    x, t = np.ones(12), np.full(5, 0.3)
    a = gradient(m, x, t)
    b = gradient(m.copy(), x.copy(), t.copy())
    assert all(np.array_equal(p, q) for p, q in zip(a, b))


# -- evaluation and training ------------------------------------------------------


def test_evaluate():
    m = init_random(0)
    X = np.random.default_rng(0).normal(size=(4, 12))
    out = forward(m, X)
    assert evaluate(m, X, out) == 0
    assert evaluate(m, X[:1], out[:1] - 0.1) == pytest.approx(0.1)
    perm = [2, 0, 3, 1]
    T = np.clip(out + 0.05, 0, 1)
    assert evaluate(m, X[perm], T[perm]) == pytest.approx(evaluate(m, X, T), rel=1e-14)
    with pytest.raises(ValueError):
        evaluate(m, np.empty((0, 12)), np.empty((0, 5)))


def sample(seed=0):
    r = np.random.default_rng(seed)
    return r.uniform(0.5, 2, 12), r.uniform(0.1, 0.9, 5)


def test_zero_learning_rate_leaves_model_unchanged():
    x, t = sample()
    rep = train([(x, t)], TrainConfig(epochs=3, learning_rate=0.0, input_scaling="none"))
    start = init_paper_start()
    assert np.array_equal(rep.model.w_in_hidden, start.w_in_hidden)
    assert np.array_equal(rep.model.w_hidden_out, start.w_hidden_out)
    assert len(set(rep.deviations)) == 1


def test_single_sample_is_memorised():
    x, t = sample(1)
    for scaling in ("rms", "none"):
        rep = train([(x, t)], TrainConfig(epochs=5000, learning_rate=0.5, input_scaling=scaling))
        assert rep.final_deviation < 0.01
        assert evaluate(rep.model, [x], [t]) == pytest.approx(rep.final_deviation, abs=1e-12)


def test_small_learning_rate_is_monotone():
    x, t = sample(2)
    rep = train([(x, t)], TrainConfig(epochs=100, learning_rate=1e-3))
    d = np.array(rep.deviations)
    assert (np.diff(d) <= 1e-15).all()


def test_training_is_deterministic():
    data = [sample(i) for i in range(4)]
    for init in ("paper", "random:5"):
        for update in ("per-sample", "batch"):
            cfg = TrainConfig(epochs=50, init=init, update=update)
            a, b = train(data, cfg), train(data, cfg)
            assert a.deviations == b.deviations
            assert mlp.dumps(a.model) == mlp.dumps(b.model)


def test_rms_scaling_is_folded_into_model():
    data = [sample(i) for i in range(3)]
    rep = train(data, TrainConfig(epochs=20))
    X = np.array([d[0] for d in data])
    T = np.array([d[1] for d in data])
    assert evaluate(rep.model, X, T) == pytest.approx(rep.final_deviation, rel=1e-12)


def test_warm_start_continues_training():
    data = [sample(i) for i in range(3)]
    first = train(data, TrainConfig(epochs=30))
    more = train(data, TrainConfig(epochs=1, learning_rate=0.0), model=first.model)
    assert more.final_deviation == pytest.approx(first.final_deviation, rel=1e-12)


@pytest.mark.parametrize(
    "kw",
    [{"epochs": 0}, {"learning_rate": -1}, {"init": "gaussian"}, {"init": "random:x"}, {"update": "online"}],
)
def test_train_config_validation(kw):
    with pytest.raises(ValueError):
        TrainConfig(**kw)


def test_train_rejects_bad_sets():
    with pytest.raises(ValueError):
        train([])
    with pytest.raises(ValueError):
        train([(np.ones(12), np.full(5, 1.5))])


# -- model files ----------------------------------------------------------------


def test_model_file_round_trip(tmp_path):
    m = init_random(11, scale=3.0)
    mlp.save(m, tmp_path / "m.txt")
    text = (tmp_path / "m.txt").read_text()
    assert text.splitlines()[0] == "perceptron 12 5 5"
    back = mlp.load(tmp_path / "m.txt")
    assert np.array_equal(back.w_in_hidden, m.w_in_hidden)
    assert np.array_equal(back.w_hidden_out, m.w_hidden_out)


@pytest.mark.parametrize(
    "text",
    ["", "svm b 1\n", "perceptron 12 5 5\n1 2 3\n", "perceptron 12 5 5\n" + ("x " * 12 + "\n") * 5 + ("0 " * 5 + "\n") * 5],
)
def test_bad_model_files(text):
    with pytest.raises(ValueError):
        mlp.loads(text)
