"""Three-layer perceptron (12 inputs, 5 hidden, 5 outputs) with Fermi activation.

There are no bias units: the two weight matrices fully determine the map.
Training is plain per-sample backpropagation on squared error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

N_IN, N_HIDDEN, N_OUT = 12, 5, 5

# weight tables, x 1000
_START_IN_HIDDEN = [50] * 8 + [1, 1, 10, 10]
_START_HIDDEN_OUT = [
    [1, 1, 1, 1, -1],
    [1, 1, 1, -1, 1],
    [1, 1, 1, -1, -1],
    [1, 1, -1, -1, -1],
    [1, -1, 1, -1, -1],
]
_FINAL_IN_HIDDEN = [
    [83, 327, 47, -36, 185, 158, 38, 34, 12, -21, -158, -2],
    [47, 43, 55, 46, 52, 50, 51, 50, 10, -53, -3, 21],
    [86, 81, 291, -63, -22, 9, 10, 27, -53, -13, -37, 158],
    [19, 69, 92, 96, -7, 36, 57, 58, 54, -10, -114, 64],
    [72, -16, 48, 139, 36, 32, 56, 65, -12, -16, 2, 226],
]
_FINAL_HIDDEN_OUT = [
    [1737, 728, 912, 3656, -808],
    [867, 836, -3168, -665, 1831],
    [557, 1062, 1093, -1139, -2168],
    [3720, 1136, -1904, -535, 4],
    [1816, -1198, 5837, 228, -2136],
]


def fermi(x):
    """Logistic sigmoid 1 / (1 + exp(-x)), evaluated without overflow."""
    x = np.asarray(x, dtype=float)
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return out if out.ndim else float(out)


@dataclass
class PerceptronModel:
    w_in_hidden: np.ndarray  # (5, 12)
    w_hidden_out: np.ndarray  # (5, 5)

    def __post_init__(self):
        self.w_in_hidden = np.array(self.w_in_hidden, dtype=float)
        self.w_hidden_out = np.array(self.w_hidden_out, dtype=float)
        if self.w_in_hidden.shape != (N_HIDDEN, N_IN) or self.w_hidden_out.shape != (N_OUT, N_HIDDEN):
            raise ValueError(
                f"expected weight shapes (5, 12) and (5, 5), got "
                f"{self.w_in_hidden.shape} and {self.w_hidden_out.shape}"
            )
        if not (np.isfinite(self.w_in_hidden).all() and np.isfinite(self.w_hidden_out).all()):
            raise ValueError("weights must be finite")

    def copy(self) -> "PerceptronModel":
        return PerceptronModel(self.w_in_hidden.copy(), self.w_hidden_out.copy())

    def forward(self, x) -> np.ndarray:
        return forward(self, x)


def init_paper_start() -> PerceptronModel:
    """The published starting weights: identical positive rows into the hidden layer, +-1/1000 out."""
    w1 = np.tile(np.array(_START_IN_HIDDEN, dtype=float) / 1000.0, (N_HIDDEN, 1))
    w2 = np.array(_START_HIDDEN_OUT, dtype=float) / 1000.0
    return PerceptronModel(w1, w2)


def load_paper_final() -> PerceptronModel:
    """The published weights after 5000 training iterations."""
    return PerceptronModel(
        np.array(_FINAL_IN_HIDDEN, dtype=float) / 1000.0,
        np.array(_FINAL_HIDDEN_OUT, dtype=float) / 1000.0,
    )


def init_random(seed: int, scale: float = 0.05) -> PerceptronModel:
    rng = np.random.default_rng(seed)
    return PerceptronModel(
        rng.uniform(-scale, scale, (N_HIDDEN, N_IN)),
        rng.uniform(-scale, scale, (N_OUT, N_HIDDEN)),
    )


def forward(m: PerceptronModel, x) -> np.ndarray:
    """Outputs for one input vector, or for a batch of shape (n, 12)."""
    x = np.asarray(x, dtype=float)
    hidden = fermi(x @ m.w_in_hidden.T)
    return fermi(hidden @ m.w_hidden_out.T)


def gradient(m: PerceptronModel, x, target) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of 0.5 * sum((out - target)**2) with respect to both weight matrices."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(target, dtype=float)
    h = fermi(m.w_in_hidden @ x)
    o = fermi(m.w_hidden_out @ h)
    delta_out = (o - t) * o * (1.0 - o)
    delta_hidden = (m.w_hidden_out.T @ delta_out) * h * (1.0 - h)
    return np.outer(delta_hidden, x), np.outer(delta_out, h)


def evaluate(m: PerceptronModel, inputs, targets) -> float:
    """Mean absolute deviation over samples and output cells."""
    x = np.asarray(inputs, dtype=float).reshape(-1, N_IN)
    t = np.asarray(targets, dtype=float).reshape(-1, N_OUT)
    if len(x) == 0:
        raise ValueError("empty set")
    return float(np.abs(forward(m, x) - t).mean())


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5000
    learning_rate: float = 0.5
    init: str = "paper"  # "paper" or "random:<seed>"
    update: str = "per-sample"  # or "batch"
    # "rms": train on inputs divided by their root mean square over the set,
    # then fold the scale back into the input weights; "none": raw inputs
    input_scaling: str = "rms"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if not self.learning_rate >= 0:
            raise ValueError("learning rate must be non-negative")
        if self.update not in ("per-sample", "batch"):
            raise ValueError(f"unknown update scheme {self.update!r}")
        if self.input_scaling not in ("rms", "none"):
            raise ValueError(f"unknown input scaling {self.input_scaling!r}")
        initial_model(self.init)  # validates the spelling


def initial_model(init: str) -> PerceptronModel:
    if init == "paper":
        return init_paper_start()
    if init.startswith("random:"):
        try:
            seed = int(init.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad random seed in init {init!r}") from None
        return init_random(seed)
    raise ValueError(f"init must be 'paper' or 'random:SEED', got {init!r}")


@dataclass
class TrainReport:
    deviations: list[float] = field(default_factory=list)
    model: PerceptronModel | None = None
    input_scale: np.ndarray | None = None

    @property
    def final_deviation(self) -> float:
        return self.deviations[-1]


def train(
    samples: Sequence[tuple[Sequence[float], Sequence[float]]],
    cfg: TrainConfig = TrainConfig(),
    model: PerceptronModel | None = None,
) -> TrainReport:
    """Gradient descent over the samples in the given order.

    One epoch is one pass over every sample. The mean absolute deviation of
    the whole set is recorded after each epoch. The returned model always
    acts on raw input vectors, whatever ``cfg.input_scaling`` says.
    """
    if not samples:
        raise ValueError("empty training set")
    x = np.array([s[0] for s in samples], dtype=float).reshape(-1, N_IN)
    t = np.array([s[1] for s in samples], dtype=float).reshape(-1, N_OUT)
    if ((t < 0) | (t > 1)).any():
        raise ValueError("targets must lie in [0, 1]")
    scale = np.ones(N_IN)
    if cfg.input_scaling == "rms":
        rms = np.sqrt((x ** 2).mean(axis=0))
        scale = np.where(rms > 0, rms, 1.0)
    if model is None:
        m = initial_model(cfg.init)
    else:
        m = PerceptronModel(model.w_in_hidden * scale, model.w_hidden_out)
    w1, w2 = m.w_in_hidden, m.w_hidden_out
    report = TrainReport(input_scale=scale)

    with np.errstate(over="ignore"):
        _run_epochs(x / scale, t, w1, w2, cfg, report)
    report.model = PerceptronModel(w1 / scale, w2)
    return report


def _run_epochs(x, t, w1, w2, cfg: TrainConfig, report: TrainReport) -> None:
    lr = cfg.learning_rate
    for _ in range(cfg.epochs):
        if cfg.update == "per-sample":
            for xi, ti in zip(x, t):
                # inlined gradient(): this loop dominates training time
                h = 1.0 / (1.0 + np.exp(-(w1 @ xi)))
                o = 1.0 / (1.0 + np.exp(-(w2 @ h)))
                d_out = (o - ti) * o * (1.0 - o)
                d_hid = (w2.T @ d_out) * h * (1.0 - h)
                w2 -= lr * np.outer(d_out, h)
                w1 -= lr * np.outer(d_hid, xi)
        else:
            h = fermi(x @ w1.T)
            o = fermi(h @ w2.T)
            d_out = (o - t) * o * (1.0 - o)
            d_hid = (d_out @ w2) * h * (1.0 - h)
            w2 -= lr * d_out.T @ h
            w1 -= lr * d_hid.T @ x
        report.deviations.append(float(np.abs(fermi(fermi(x @ w1.T) @ w2.T) - t).mean()))


# -- model file ---------------------------------------------------------------


def dumps(m: PerceptronModel) -> str:
    lines = [f"perceptron {N_IN} {N_HIDDEN} {N_OUT}"]
    for row in m.w_in_hidden:
        lines.append(" ".join(f"{w:.17g}" for w in row))
    for row in m.w_hidden_out:
        lines.append(" ".join(f"{w:.17g}" for w in row))
    return "\n".join(lines) + "\n"


def loads(text: str) -> PerceptronModel:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or rows[0] != ["perceptron", str(N_IN), str(N_HIDDEN), str(N_OUT)]:
        raise ValueError("not a perceptron model file (expected header 'perceptron 12 5 5')")
    body = rows[1:]
    if len(body) != N_HIDDEN + N_OUT:
        raise ValueError(f"expected {N_HIDDEN + N_OUT} weight rows, got {len(body)}")
    try:
        w1 = np.array([[float(v) for v in r] for r in body[:N_HIDDEN]])
        w2 = np.array([[float(v) for v in r] for r in body[N_HIDDEN:]])
    except ValueError as exc:
        raise ValueError(f"bad weight value: {exc}") from None
    return PerceptronModel(w1, w2)


def save(m: PerceptronModel, path) -> None:
    Path(path).write_text(dumps(m), encoding="utf-8")


def load(path) -> PerceptronModel:
    return loads(Path(path).read_text(encoding="utf-8"))
