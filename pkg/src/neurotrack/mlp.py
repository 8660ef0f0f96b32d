"""Small multilayer perceptron with exact backprop, used as an online learner.

Hidden layers use ``tanh``; the output layer is linear. Gradients are
always taken of the scalar ``output . seed`` where ``seed`` is an
externally supplied output-error vector, which is what feedback-error
learning needs (there is no loss function inside the net).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "MlpNet",
    "init_net",
    "zero_net",
    "mlp_forward",
    "mlp_gradient",
    "sgd_update",
    "grad_check",
    "random_grad_checks",
    "save_csv",
    "load_csv",
]

ACTIVATION_BOUND = 1.0  # sup |tanh|


@dataclass(frozen=True)
class MlpNet:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        ws = tuple(np.asarray(w, dtype=float) for w in self.weights)
        bs = tuple(np.asarray(b, dtype=float) for b in self.biases)
        if not ws or len(ws) != len(bs):
            raise ValueError("need one bias vector per weight matrix")
        for i, (w, b) in enumerate(zip(ws, bs)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ValueError(f"layer {i}: weight {w.shape} / bias {b.shape} mismatch")
            if i and w.shape[1] != ws[i - 1].shape[0]:
                raise ValueError(f"layer {i}: expects {w.shape[1]} inputs, previous layer gives {ws[i - 1].shape[0]}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {i}: non-finite parameters")
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[1]

    @property
    def n_outputs(self) -> int:
        return self.weights[-1].shape[0]

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def equals(self, other: "MlpNet") -> bool:
        return self.layer_sizes == other.layer_sizes and all(
            np.array_equal(a, b) for a, b in zip(self.params(), other.params())
        )


def init_net(layer_sizes: Sequence[int], seed: int = 0, scale: float = 0.1) -> MlpNet:
    """Uniform(-scale, scale) weights from a seeded generator, zero biases."""
    sizes = [int(n) for n in layer_sizes]
    if len(sizes) < 2 or any(n <= 0 for n in sizes):
        raise ValueError(f"invalid layer sizes {layer_sizes}")
    rng = np.random.default_rng(seed)
    ws, bs = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        ws.append(rng.uniform(-scale, scale, size=(n_out, n_in)))
        bs.append(np.zeros(n_out))
    return MlpNet(tuple(ws), tuple(bs))


def zero_net(layer_sizes: Sequence[int]) -> MlpNet:
    sizes = [int(n) for n in layer_sizes]
    return MlpNet(
        tuple(np.zeros((o, i)) for i, o in zip(sizes[:-1], sizes[1:])),
        tuple(np.zeros(o) for o in sizes[1:]),
    )


def _check_input(net: MlpNet, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (net.n_inputs,):
        raise ValueError(f"input has shape {x.shape}, net expects ({net.n_inputs},)")
    return x


def _forward_trace(net: MlpNet, x: np.ndarray) -> list[np.ndarray]:
    acts = [x]
    last = len(net.weights) - 1
    a = x
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = w @ a + b
        a = z if i == last else np.tanh(z)
        acts.append(a)
    return acts


def mlp_forward(net: MlpNet, x) -> np.ndarray:
    return _forward_trace(net, _check_input(net, x))[-1]


def mlp_gradient(net: MlpNet, x, output_error) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-layer ``(dW, db)`` of ``mlp_forward(net, x) . output_error``."""
    x = _check_input(net, x)
    delta = np.asarray(output_error, dtype=float)
    if delta.shape != (net.n_outputs,):
        raise ValueError(f"output error has shape {delta.shape}, net has {net.n_outputs} outputs")
    acts = _forward_trace(net, x)
    grads = [None] * len(net.weights)
    for i in range(len(net.weights) - 1, -1, -1):
        grads[i] = (np.outer(delta, acts[i]), delta.copy())
        if i:
            a = acts[i]
            delta = (net.weights[i].T @ delta) * (1.0 - a * a)
    return grads


def sgd_update(net: MlpNet, grads, learning_rate: float) -> MlpNet:
    """Return ``params + learning_rate * grads``.

    The plus sign is deliberate: callers seed the gradient with the
    direction the output should move in (see feedback-error learning).
    """
    if len(grads) != len(net.weights):
        raise ValueError("gradient list does not match the number of layers")
    ws, bs = [], []
    for (w, b), (gw, gb) in zip(zip(net.weights, net.biases), grads):
        if np.shape(gw) != w.shape or np.shape(gb) != b.shape:
            raise ValueError("gradient shapes do not match parameters")
        ws.append(w + learning_rate * gw)
        bs.append(b + learning_rate * gb)
    return MlpNet(tuple(ws), tuple(bs))


def _rel_dev(a: np.ndarray, n: np.ndarray) -> float:
    scale = max(np.linalg.norm(a), np.linalg.norm(n))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(a - n) / scale)


def grad_check(net: MlpNet, x, output_error=None, eps: float = 1e-6) -> float:
    """Max relative deviation of analytic gradients from central differences.

    Deviation is measured per parameter array as ``|a - n| / max(|a|, |n|)``
    (2-norms), so individual near-zero entries do not blow it up. Returns 0
    when both sides vanish.
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    x = _check_input(net, x)
    err = np.ones(net.n_outputs) if output_error is None else np.asarray(output_error, dtype=float)
    analytic = mlp_gradient(net, x, err)

    def objective(ws, bs):
        return float(mlp_forward(MlpNet(tuple(ws), tuple(bs)), x) @ err)

    worst = 0.0
    ws = [w.copy() for w in net.weights]
    bs = [b.copy() for b in net.biases]
    for layer in range(len(ws)):
        for group, target in ((ws, 0), (bs, 1)):
            arr = group[layer]
            numeric = np.zeros_like(arr)
            for idx in np.ndindex(arr.shape):
                orig = arr[idx]
                arr[idx] = orig + eps
                fp = objective(ws, bs)
                arr[idx] = orig - eps
                fm = objective(ws, bs)
                arr[idx] = orig
                numeric[idx] = (fp - fm) / (2.0 * eps)
            worst = max(worst, _rel_dev(analytic[layer][target], numeric))
    return worst


def random_grad_checks(
    count: int,
    seed: int = 0,
    sizes: Sequence[int] = (6, 12, 2),
    eps: float = 1e-6,
) -> list[float]:
    """Grad-check ``count`` seeded random (net, input, output error) triples."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        net = init_net(sizes, seed=int(rng.integers(2**31)), scale=1.0)
        net = MlpNet(net.weights, tuple(rng.normal(size=b.shape) for b in net.biases))
        x = rng.normal(size=net.n_inputs)
        err = rng.normal(size=net.n_outputs)
        out.append(grad_check(net, x, err, eps))
    return out


def save_csv(net: MlpNet, path) -> None:
    """Write ``layer sizes`` then each layer's weight rows and bias row."""
    lines = [",".join(str(n) for n in net.layer_sizes)]
    for w, b in zip(net.weights, net.biases):
        lines.extend(",".join(repr(float(v)) for v in row) for row in w)
        lines.append(",".join(repr(float(v)) for v in b))
    Path(path).write_text("\n".join(lines) + "\n")


def load_csv(path) -> MlpNet:
    rows = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not rows:
        raise ValueError(f"{path}: empty weight file")
    sizes = [int(tok) for tok in rows[0].split(",")]
    ws, bs = [], []
    pos = 1
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        block = rows[pos : pos + n_out + 1]
        if len(block) != n_out + 1:
            raise ValueError(f"{path}: truncated weight file")
        w = np.array([[float(t) for t in r.split(",")] for r in block[:n_out]])
        if w.shape != (n_out, n_in):
            raise ValueError(f"{path}: layer weight shape {w.shape}, expected {(n_out, n_in)}")
        ws.append(w)
        bs.append(np.array([float(t) for t in block[-1].split(",")]))
        pos += n_out + 1
    if pos != len(rows):
        raise ValueError(f"{path}: trailing data after last layer")
    return MlpNet(tuple(ws), tuple(bs))
