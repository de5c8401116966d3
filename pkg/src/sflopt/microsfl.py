"""Executable verification of the split-training protocol on tiny dense nets.

Each device owns the layers up to its split point; the server owns the rest,
one back-end copy per device.  An iteration runs the device forward pass,
ships the boundary activations (and labels) to the server, finishes the
forward pass there, backpropagates down to the boundary, returns the
boundary gradient, and applies plain SGD on both sides.  Every
``local_steps`` iterations the server averages the layers that all back-ends
share, i.e. everything above the highest split point.

Split point 0 is a degenerate mode in which devices compute nothing and all
layers are averaged, which makes a run equal to FedAvg; it exists so that
equivalence can be tested against a reference FedAvg loop.

Transport is semantic only (no latency); note that shipping activations and
labels to the server is what the protocol prescribes, which has privacy
implications outside this module's scope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .rng import rng_stream


@dataclass
class DenseLayer:
    weights: np.ndarray
    bias: np.ndarray

    def copy(self):
        return DenseLayer(self.weights.copy(), self.bias.copy())


@dataclass
class MicroNet:
    """A stack of dense layers; hidden activations relu, final softmax."""

    layers: list[DenseLayer]
    activations: tuple[str, ...]

    def __post_init__(self):
        if len(self.layers) != len(self.activations):
            raise ValueError("one activation per layer required")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.weights.shape[1] != b.weights.shape[0]:
                raise ValueError("layer dimension chaining broken")

    def copy(self):
        return MicroNet([l.copy() for l in self.layers], self.activations)

    @property
    def num_layers(self):
        return len(self.layers)


def init_micronet(dims, rng) -> MicroNet:
    """He-initialized relu net with a softmax-final output layer."""
    layers = [
        DenseLayer(
            rng.normal(0.0, np.sqrt(2.0 / din), size=(din, dout)),
            np.zeros(dout),
        )
        for din, dout in zip(dims, dims[1:])
    ]
    acts = ("relu",) * (len(layers) - 1) + ("softmax_final",)
    return MicroNet(layers, acts)


def _forward(layers, activations, x):
    h = x
    caches = []
    for layer, act in zip(layers, activations):
        z = h @ layer.weights + layer.bias
        caches.append((h, z))
        h = np.maximum(z, 0.0) if act == "relu" else z
    return h, caches


def _softmax_xent(logits, labels):
    shifted = logits - logits.max(axis=1, keepdims=True)
    expz = np.exp(shifted)
    probs = expz / expz.sum(axis=1, keepdims=True)
    n = len(labels)
    loss = float(-np.log(probs[np.arange(n), labels]).mean())
    grad = probs
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n


def _backward(layers, activations, caches, dout):
    """Gradients for a layer stack given the gradient at its output."""
    grads = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        h, z = caches[i]
        dz = dout * (z > 0.0) if activations[i] == "relu" else dout
        grads[i] = (h.T @ dz, dz.sum(axis=0))
        dout = dz @ layers[i].weights.T
    return grads, dout


def _apply_sgd(layers, grads, lr):
    for layer, (dw, db) in zip(layers, grads):
        layer.weights -= lr * dw
        layer.bias -= lr * db


def split_forward_backward(front, back, activations, x, labels):
    """One split forward/backward pass without updates.

    Returns (loss, front grads, back grads, boundary gradient); the boundary
    gradient is what the server sends back to the device.
    """
    n_front = len(front)
    a_boundary, front_caches = _forward(front, activations[:n_front], x)
    logits, back_caches = _forward(back, activations[n_front:], a_boundary)
    loss, dlogits = _softmax_xent(logits, labels)
    back_grads, boundary_grad = _backward(back, activations[n_front:], back_caches, dlogits)
    front_grads, _ = _backward(front, activations[:n_front], front_caches, boundary_grad)
    return loss, front_grads, back_grads, boundary_grad


@dataclass
class DeviceTrainState:
    split: int
    front: list[DenseLayer]
    x: np.ndarray
    y: np.ndarray
    rng: np.random.Generator


@dataclass
class ServerTrainState:
    backs: list[list[DenseLayer]]  # one back-end per device, global index split..L-1
    boundary: int  # max split point; layers above it are shared


def split_states(net: MicroNet, splits, datasets, seed) -> tuple[list[DeviceTrainState], ServerTrainState]:
    """Distribute copies of a common initial net according to the split points."""
    devices = []
    backs = []
    for k, (split, (x, y)) in enumerate(zip(splits, datasets)):
        if not 0 <= split <= net.num_layers:
            raise ValueError(f"split {split} outside [0, {net.num_layers}]")
        devices.append(
            DeviceTrainState(
                split=split,
                front=[l.copy() for l in net.layers[:split]],
                x=np.asarray(x, dtype=float),
                y=np.asarray(y, dtype=int),
                rng=rng_stream(seed, 3, k),
            )
        )
        backs.append([l.copy() for l in net.layers[split:]])
    return devices, ServerTrainState(backs=backs, boundary=max(splits))


def sfl_iteration(devices, server: ServerTrainState, activations, lr, batch_size) -> np.ndarray:
    """One synchronous split-training iteration across all devices.

    Each device samples a minibatch from its local data, runs the split
    forward/backward pass with its server-side counterpart, and both sides
    take an SGD step.  Returns the per-device minibatch losses.
    """
    losses = np.empty(len(devices))
    for k, dev in enumerate(devices):
        idx = dev.rng.integers(0, len(dev.x), size=batch_size)
        xb, yb = dev.x[idx], dev.y[idx]
        back = server.backs[k]
        loss, front_grads, back_grads, _ = split_forward_backward(
            dev.front, back, activations, xb, yb
        )
        _apply_sgd(dev.front, front_grads, lr)
        _apply_sgd(back, back_grads, lr)
        losses[k] = loss
    return losses


def aggregate_common(server: ServerTrainState, devices) -> None:
    """Average the layers above the boundary across all back-ends, in place.

    Summation order is fixed (device index order) so replays are
    bit-identical.  Layers at or below the boundary are left untouched.
    """
    num_devices = len(devices)
    total_layers = devices[0].split + len(server.backs[0])
    for g in range(server.boundary, total_layers):
        w = sum(server.backs[k][g - devices[k].split].weights for k in range(num_devices))
        b = sum(server.backs[k][g - devices[k].split].bias for k in range(num_devices))
        w /= num_devices
        b /= num_devices
        for k in range(num_devices):
            layer = server.backs[k][g - devices[k].split]
            layer.weights = w.copy()
            layer.bias = b.copy()


def full_layers(device: DeviceTrainState, server: ServerTrainState, k: int):
    return device.front + server.backs[k]


def predict_logits(layers, activations, x):
    out, _ = _forward(layers, activations, x)
    return out


def accuracy(layers, activations, x, y) -> float:
    return float(np.mean(np.argmax(predict_logits(layers, activations, x), axis=1) == y))


def dataset_loss(layers, activations, x, y) -> float:
    logits = predict_logits(layers, activations, x)
    loss, _ = _softmax_xent(logits, y)
    return loss


# ---------------------------------------------------------------------------
# synthetic data

def make_class_centers(rng, n_classes, dim, center_scale=3.0):
    return rng.normal(0.0, center_scale, size=(n_classes, dim))


def sample_blobs(rng, centers, labels, noise=1.0):
    labels = np.asarray(labels, dtype=int)
    return centers[labels] + rng.normal(0.0, noise, size=(len(labels), centers.shape[1])), labels


def make_synthetic_devices(
    seed,
    num_devices,
    n_classes=3,
    dim=8,
    samples_per_device=50,
    partition="iid",
    dirichlet_alpha=0.3,
    test_samples=400,
    center_scale=3.0,
    noise=1.0,
):
    """Per-device Gaussian-blob datasets plus a balanced held-out test set.

    ``partition="iid"`` gives every device the global label distribution;
    ``"dirichlet"`` draws each device's label distribution from a symmetric
    Dirichlet, so small alpha means strong label skew.
    """
    rng = rng_stream(seed, 1)
    centers = make_class_centers(rng, n_classes, dim, center_scale)
    datasets = []
    for _ in range(num_devices):
        if partition == "iid":
            labels = rng.integers(0, n_classes, size=samples_per_device)
        elif partition == "dirichlet":
            p = rng.dirichlet(np.full(n_classes, dirichlet_alpha))
            labels = rng.choice(n_classes, size=samples_per_device, p=p)
        else:
            raise ValueError(f"unknown partition {partition!r}")
        datasets.append(sample_blobs(rng, centers, labels, noise))
    test_labels = rng.integers(0, n_classes, size=test_samples)
    test_set = sample_blobs(rng, centers, test_labels, noise)
    return datasets, test_set


# ---------------------------------------------------------------------------
# training loops

def train(
    seed=0,
    num_devices=4,
    splits=(1,),
    hidden=(16, 16),
    local_steps=5,
    iterations=200,
    lr=0.1,
    batch_size=16,
    partition="iid",
    dirichlet_alpha=0.3,
    classes=3,
    dim=8,
    samples_per_device=50,
    test_samples=400,
    latency_per_iteration=0.0,
):
    """Run split training end to end on synthetic data; returns metric rows.

    The reported loss is the mean full-local-dataset loss under the current
    parameters (not the minibatch loss), so a zero learning rate yields a
    perfectly flat curve.  Accuracy is the mean over the devices' personal
    models on the shared held-out set.  ``latency_per_iteration`` scales the
    model-time column so runs can be plotted against simulated wall clock.
    """
    splits = list(splits)
    if len(splits) == 1:
        splits = splits * num_devices
    if len(splits) != num_devices:
        raise ValueError("need one split per device")
    datasets, (x_test, y_test) = make_synthetic_devices(
        seed, num_devices, n_classes=classes, dim=dim,
        samples_per_device=samples_per_device, partition=partition,
        dirichlet_alpha=dirichlet_alpha, test_samples=test_samples,
    )
    net = init_micronet([dim, *hidden, classes], rng_stream(seed, 2))
    devices, server = split_states(net, splits, datasets, seed)
    acts = net.activations
    split_str = ";".join(str(s) for s in splits)

    rows = []
    for t in range(1, iterations + 1):
        sfl_iteration(devices, server, acts, lr, batch_size)
        if t % local_steps == 0:
            aggregate_common(server, devices)
        losses = [
            dataset_loss(full_layers(d, server, k), acts, d.x, d.y)
            for k, d in enumerate(devices)
        ]
        if not np.all(np.isfinite(losses)):
            raise FloatingPointError(f"training diverged at iteration {t}")
        accs = [
            accuracy(full_layers(d, server, k), acts, x_test, y_test)
            for k, d in enumerate(devices)
        ]
        rows.append(dict(
            iteration=t,
            model_time_s=t * latency_per_iteration,
            loss=float(np.mean(losses)),
            accuracy=float(np.mean(accs)),
            scheme="sfl",
            splits=split_str,
        ))
    return rows


def reference_centralized_sgd(net: MicroNet, x, y, iterations, lr, batch_size, rng) -> MicroNet:
    """Plain single-worker SGD on the whole network, for equivalence checks."""
    net = net.copy()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    for _ in range(iterations):
        idx = rng.integers(0, len(x), size=batch_size)
        out, caches = _forward(net.layers, net.activations, x[idx])
        _, dlogits = _softmax_xent(out, y[idx])
        grads, _ = _backward(net.layers, net.activations, caches, dlogits)
        _apply_sgd(net.layers, grads, lr)
    return net


def reference_fedavg(net: MicroNet, datasets, local_steps, iterations, lr, batch_size, rngs):
    """Classic FedAvg: local SGD on full copies, periodic full-model averaging."""
    nets = [net.copy() for _ in datasets]
    data = [(np.asarray(x, dtype=float), np.asarray(y, dtype=int)) for x, y in datasets]
    for t in range(1, iterations + 1):
        for k, (x, y) in enumerate(data):
            idx = rngs[k].integers(0, len(x), size=batch_size)
            out, caches = _forward(nets[k].layers, nets[k].activations, x[idx])
            _, dlogits = _softmax_xent(out, y[idx])
            grads, _ = _backward(nets[k].layers, nets[k].activations, caches, dlogits)
            _apply_sgd(nets[k].layers, grads, lr)
        if t % local_steps == 0:
            for g in range(net.num_layers):
                w = sum(m.layers[g].weights for m in nets) / len(nets)
                b = sum(m.layers[g].bias for m in nets) / len(nets)
                for m in nets:
                    m.layers[g].weights = w.copy()
                    m.layers[g].bias = b.copy()
    return nets


# ---------------------------------------------------------------------------
# estimator surface

class SplitFedNetClassifier(ClassifierMixin, BaseEstimator):
    """Scikit-learn classifier trained with the split-federated protocol.

    ``fit`` partitions (X, y) across ``n_devices`` simulated devices, trains
    with per-device split point ``split``, and keeps the average of the
    device models (all layers) as the deployment model used by ``predict``.
    """

    def __init__(
        self,
        hidden=(16, 16),
        n_devices=4,
        split=1,
        local_steps=5,
        iterations=200,
        lr=0.1,
        batch_size=16,
        partition="iid",
        dirichlet_alpha=0.3,
        random_state=0,
    ):
        self.hidden = hidden
        self.n_devices = n_devices
        self.split = split
        self.local_steps = local_steps
        self.iterations = iterations
        self.lr = lr
        self.batch_size = batch_size
        self.partition = partition
        self.dirichlet_alpha = dirichlet_alpha
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = unique_labels(y)
        y_idx = np.searchsorted(self.classes_, y)
        rng = rng_stream(self.random_state, 0)
        groups = self._partition(y_idx, rng)
        datasets = [(X[g], y_idx[g]) for g in groups]
        net = init_micronet(
            [X.shape[1], *self.hidden, len(self.classes_)], rng_stream(self.random_state, 2)
        )
        splits = [self.split] * self.n_devices
        devices, server = split_states(net, splits, datasets, self.random_state)
        for t in range(1, self.iterations + 1):
            sfl_iteration(devices, server, net.activations, self.lr, self.batch_size)
            if t % self.local_steps == 0:
                aggregate_common(server, devices)
        stacks = [full_layers(d, server, k) for k, d in enumerate(devices)]
        self.model_ = MicroNet(
            [
                DenseLayer(
                    sum(s[g].weights for s in stacks) / len(stacks),
                    sum(s[g].bias for s in stacks) / len(stacks),
                )
                for g in range(net.num_layers)
            ],
            net.activations,
        )
        self.n_features_in_ = X.shape[1]
        return self

    def _partition(self, y_idx, rng):
        n = len(y_idx)
        if n < self.n_devices:
            raise ValueError("fewer samples than devices")
        if self.partition == "iid":
            perm = rng.permutation(n)
            return np.array_split(perm, self.n_devices)
        if self.partition == "dirichlet":
            groups = [[] for _ in range(self.n_devices)]
            for c in range(y_idx.max() + 1):
                members = np.flatnonzero(y_idx == c)
                rng.shuffle(members)
                p = rng.dirichlet(np.full(self.n_devices, self.dirichlet_alpha))
                cuts = (np.cumsum(p)[:-1] * len(members)).astype(int)
                for k, part in enumerate(np.split(members, cuts)):
                    groups[k].extend(part.tolist())
            # every device needs at least one sample to draw batches from
            for k in range(self.n_devices):
                if not groups[k]:
                    donor = max(range(self.n_devices), key=lambda j: len(groups[j]))
                    groups[k].append(groups[donor].pop())
            return [np.array(sorted(g), dtype=int) for g in groups]
        raise ValueError(f"unknown partition {self.partition!r}")

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        logits = predict_logits(self.model_.layers, self.model_.activations, X)
        return self.classes_[np.argmax(logits, axis=1)]
