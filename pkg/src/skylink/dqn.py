"""Double deep Q-learning core: MLP value net with hand-written gradients,
Adam, bounded replay memory, epsilon-greedy behavior and the double-Q target.

No autodiff framework: the network is small (a few dense layers) and the
backward pass is the textbook recursion, which keeps the gradient checkable
against finite differences.  All math is float64.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "QNetwork",
    "init_qnetwork",
    "forward",
    "forward_batch",
    "backward",
    "backward_batch",
    "AdamState",
    "init_adam",
    "adam_step",
    "Transition",
    "ReplayMemory",
    "select_action",
    "ddqn_target",
    "train_step",
    "sync_target",
    "save_checkpoint",
    "load_checkpoint",
]


@dataclass
class QNetwork:
    """Dense layers: rectifier on hidden layers, identity on the output."""

    weights: list[np.ndarray]  # each (fan_in, fan_out)
    biases: list[np.ndarray]   # each (fan_out,)

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def copy(self) -> "QNetwork":
        return QNetwork([w.copy() for w in self.weights],
                        [b.copy() for b in self.biases])


def init_qnetwork(sizes: list[int], rng: np.random.Generator) -> QNetwork:
    """Scaled-uniform init: W ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), b = 0."""
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return QNetwork(weights, biases)


def _forward_cached(net: QNetwork, x: np.ndarray):
    """Batch forward keeping pre-activations for the backward pass."""
    acts = [x]
    zs = []
    a = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w + b
        zs.append(z)
        a = z if i == last else np.maximum(z, 0.0)
        acts.append(a)
    return acts, zs


def forward_batch(net: QNetwork, x: np.ndarray) -> np.ndarray:
    if x.ndim != 2 or x.shape[1] != net.weights[0].shape[0]:
        raise ValueError(f"observation batch shape {x.shape} does not match "
                         f"input width {net.weights[0].shape[0]}")
    acts, _ = _forward_cached(net, x)
    return acts[-1]


def forward(net: QNetwork, obs: np.ndarray) -> np.ndarray:
    """Q-values for a single observation."""
    obs = np.asarray(obs, dtype=np.float64)
    return forward_batch(net, obs.reshape(1, -1))[0]


def backward_batch(net: QNetwork, x: np.ndarray, actions: np.ndarray,
                   targets: np.ndarray):
    """Mean gradient of (y - Q(s, a))^2 over the batch.

    Returns (grads, per_sample_sq_err) where grads is a list of (dW, db)
    matching the layer order and the error touches only each sample's
    selected action output.
    """
    n = x.shape[0]
    acts, zs = _forward_cached(net, x)
    q = acts[-1]
    q_sel = q[np.arange(n), actions]
    err = q_sel - targets
    delta = np.zeros_like(q)
    delta[np.arange(n), actions] = 2.0 * err / n

    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(net.weights)
    for layer in range(len(net.weights) - 1, -1, -1):
        grads[layer] = (acts[layer].T @ delta, delta.sum(axis=0))
        if layer > 0:
            delta = (delta @ net.weights[layer].T) * (zs[layer - 1] > 0.0)
    return grads, err * err


def backward(net: QNetwork, obs: np.ndarray, action_index: int,
             td_target: float):
    """Gradient of the squared error on one transition's selected action."""
    obs = np.asarray(obs, dtype=np.float64).reshape(1, -1)
    if not 0 <= action_index < net.weights[-1].shape[1]:
        raise ValueError(f"action index {action_index} out of range")
    grads, _ = backward_batch(net, obs, np.array([action_index]),
                              np.array([float(td_target)]))
    return grads


@dataclass
class AdamState:
    lr: float
    beta1: float
    beta2: float
    eps: float
    t: int
    m: list[tuple[np.ndarray, np.ndarray]]
    v: list[tuple[np.ndarray, np.ndarray]]


def init_adam(net: QNetwork, lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    zeros = lambda: [(np.zeros_like(w), np.zeros_like(b))
                     for w, b in zip(net.weights, net.biases)]
    return AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps, t=0,
                     m=zeros(), v=zeros())


def adam_step(net: QNetwork, grads, state: AdamState) -> None:
    """Bias-corrected Adam update, applied in place; each tensor independent."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    scale = state.lr / c1
    for layer, (gw, gb) in enumerate(grads):
        for (param, g, m, v) in (
            (net.weights[layer], gw, state.m[layer][0], state.v[layer][0]),
            (net.biases[layer], gb, state.m[layer][1], state.v[layer][1]),
        ):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            denom = np.sqrt(v / c2)
            denom += state.eps
            denom /= scale
            param -= m / denom


@dataclass(frozen=True)
class Transition:
    s: np.ndarray
    a: int
    r: float
    s_next: np.ndarray
    terminal: bool


class ReplayMemory:
    """Bounded FIFO of transitions; eviction is strictly oldest-first.

    Backed by preallocated arrays so minibatch assembly is a fancy-index
    gather rather than a Python-object stack.
    """

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ValueError("replay capacity must be positive")
        self.capacity = capacity
        self._size = 0
        self._next = 0
        self._s = None
        self._a = None
        self._r = None
        self._sn = None
        self._live = None  # 0.0 where terminal

    def _alloc(self, obs_size: int) -> None:
        self._s = np.empty((self.capacity, obs_size))
        self._a = np.empty(self.capacity, dtype=np.int64)
        self._r = np.empty(self.capacity)
        self._sn = np.empty((self.capacity, obs_size))
        self._live = np.empty(self.capacity)

    def push(self, t: Transition) -> None:
        if self._s is None:
            self._alloc(len(t.s))
        i = self._next
        self._s[i] = t.s
        self._a[i] = t.a
        self._r[i] = t.r
        self._sn[i] = t.s_next
        self._live[i] = 0.0 if t.terminal else 1.0
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def __len__(self) -> int:
        return self._size

    def __getitem__(self, i: int) -> Transition:
        if not 0 <= i < self._size:
            raise IndexError(i)
        return Transition(s=self._s[i].copy(), a=int(self._a[i]),
                          r=float(self._r[i]), s_next=self._sn[i].copy(),
                          terminal=self._live[i] == 0.0)

    def __iter__(self):
        return (self[i] for i in range(self._size))

    def sample_indices(self, batch_size: int, rng: np.random.Generator):
        if self._size < batch_size:
            raise ValueError("insufficient samples in replay memory")
        return rng.choice(self._size, size=batch_size, replace=False)

    def batch(self, idx):
        return (self._s[idx], self._a[idx], self._r[idx], self._sn[idx],
                self._live[idx])


def select_action(net: QNetwork, obs: np.ndarray, epsilon: float,
                  rng: np.random.Generator) -> int:
    """Epsilon-greedy: uniform with prob epsilon, else argmax (lowest index)."""
    n_actions = net.weights[-1].shape[1]
    if rng.random() < epsilon:
        return int(rng.integers(0, n_actions))
    return int(np.argmax(forward(net, obs)))


def ddqn_target(primary: QNetwork, target: QNetwork, t: Transition,
                gamma: float) -> float:
    """Double-Q bootstrap: action chosen by primary, evaluated by target."""
    if t.terminal:
        return float(t.r)
    q_primary = forward(primary, t.s_next)
    a_star = int(np.argmax(q_primary))
    q_target = forward(target, t.s_next)
    return float(t.r + gamma * q_target[a_star])


def train_step(primary: QNetwork, target: QNetwork, memory: ReplayMemory,
               batch_size: int, adam: AdamState, gamma: float,
               rng: np.random.Generator) -> float:
    """One uniform minibatch, one Adam step; returns the mean squared TD error."""
    idx = memory.sample_indices(batch_size, rng)
    s, a, r, s_next, live = memory.batch(idx)

    a_star = np.argmax(forward_batch(primary, s_next), axis=1)
    q_next = forward_batch(target, s_next)[np.arange(batch_size), a_star]
    y = r + gamma * q_next * live

    grads, sq_err = backward_batch(primary, s, a, y)
    adam_step(primary, grads, adam)
    return float(sq_err.mean())


def sync_target(primary: QNetwork, target: QNetwork) -> None:
    """Copy primary parameters into the target network (bit-exact)."""
    if [w.shape for w in primary.weights] != [w.shape for w in target.weights]:
        raise ValueError("sync_target: architecture mismatch")
    for i, (w, b) in enumerate(zip(primary.weights, primary.biases)):
        target.weights[i][...] = w
        target.biases[i][...] = b


CHECKPOINT_SCHEMA = 1


def save_checkpoint(path, net: QNetwork, adam: AdamState | None = None,
                    meta: dict | None = None) -> None:
    """Structured checkpoint; round-trips parameters exactly (float repr)."""
    doc = {
        "schema": CHECKPOINT_SCHEMA,
        "sizes": net.sizes,
        "layers": [{"w": w.tolist(), "b": b.tolist()}
                   for w, b in zip(net.weights, net.biases)],
        "adam": None,
        "meta": meta or {},
    }
    if adam is not None:
        doc["adam"] = {
            "lr": adam.lr, "beta1": adam.beta1, "beta2": adam.beta2,
            "eps": adam.eps, "t": adam.t,
            "m": [{"w": mw.tolist(), "b": mb.tolist()} for mw, mb in adam.m],
            "v": [{"w": vw.tolist(), "b": vb.tolist()} for vw, vb in adam.v],
        }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, sort_keys=True) + "\n")


def load_checkpoint(path):
    """Returns (net, adam_or_None, meta); raises ValueError on schema mismatch."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"checkpoint: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("schema") != CHECKPOINT_SCHEMA:
        raise ValueError("checkpoint: missing or unsupported schema version")
    net = QNetwork(
        weights=[np.array(l["w"], dtype=np.float64) for l in doc["layers"]],
        biases=[np.array(l["b"], dtype=np.float64) for l in doc["layers"]],
    )
    adam = None
    if doc.get("adam"):
        a = doc["adam"]
        adam = AdamState(
            lr=a["lr"], beta1=a["beta1"], beta2=a["beta2"], eps=a["eps"],
            t=a["t"],
            m=[(np.array(l["w"]), np.array(l["b"])) for l in a["m"]],
            v=[(np.array(l["w"]), np.array(l["b"])) for l in a["v"]],
        )
    return net, adam, doc.get("meta", {})
