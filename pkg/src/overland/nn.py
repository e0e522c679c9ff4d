"""Minimal dense-network substrate: MLPs, reverse-mode gradients, Adam.

Parameters live in a single flat float64 buffer addressed by named entries,
so several networks (and loose vectors such as a policy's log-std) can share
one optimizer state. Reverse mode is implemented per layer with explicit
tapes; only MLPs are supported.
"""

import io
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

Shape = Tuple[int, ...]


class ParamVector:
    """Flat float64 parameter buffer with a named (name, shape) layout."""

    def __init__(self, values: np.ndarray, layout: Sequence[Tuple[str, Shape]]):
        values = np.asarray(values, dtype=np.float64).ravel()
        total = sum(int(np.prod(shape, dtype=np.int64)) for _, shape in layout)
        if total != values.size:
            raise ValueError(
                "layout holds %d elements, buffer holds %d" % (total, values.size))
        names = [name for name, _ in layout]
        if len(set(names)) != len(names):
            raise ValueError("duplicate entry names in layout")
        self.values = values
        self.layout = tuple((name, tuple(shape)) for name, shape in layout)
        self._index: Dict[str, Tuple[int, Shape]] = {}
        offset = 0
        for name, shape in self.layout:
            size = int(np.prod(shape, dtype=np.int64))
            self._index[name] = (offset, shape)
            offset += size

    def view(self, name: str) -> np.ndarray:
        offset, shape = self._index[name]
        size = int(np.prod(shape, dtype=np.int64))
        return self.values[offset:offset + size].reshape(shape)

    def has(self, name: str) -> bool:
        return name in self._index

    def copy(self) -> "ParamVector":
        return ParamVector(self.values.copy(), self.layout)

    def zeros_like(self) -> "ParamVector":
        return ParamVector(np.zeros_like(self.values), self.layout)

    @property
    def size(self) -> int:
        return self.values.size


def concat_params(parts: Sequence[ParamVector]) -> ParamVector:
    """Merge parameter vectors into one buffer (entries must not collide)."""
    layout: List[Tuple[str, Shape]] = []
    for part in parts:
        layout.extend(part.layout)
    values = np.concatenate([part.values for part in parts])
    return ParamVector(values, layout)


def make_param(name: str, values: np.ndarray) -> ParamVector:
    arr = np.asarray(values, dtype=np.float64)
    return ParamVector(arr.ravel().copy(), [(name, tuple(arr.shape))])


@dataclass(frozen=True)
class MlpSpec:
    layer_sizes: Tuple[int, ...]
    activation: str = "tanh"
    output_activation: str = "none"

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(self.layer_sizes))
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least input and output sizes")
        if any(s <= 0 for s in self.layer_sizes):
            raise ValueError("layer sizes must be positive")
        if self.activation not in ("tanh", "relu"):
            raise ValueError("activation must be tanh or relu")
        if self.output_activation not in ("none", "tanh"):
            raise ValueError("output_activation must be none or tanh")

    @property
    def num_layers(self) -> int:
        return len(self.layer_sizes) - 1


def init_mlp(spec: MlpSpec, rng: np.random.Generator,
             prefix: str = "") -> ParamVector:
    """Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases."""
    layout: List[Tuple[str, Shape]] = []
    chunks: List[np.ndarray] = []
    for i in range(spec.num_layers):
        fan_in, fan_out = spec.layer_sizes[i], spec.layer_sizes[i + 1]
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layout.append(("%sW%d" % (prefix, i), (fan_out, fan_in)))
        chunks.append(w.ravel())
        layout.append(("%sb%d" % (prefix, i), (fan_out,)))
        chunks.append(np.zeros(fan_out))
    return ParamVector(np.concatenate(chunks), layout)


def _activate(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == "tanh":
        return np.tanh(z)
    if kind == "relu":
        return np.maximum(z, 0.0)
    return z  # none


def _activation_grad(kind: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "relu":
        return (z > 0.0).astype(np.float64)
    return np.ones_like(z)


@dataclass
class Tape:
    inputs: List[np.ndarray] = field(default_factory=list)
    preacts: List[np.ndarray] = field(default_factory=list)
    acts: List[np.ndarray] = field(default_factory=list)
    squeezed: bool = False


def forward(spec: MlpSpec, params: ParamVector, x: np.ndarray,
            prefix: str = "") -> Tuple[np.ndarray, Tape]:
    """Dense forward pass; accepts a single vector or a batch of rows."""
    x = np.asarray(x, dtype=np.float64)
    tape = Tape()
    if x.ndim == 1:
        x = x[None, :]
        tape.squeezed = True
    if x.shape[1] != spec.layer_sizes[0]:
        raise ValueError("input width %d, expected %d"
                         % (x.shape[1], spec.layer_sizes[0]))
    a = x
    for i in range(spec.num_layers):
        w = params.view("%sW%d" % (prefix, i))
        b = params.view("%sb%d" % (prefix, i))
        z = a @ w.T + b
        kind = spec.activation if i < spec.num_layers - 1 \
            else spec.output_activation
        tape.inputs.append(a)
        tape.preacts.append(z)
        a = _activate(kind, z)
        tape.acts.append(a)
    out = a[0] if tape.squeezed else a
    return out, tape


def backward(spec: MlpSpec, params: ParamVector, tape: Tape,
             output_grad: np.ndarray, prefix: str = "",
             into: Optional[ParamVector] = None,
             ) -> Tuple[ParamVector, np.ndarray]:
    """Exact gradient of sum(output * output_grad) wrt params and input.

    Batch rows are summed. When ``into`` is given, gradients are accumulated
    in place into its matching entries (other entries untouched).
    """
    g = np.asarray(output_grad, dtype=np.float64)
    if tape.squeezed:
        g = g[None, :]
    if into is None:
        layout = [("%sW%d" % (prefix, i), (spec.layer_sizes[i + 1],
                                           spec.layer_sizes[i]))
                  for i in range(spec.num_layers)]
        full: List[Tuple[str, Shape]] = []
        for i, (wname, wshape) in enumerate(layout):
            full.append((wname, wshape))
            full.append(("%sb%d" % (prefix, i), (wshape[0],)))
        into = ParamVector(np.zeros(sum(int(np.prod(s)) for _, s in full)),
                           full)
    for i in range(spec.num_layers - 1, -1, -1):
        kind = spec.activation if i < spec.num_layers - 1 \
            else spec.output_activation
        gz = g * _activation_grad(kind, tape.preacts[i], tape.acts[i])
        a = tape.inputs[i]
        into.view("%sW%d" % (prefix, i))[...] += gz.T @ a
        into.view("%sb%d" % (prefix, i))[...] += gz.sum(axis=0)
        g = gz @ params.view("%sW%d" % (prefix, i))
    input_grad = g[0] if tape.squeezed else g
    return into, input_grad


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    learning_rate: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params: ParamVector, learning_rate: float = 3e-4,
                   **kwargs) -> "AdamState":
        return cls(first_moment=np.zeros(params.size),
                   second_moment=np.zeros(params.size),
                   learning_rate=learning_rate, **kwargs)


def adam_step(params: ParamVector, grads: ParamVector,
              state: AdamState) -> Tuple[ParamVector, AdamState]:
    """Standard Adam with bias correction; returns fresh params and state."""
    if grads.size != params.size:
        raise ValueError("gradient length mismatch")
    t = state.step_count + 1
    g = grads.values
    m = state.beta1 * state.first_moment + (1 - state.beta1) * g
    v = state.beta2 * state.second_moment + (1 - state.beta2) * g * g
    m_hat = m / (1 - state.beta1 ** t)
    v_hat = v / (1 - state.beta2 ** t)
    new_values = params.values - state.learning_rate * m_hat / (
        np.sqrt(v_hat) + state.epsilon)
    new_params = ParamVector(new_values, params.layout)
    new_state = replace(state, first_moment=m, second_moment=v, step_count=t)
    return new_params, new_state


LOG_2PI = float(np.log(2.0 * np.pi))


def gaussian_logprob(mean: np.ndarray, log_std: np.ndarray,
                     sample: np.ndarray) -> np.ndarray:
    """Diagonal-Gaussian log density summed over the last axis."""
    mean = np.asarray(mean, dtype=np.float64)
    sample = np.asarray(sample, dtype=np.float64)
    log_std = np.asarray(log_std, dtype=np.float64)
    z = (sample - mean) / np.exp(log_std)
    return -0.5 * np.sum(z * z + 2.0 * log_std + LOG_2PI, axis=-1)


def gaussian_logprob_grad(mean: np.ndarray, log_std: np.ndarray,
                          sample: np.ndarray
                          ) -> Tuple[np.ndarray, np.ndarray]:
    """Per-dimension gradients of the log density wrt mean and log_std."""
    mean = np.asarray(mean, dtype=np.float64)
    sample = np.asarray(sample, dtype=np.float64)
    log_std = np.asarray(log_std, dtype=np.float64)
    inv_var = np.exp(-2.0 * log_std)
    diff = sample - mean
    d_mean = diff * inv_var
    d_log_std = diff * diff * inv_var - 1.0
    return d_mean, d_log_std


def gaussian_entropy(log_std: np.ndarray) -> float:
    """Entropy of the diagonal Gaussian, summed over dimensions."""
    log_std = np.asarray(log_std, dtype=np.float64)
    return float(np.sum(log_std + 0.5 * (1.0 + LOG_2PI)))


# ---------------------------------------------------------------- checkpoint

_MAGIC = b"PARAMS1\n"


def dump_params(params: ParamVector) -> bytes:
    """Text layout header (name and dims per line), blank line, raw float64."""
    buf = io.BytesIO()
    buf.write(_MAGIC)
    for name, shape in params.layout:
        line = " ".join([name] + [str(d) for d in shape])
        buf.write(line.encode("ascii") + b"\n")
    buf.write(b"\n")
    buf.write(params.values.astype("<f8").tobytes())
    return buf.getvalue()


def parse_params(data: bytes) -> ParamVector:
    if not data.startswith(_MAGIC):
        raise ValueError("not a parameter checkpoint")
    head_end = data.index(b"\n\n", len(_MAGIC) - 1)
    header = data[len(_MAGIC):head_end].decode("ascii")
    layout: List[Tuple[str, Shape]] = []
    for line in header.splitlines():
        parts = line.split()
        layout.append((parts[0], tuple(int(d) for d in parts[1:])))
    body = data[head_end + 2:]
    values = np.frombuffer(body, dtype="<f8").astype(np.float64)
    return ParamVector(values, layout)


def save_params(path, params: ParamVector) -> None:
    with open(path, "wb") as fh:
        fh.write(dump_params(params))


def load_params(path) -> ParamVector:
    with open(path, "rb") as fh:
        return parse_params(fh.read())
