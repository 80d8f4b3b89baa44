"""Named parameter stores, Adam updates and finite-difference gradient checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autograd import Tensor


@dataclass
class AdamConfig:
    """Adam hyper-parameters plus an optional decoupled L2 weight.

    L2 regularization is applied as gradient augmentation (``lambda * theta``
    added to the gradient before the moment updates), so reported losses stay
    pure cross-entropy.
    """

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    l2_lambda: float = 0.0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if not 0 < self.beta1 < 1 or not 0 < self.beta2 < 1:
            raise ValueError(f"betas must lie in (0, 1), got {self.beta1}, {self.beta2}")
        if self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.l2_lambda < 0:
            raise ValueError(f"l2_lambda must be non-negative, got {self.l2_lambda}")


@dataclass
class _Entry:
    tensor: Tensor
    m: np.ndarray
    v: np.ndarray


@dataclass
class ParamStore:
    """Uniquely named trainable tensors with gradient and moment slots.

    A store (and any in-flight computation over it) belongs to a single
    thread; separate stores can train concurrently without shared state.
    """

    _entries: dict[str, _Entry] = field(default_factory=dict)
    step: int = 0
    _grads_populated: bool = False

    def param(self, name: str, values, dtype=None) -> Tensor:
        """Register a new trainable tensor and return its leaf node."""
        if name in self._entries:
            raise ValueError(f"duplicate parameter name {name!r}")
        arr = np.array(values, dtype=dtype)
        t = Tensor(arr, requires_grad=True)
        t.grad = np.zeros_like(arr)
        self._entries[name] = _Entry(t, np.zeros_like(arr), np.zeros_like(arr))
        return t

    def names(self) -> list[str]:
        return list(self._entries)

    def tensor(self, name: str) -> Tensor:
        return self._entries[name].tensor

    def value(self, name: str) -> np.ndarray:
        return self._entries[name].tensor.data

    def gradient(self, name: str) -> np.ndarray:
        g = self._entries[name].tensor.grad
        return g if g is not None else np.zeros_like(self.value(name))

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def zero_grads(self) -> None:
        for entry in self._entries.values():
            if entry.tensor.grad is None:
                entry.tensor.grad = np.zeros_like(entry.tensor.data)
            else:
                entry.tensor.grad[...] = 0

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: e.tensor.data.copy() for name, e in self._entries.items()}

    def load_values(self, values: dict[str, np.ndarray]) -> None:
        """Overwrite parameter values in place; shapes must match."""
        for name, arr in values.items():
            if name not in self._entries:
                raise KeyError(f"unknown parameter {name!r}")
            dst = self._entries[name].tensor.data
            arr = np.asarray(arr)
            if arr.shape != dst.shape:
                raise ValueError(f"shape mismatch for {name!r}: {arr.shape} vs {dst.shape}")
            dst[...] = arr


def forward_backward(store: ParamStore, loss_fn) -> float:
    """Evaluate a scalar loss and populate every gradient slot of the store.

    Parameters untouched by the computation keep an exact zero gradient.
    """
    store.zero_grads()
    loss = loss_fn()
    if not isinstance(loss, Tensor):
        raise TypeError(f"loss_fn must return a Tensor, got {type(loss).__name__}")
    value = loss.item()
    if not np.isfinite(value):
        raise FloatingPointError(f"non-finite loss {value}")
    loss.backward()
    store._grads_populated = True
    return value


def adam_step(store: ParamStore, cfg: AdamConfig) -> None:
    """Bias-corrected Adam update over every entry; clears gradients."""
    if not store._grads_populated:
        raise RuntimeError("adam_step before any forward_backward: gradients never populated")
    store.step += 1
    t = store.step
    bc1 = 1.0 - cfg.beta1**t
    bc2 = 1.0 - cfg.beta2**t
    for entry in store._entries.values():
        theta = entry.tensor.data
        g = entry.tensor.grad
        if g is None:
            g = np.zeros_like(theta)
        if cfg.l2_lambda > 0:
            g = g + cfg.l2_lambda * theta
        entry.m[...] = cfg.beta1 * entry.m + (1.0 - cfg.beta1) * g
        entry.v[...] = cfg.beta2 * entry.v + (1.0 - cfg.beta2) * (g * g)
        m_hat = entry.m / bc1
        v_hat = entry.v / bc2
        theta -= (cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)).astype(theta.dtype, copy=False)
    store.zero_grads()
    store._grads_populated = False


def grad_check(
    store: ParamStore,
    loss_fn,
    epsilon: float = 1e-4,
    max_coords_per_param: int = 6,
    seed: int = 0,
    names: list[str] | None = None,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Samples up to `max_coords_per_param` coordinates per parameter (all of
    them when the tensor is small). Meant to run on double-precision stores;
    single precision drowns the difference quotient in rounding noise. The
    default step suits losses of order unity: small enough that truncation
    is negligible, large enough that near-zero gradient coordinates are not
    swamped by roundoff in the difference quotient.
    """
    forward_backward(store, loss_fn)
    analytic = {name: store.gradient(name).copy() for name in store.names()}
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name in names if names is not None else store.names():
        data = store.value(name)
        flat = data.reshape(-1)
        n = flat.shape[0]
        if n == 0:
            continue
        coords = np.arange(n) if n <= max_coords_per_param else rng.choice(n, size=max_coords_per_param, replace=False)
        for c in coords:
            original = flat[c]
            flat[c] = original + epsilon
            plus = loss_fn().item()
            flat[c] = original - epsilon
            minus = loss_fn().item()
            flat[c] = original
            if not np.isfinite(plus) or not np.isfinite(minus):
                raise FloatingPointError(f"non-finite loss while perturbing {name}[{c}]")
            numeric = (plus - minus) / (2.0 * epsilon)
            a = float(analytic[name].reshape(-1)[c])
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-12)
            worst = max(worst, rel)
    return worst
