"""Dense float64 matrix kernels, deterministic RNG, and the Adam update.

Matrices are plain 2-D C-contiguous ``numpy.ndarray`` of float64 (row-major).
Every function here is pure: inputs are never mutated, and identical inputs
produce byte-identical outputs within a fixed environment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ShapeError

NORM_FLOOR = 1e-12  # rows at or below this L2 norm pass through unnormalized

_MASK64 = (1 << 64) - 1


class Rng:
    """SplitMix64 pseudo-random generator.

    State advances by the golden-gamma constant 0x9E3779B97F4A7C15 and each
    output is finalized with the standard SplitMix64 mixing steps, so the
    integer and uniform streams are bit-identical for a given seed on every
    platform. ``normal()`` goes through libm (Box-Muller) and is only
    guaranteed stable within a fixed environment.
    """

    def __init__(self, seed: int):
        self._state = seed & _MASK64
        self._spare_normal: float | None = None

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0**-53)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n), bias-free via rejection sampling."""
        if n <= 0:
            raise ValueError(f"below() needs n >= 1, got {n}")
        limit = (_MASK64 + 1) - ((_MASK64 + 1) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def normal(self) -> float:
        """Standard normal deviate (Box-Muller, pairs cached)."""
        if self._spare_normal is not None:
            z = self._spare_normal
            self._spare_normal = None
            return z
        u1 = self.uniform()
        u2 = self.uniform()
        if u1 <= 0.0:
            u1 = 2.0**-53
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._spare_normal = r * math.sin(theta)
        return r * math.cos(theta)


def round_half_away(x: float) -> int:
    """Round half away from zero (2.5 -> 3, -2.5 -> -3)."""
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def as_matrix(data) -> np.ndarray:
    """Coerce nested sequences or an array to a 2-D float64 C-order matrix."""
    m = np.array(data, dtype=np.float64, order="C", ndmin=2)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={m.ndim}")
    return m


def _require_2d(name: str, x: np.ndarray) -> np.ndarray:
    if not isinstance(x, np.ndarray) or x.ndim != 2:
        raise ShapeError(f"{name} must be a 2-D ndarray, got {getattr(x, 'shape', type(x))}")
    return np.ascontiguousarray(x, dtype=np.float64)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit inner-dimension check.

    Raises ShapeError naming both shapes when a.cols != b.rows. Repeated
    calls on the same inputs return byte-identical results.
    """
    a = _require_2d("a", a)
    b = _require_2d("b", b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} x {b.shape}")
    return a @ b


def relu(x: np.ndarray) -> np.ndarray:
    """Elementwise max(0, x)."""
    x = _require_2d("x", x)
    return np.maximum(x, 0.0)


def l2_normalize_rows(x: np.ndarray) -> np.ndarray:
    """Divide each row by its Euclidean norm.

    Rows with norm <= 1e-12 are returned unchanged so isolated/zero rows
    never divide by zero.
    """
    x = _require_2d("x", x)
    norms = np.sqrt((x * x).sum(axis=1, keepdims=True))
    out = x.copy()
    keep = norms[:, 0] > NORM_FLOOR
    out[keep] = x[keep] / norms[keep]
    return out


def xavier_uniform(rows: int, cols: int, rng: Rng) -> np.ndarray:
    """Glorot-uniform init: entries in [-sqrt(6/(rows+cols)), +sqrt(...)].

    Entries are drawn row-major from ``rng``, so the same generator state
    always yields the same matrix.
    """
    if rows < 1 or cols < 1:
        raise ShapeError(f"xavier_uniform needs rows, cols >= 1, got {rows}x{cols}")
    bound = math.sqrt(6.0 / (rows + cols))
    out = np.empty((rows, cols), dtype=np.float64)
    flat = out.reshape(-1)
    for i in range(rows * cols):
        flat[i] = bound * (2.0 * rng.uniform() - 1.0)
    return out


@dataclass
class AdamState:
    """First/second moment buffers plus step count for one parameter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lr: float = 0.001

    @classmethod
    def fresh(cls, shape: tuple[int, int], lr: float = 0.001,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(m=np.zeros(shape), v=np.zeros(shape),
                   t=0, beta1=beta1, beta2=beta2, eps=eps, lr=lr)


def adam_step(param: np.ndarray, grad: np.ndarray, state: AdamState) -> tuple[np.ndarray, AdamState]:
    """One Adam update with bias correction; returns (new_param, new_state)."""
    param = _require_2d("param", param)
    grad = _require_2d("grad", grad)
    if not (param.shape == grad.shape == state.m.shape == state.v.shape):
        raise ShapeError(
            f"adam_step: shape mismatch, param {param.shape}, grad {grad.shape}, "
            f"m {state.m.shape}, v {state.v.shape}"
        )
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * (grad * grad)
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_param = param - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_param, replace(state, m=m, v=v, t=t)
