"""Minimal space descriptors matching the gymnasium API surface.

The package mirror used here does not ship gymnasium, so these descriptors
implement the same attribute and method contract (shape, dtype, contains,
sample, seed) that downstream agent code relies on.
"""
from __future__ import annotations

import numpy as np


class Space:
    def __init__(self, shape: tuple[int, ...], dtype):
        self.shape = tuple(shape)
        self.dtype = np.dtype(dtype)
        self._rng = np.random.default_rng()

    def seed(self, seed: int | None = None) -> list[int]:
        self._rng = np.random.default_rng(seed)
        return [seed if seed is not None else 0]

    def contains(self, x) -> bool:
        raise NotImplementedError

    def sample(self):
        raise NotImplementedError


class Box(Space):
    """Real vector space with elementwise bounds."""

    def __init__(self, low, high, shape: tuple[int, ...], dtype=np.float64):
        super().__init__(shape, dtype)
        self.low = np.broadcast_to(np.asarray(low, dtype=self.dtype), self.shape).copy()
        self.high = np.broadcast_to(np.asarray(high, dtype=self.dtype), self.shape).copy()

    def contains(self, x) -> bool:
        arr = np.asarray(x)
        return (
            arr.shape == self.shape
            and bool(np.all(arr >= self.low))
            and bool(np.all(arr <= self.high))
        )

    def sample(self):
        finite_low = np.where(np.isfinite(self.low), self.low, -1e6)
        finite_high = np.where(np.isfinite(self.high), self.high, 1e6)
        return self._rng.uniform(finite_low, finite_high).astype(self.dtype)

    def __repr__(self) -> str:
        return f"Box(low={self.low.min()}, high={self.high.max()}, shape={self.shape})"


class MultiDiscrete(Space):
    """Vector of integers, component i in [0, nvec[i])."""

    def __init__(self, nvec, dtype=np.int64):
        nvec = np.asarray(nvec, dtype=dtype)
        super().__init__(nvec.shape, dtype)
        self.nvec = nvec

    def contains(self, x) -> bool:
        arr = np.asarray(x)
        if arr.shape != self.shape:
            return False
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(arr == arr.astype(self.dtype)):
                return False
            arr = arr.astype(self.dtype)
        return bool(np.all(arr >= 0) and np.all(arr < self.nvec))

    def sample(self):
        return (self._rng.random(self.shape) * self.nvec).astype(self.dtype)

    def __repr__(self) -> str:
        return f"MultiDiscrete({self.nvec.tolist()})"
