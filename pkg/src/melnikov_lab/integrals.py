"""Scalar first-integral candidates with gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .ode import fd_jacobian

Array = np.ndarray


@dataclass
class ScalarIntegral:
    """A scalar function ``F`` on state space together with ``dF``.

    Parameters
    ----------
    fn : callable
        ``x -> F(x)``.
    grad : callable, optional
        ``x -> dF(x)``; central differences are used when absent.
    name : str
    """

    fn: Callable[[Array], float]
    grad: Optional[Callable[[Array], Array]] = None
    name: str = ""

    def __call__(self, x) -> float:
        return float(self.fn(np.asarray(x, dtype=float)))

    def gradient(self, x) -> Array:
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        return fd_jacobian(lambda y: np.atleast_1d(self.fn(y)), x)[0]

    def derivative_along(self, x, v) -> float:
        """``dF(x) . v``."""
        return float(self.gradient(x) @ np.asarray(v, dtype=float))
