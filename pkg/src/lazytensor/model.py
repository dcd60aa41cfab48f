"""Regularized Taylor model with an approximate top-order tensor."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .multilinear import (
    RankOneSum,
    SymmetricTensor,
    contract,
    rank_one_sum_eval,
    rank_one_sum_gradient,
)


@dataclass(frozen=True)
class Acceptance:
    monotone: bool
    stationarity: bool
    grad_norm: float
    step_norm: float

    @property
    def accepted(self) -> bool:
        return self.monotone and self.stationarity


@dataclass(frozen=True, eq=False)
class RegularizedModel:
    """Model of f around ``anchor``.

    ``f_anchor + sum_{i<p} grad^i f[s]^i / i! + T[s]^p / p! + sigma ||s||^{p+1} / (p+1)!``
    with ``s = y - anchor``. ``derivs[i-1]`` is the snapshot of the i-th
    derivative at the anchor; ``tensor`` stands in for the p-th.
    """

    anchor: np.ndarray
    f_anchor: float
    derivs: tuple
    tensor: RankOneSum
    sigma: float
    _arrays: tuple = field(init=False, repr=False)

    def __post_init__(self):
        anchor = np.array(self.anchor, dtype=float)
        anchor.setflags(write=False)
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "derivs", tuple(self.derivs))
        n = anchor.shape[0]
        p = self.tensor.order
        if self.tensor.dim != n:
            raise ValueError("tensor dimension does not match the anchor")
        if len(self.derivs) != p - 1:
            raise ValueError(f"order-{p} model needs derivatives of orders 1..{p - 1}")
        for q, d in enumerate(self.derivs, start=1):
            if not isinstance(d, SymmetricTensor) or d.order != q or d.dim != n:
                raise ValueError(f"derivs[{q - 1}] must be a symmetric {q}-form on R^{n}")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        object.__setattr__(self, "_arrays", tuple(d.entries for d in self.derivs))

    @property
    def p(self) -> int:
        return self.tensor.order

    @property
    def dim(self) -> int:
        return self.anchor.shape[0]

    @property
    def gradient_at_anchor(self) -> np.ndarray:
        """``grad f(anchor)``, or the FD gradient ``T`` itself when p = 1."""
        if self.p == 1:
            return self.tensor.slices.copy()
        return np.array(self._arrays[0])

    def step(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape != self.anchor.shape:
            raise ValueError(f"expected a point of shape {self.anchor.shape}, got {y.shape}")
        return y - self.anchor

    def value_at_step(self, s: np.ndarray) -> float:
        p = self.p
        val = self.f_anchor
        for i, a in enumerate(self._arrays, start=1):
            val += float(contract(a, s, i)) / factorial(i)
        val += rank_one_sum_eval(self.tensor, s) / factorial(p)
        val += self.sigma / factorial(p + 1) * float(s @ s) ** ((p + 1) / 2)
        return val

    def gradient_at_step(self, s: np.ndarray) -> np.ndarray:
        p = self.p
        g = np.zeros(self.dim)
        for i, a in enumerate(self._arrays, start=1):
            g += contract(a, s, i - 1) / factorial(i - 1)
        g += rank_one_sum_gradient(self.tensor, s) / factorial(p)
        r = float(np.linalg.norm(s))
        g += self.sigma / factorial(p) * r ** (p - 1) * s
        return g


def model_value(M: RegularizedModel, y) -> float:
    return M.value_at_step(M.step(y))


def model_gradient(M: RegularizedModel, y) -> np.ndarray:
    return M.gradient_at_step(M.step(y))


def check_acceptance(M: RegularizedModel, y) -> Acceptance:
    """Evaluate the two inexact-minimizer conditions at ``y``.

    monotone: ``M(y) <= f(anchor)``, ties accepted.
    stationarity: ``||grad M(y)|| <= sigma / (2 p!) * ||y - anchor||^p``.
    """
    s = M.step(y)
    r = float(np.linalg.norm(s))
    gn = float(np.linalg.norm(M.gradient_at_step(s)))
    return Acceptance(
        monotone=M.value_at_step(s) <= M.f_anchor,
        stationarity=gn <= M.sigma / (2 * factorial(M.p)) * r**M.p,
        grad_norm=gn,
        step_norm=r,
    )
