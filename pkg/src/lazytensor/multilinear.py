"""Dense symmetric multilinear forms of order 1..3 over R^n.

A q-form is stored as a full ``(n,) * q`` numpy array. Order-1 forms are
plain vectors. The finite-difference tensor built from probe slices is kept
in unsymmetrized form (:class:`RankOneSum`) because the regularized model
only ever needs its diagonal action ``T[s]^p`` and the gradient of it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

MAX_ORDER = 3


def _check_dim(n: int, h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.shape != (n,):
        raise ValueError(f"expected a vector of shape ({n},), got {h.shape}")
    return h


def symmetrize_array(a: np.ndarray) -> np.ndarray:
    """Average ``a`` over all axis permutations.

    The result is exactly (bitwise) permutation invariant: the average is
    computed once per sorted multi-index and copied to every permutation.
    """
    a = np.asarray(a, dtype=float)
    q = a.ndim
    if q <= 1:
        return a.copy()
    perms = list(itertools.permutations(range(q)))
    avg = sum(np.transpose(a, perm) for perm in perms) / len(perms)
    idx = np.indices(a.shape).reshape(q, -1)
    canon = np.sort(idx, axis=0)
    out = avg[tuple(canon)].reshape(a.shape)
    return out


@dataclass(frozen=True, eq=False)
class SymmetricTensor:
    """Symmetric q-linear form; symmetry is enforced by averaging on construction."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        q = a.ndim
        if q < 1 or q > MAX_ORDER:
            raise ValueError(f"order must be in 1..{MAX_ORDER}, got {q}")
        n = a.shape[0]
        if n < 1 or any(d != n for d in a.shape):
            raise ValueError(f"entries must be an (n,)*q array, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("tensor entries must be finite")
        a = symmetrize_array(a)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def order(self) -> int:
        return self.entries.ndim

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def zeros(cls, order: int, dim: int) -> SymmetricTensor:
        return cls(np.zeros((dim,) * order))

    def __sub__(self, other: SymmetricTensor) -> SymmetricTensor:
        return SymmetricTensor(self.entries - other.entries)

    def __add__(self, other: SymmetricTensor) -> SymmetricTensor:
        return SymmetricTensor(self.entries + other.entries)

    def __repr__(self):
        return f"SymmetricTensor(order={self.order}, dim={self.dim})"


def contract(a: np.ndarray, h: np.ndarray, times: int) -> np.ndarray:
    """Substitute ``h`` into the last ``times`` arguments of the array form ``a``."""
    out = a
    for _ in range(times):
        out = out @ h
    return out


def eval_power(T: SymmetricTensor, h) -> float:
    """Return ``T[h]^q``."""
    h = _check_dim(T.dim, h)
    return float(contract(T.entries, h, T.order))


def contract_to_vector(T: SymmetricTensor, h) -> np.ndarray:
    """Return the vector ``T[h]^{q-1}``; for q=1 this is the tensor itself."""
    h = _check_dim(T.dim, h)
    return np.array(contract(T.entries, h, T.order - 1), dtype=float)


@dataclass(frozen=True, eq=False)
class RankOneSum:
    """The form ``T = sum_i D_i (x) e_i`` with ``D_i`` symmetric of order p-1.

    ``slices[i]`` holds ``D_i``; for p=1 the slices are scalars, so ``slices``
    is just a vector. Order-2 slices are symmetrized on construction. ``h``
    records the difference step that produced it.
    """

    slices: np.ndarray
    h: float = float("nan")

    def __post_init__(self):
        d = np.asarray(self.slices, dtype=float)
        if d.ndim < 1 or d.ndim > MAX_ORDER:
            raise ValueError(f"order must be in 1..{MAX_ORDER}, got {d.ndim}")
        n = d.shape[0]
        if any(k != n for k in d.shape):
            raise ValueError(f"slices must form an (n,)*p array, got shape {d.shape}")
        if not np.all(np.isfinite(d)):
            raise ValueError("slices must be finite")
        if d.ndim == 3:
            # each D_i is a symmetric (p-1)-form
            d = (d + np.swapaxes(d, 1, 2)) / 2
        else:
            d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "slices", d)

    @property
    def order(self) -> int:
        return self.slices.ndim

    @property
    def dim(self) -> int:
        return self.slices.shape[0]

    def as_array(self) -> np.ndarray:
        """Full nonsymmetric array with ``T[a_1..a_{p-1}, i] = D_i[a_1..a_{p-1}]``."""
        return np.moveaxis(self.slices, 0, -1)


def rank_one_sum_eval(R: RankOneSum, s) -> float:
    """Return ``T[s]^p = sum_i D_i[s]^{p-1} s_i``."""
    s = _check_dim(R.dim, s)
    return float(contract(R.slices, s, R.order))


def rank_one_sum_gradient(R: RankOneSum, s) -> np.ndarray:
    """Gradient of ``s -> T[s]^p``.

    Each term ``D_i[s]^{p-1} s_i`` contributes ``(p-1) s_i D_i[s]^{p-2}`` plus
    ``D_i[s]^{p-1} e_i``.
    """
    s = _check_dim(R.dim, s)
    p = R.order
    d = R.slices
    if p == 1:
        return d.copy()
    # own[i] = D_i[s]^{p-1}
    own = contract(d, s, p - 1)
    # mixed = sum_i s_i D_i[s]^{p-2}
    mixed = contract(np.tensordot(s, d, axes=(0, 0)), s, p - 2)
    return (p - 1) * mixed + own


def symmetrize(R: RankOneSum) -> SymmetricTensor:
    """Dense symmetric part of the rank-one sum."""
    if R.order > MAX_ORDER:
        raise ValueError(f"symmetrization supported for order <= {MAX_ORDER}")
    return SymmetricTensor(R.as_array())


def operator_norm(T: SymmetricTensor, restarts: int = 16, iters: int = 500, seed: int = 0) -> float:
    """Induced operator norm.

    Exact for q <= 2. For q = 3 this is a lower bound: the best ``|T[h]^3|``
    over shifted power iterations (SS-HOPM) from ``restarts`` random unit
    starts plus the coordinate directions.
    """
    a = T.entries
    if T.order == 1:
        return float(np.linalg.norm(a))
    if T.order == 2:
        return float(np.max(np.abs(np.linalg.eigvalsh(a)))) if a.size else 0.0
    if T.order != 3:
        raise ValueError("operator_norm supports order <= 3")
    n = T.dim
    if not np.any(a):
        return 0.0
    rng = np.random.default_rng(seed)
    starts = list(np.eye(n)) + list(rng.standard_normal((max(restarts, 16), n)))
    # a shift above the Frobenius bound makes the iteration monotone
    shift = 2.0 * float(np.linalg.norm(a))
    best = 0.0
    for h in starts:
        h = h / np.linalg.norm(h)
        for sign in (1.0, -1.0):
            x = h.copy()
            val = sign * float(contract(a, x, 3))
            for _ in range(iters):
                y = sign * contract(a, x, 2) + shift * x
                x_new = y / np.linalg.norm(y)
                val_new = sign * float(contract(a, x_new, 3))
                done = abs(val_new - val) <= 1e-15 * max(1.0, abs(val_new))
                x, val = x_new, val_new
                if done:
                    break
            best = max(best, abs(val))
    return best
