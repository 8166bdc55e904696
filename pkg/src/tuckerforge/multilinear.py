"""Dense multilinear algebra primitives: unfoldings, mode-n products, norms,
and truncated left singular bases.

Tensors are plain ``numpy.ndarray`` objects in row-major (C) order; all
arithmetic is carried out in double precision regardless of how arrays are
stored on disk.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "mode_n_unfold",
    "mode_n_fold",
    "mode_n_product",
    "frobenius_norm_sq",
    "leading_left_singular_vectors",
]


def _cyclic_rest(ndim: int, n: int) -> list[int]:
    # axes other than n, starting at n+1 and wrapping around
    return [(n + k) % ndim for k in range(1, ndim)]


def mode_n_unfold(t: np.ndarray, n: int) -> np.ndarray:
    """Unfold tensor ``t`` along axis ``n`` into a ``dims[n] x rest`` matrix.

    Columns follow the cyclic ordering: the remaining axes are cycled
    starting at ``n+1``, and the axis immediately after ``n`` varies fastest.
    This ordering is part of the serialized-factor contract and must not
    change.
    """
    t = np.asarray(t)
    if not 0 <= n < t.ndim:
        raise ValueError(f"axis {n} out of range for a {t.ndim}-way tensor")
    rest = _cyclic_rest(t.ndim, n)
    # row-major reshape makes the last transposed axis fastest, so reverse
    perm = [n] + rest[::-1]
    return np.transpose(t, perm).reshape(t.shape[n], -1)


def mode_n_fold(m: np.ndarray, n: int, dims: tuple[int, ...]) -> np.ndarray:
    """Inverse of :func:`mode_n_unfold` for a tensor of shape ``dims``."""
    m = np.asarray(m)
    dims = tuple(int(d) for d in dims)
    ndim = len(dims)
    if not 0 <= n < ndim:
        raise ValueError(f"axis {n} out of range for a {ndim}-way tensor")
    rest = _cyclic_rest(ndim, n)
    perm = [n] + rest[::-1]
    inv = np.argsort(perm)
    shaped = m.reshape([dims[a] for a in perm])
    return np.transpose(shaped, inv)


def mode_n_product(t: np.ndarray, u: np.ndarray, n: int) -> np.ndarray:
    """Contract matrix ``u`` against mode ``n`` of ``t``.

    ``result[..., r, ...] = sum_i u[r, i] * t[..., i, ...]`` with the new
    extent ``u.shape[0]`` replacing ``t.shape[n]``.
    """
    t = np.asarray(t)
    u = np.asarray(u)
    if not 0 <= n < t.ndim:
        raise ValueError(f"axis {n} out of range for a {t.ndim}-way tensor")
    if u.ndim != 2 or u.shape[1] != t.shape[n]:
        raise ValueError(
            f"matrix of shape {u.shape} does not match extent {t.shape[n]} of axis {n}"
        )
    return np.moveaxis(np.tensordot(u, t, axes=(1, n)), 0, n)


def frobenius_norm_sq(t: np.ndarray) -> float:
    """Sum of squared entries."""
    flat = np.asarray(t, dtype=np.float64).ravel()
    return float(np.dot(flat, flat))


def leading_left_singular_vectors(m: np.ndarray, r: int) -> np.ndarray:
    """Orthonormal basis of the top-``r`` left singular subspace of ``m``.

    Computed through a symmetric eigendecomposition of the smaller Gram
    matrix (``m @ m.T`` when short-and-fat, ``m.T @ m`` otherwise). The sign
    of each column is fixed so its largest-magnitude entry is positive,
    making results reproducible byte-for-byte.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("expected a matrix")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    rows, cols = m.shape
    if not 1 <= r <= min(rows, cols):
        raise ValueError(f"rank {r} out of range [1, {min(rows, cols)}]")

    if rows <= cols:
        w, v = np.linalg.eigh(m @ m.T)
        u = v[:, ::-1][:, :r]
    else:
        # tall case: right singular vectors first, then map through m
        w, v = np.linalg.eigh(m.T @ m)
        w = w[::-1][:r]
        v = v[:, ::-1][:, :r]
        u = m @ v
        # eigh of a PSD matrix can return slightly negative near-zero values
        scale = np.sqrt(np.maximum(w, np.finfo(np.float64).tiny))
        u = u / scale
        # re-orthonormalize to absorb the division error on tiny eigenvalues
        u, _ = np.linalg.qr(u)

    flip = u[np.argmax(np.abs(u), axis=0), np.arange(u.shape[1])] < 0
    u[:, flip] *= -1.0
    return u
