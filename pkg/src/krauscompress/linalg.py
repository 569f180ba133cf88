"""Dense complex matrix kernels.

Matrices are plain ``numpy`` arrays.  Tensor products follow one convention
throughout the package: in ``A (x) B`` the left factor is the slow index, so a
vector on ``B (x) E`` has entry ``b * |E| + e`` for basis state ``|b>|e>``.
"""
from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

HERMITIAN_RTOL = 1e-12
EIG_CLIP = 1e-12
DEFAULT_RANK_TOL = 1e-10


class LinalgError(ValueError):
    """Base class for malformed-input errors in this module."""


class ShapeError(LinalgError):
    pass


class NotHermitianError(LinalgError):
    pass


class SingularityError(LinalgError):
    """Raised when an inverse square root is requested for a (near) singular operator."""


class DomainError(LinalgError):
    pass


def _as_square(m) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")
    return m


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().swapaxes(-1, -2)) / 2


def check_hermitian(m, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Return the symmetrized matrix, raising if ``m`` is not Hermitian within ``rtol``."""
    m = _as_square(m)
    scale = 1.0 + (np.abs(m).max() if m.size else 0.0)
    if m.size and np.abs(m - m.conj().T).max() > rtol * scale:
        raise NotHermitianError("matrix is not Hermitian within tolerance")
    return hermitian_part(m)


def hermitian_eig(m) -> Tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition ``M = U diag(w) U^dagger`` with ascending real ``w``."""
    m = check_hermitian(m)
    w, u = np.linalg.eigh(m)
    return w, u


def clip_spectrum(w: np.ndarray, tol: float = EIG_CLIP) -> np.ndarray:
    """Zero out eigenvalues in ``[-tol, 0]``; larger negative values are left alone."""
    w = np.array(w, dtype=float, copy=True)
    w[(w < 0) & (w >= -tol)] = 0.0
    return w


def schatten_norm(m, p: float = 1.0) -> float:
    """Schatten p-norm, ``(sum_i s_i^p)^(1/p)`` over the singular values ``s_i``.

    :param m: any 2-d array.
    :param p: order, ``1 <= p <= inf``.
    """
    if not p >= 1:
        raise DomainError(f"Schatten norm needs p >= 1, got {p}")
    s = np.linalg.svd(np.asarray(m), compute_uv=False)
    return norm_from_singular_values(s, p)


def norm_from_singular_values(s: np.ndarray, p: float) -> np.ndarray:
    """Schatten norm from singular values (or absolute eigenvalues) along the last axis."""
    s = np.abs(np.asarray(s, dtype=float))
    top = s.max(axis=-1)
    if np.isinf(p):
        return top
    if p == 1:
        return s.sum(axis=-1)
    if p == 2:
        return np.sqrt((s * s).sum(axis=-1))
    safe = np.where(top > 0, top, 1.0)
    # rescale by the largest value to keep s**p finite for large p
    ratio = s / np.expand_dims(safe, -1)
    return np.where(top > 0, safe * (ratio**p).sum(axis=-1) ** (1.0 / p), 0.0)


def partial_trace(m, dims: Sequence[int], keep: int) -> np.ndarray:
    """Trace out every tensor factor except ``keep``.

    ``dims`` lists the factor dimensions, slowest index first.  With two factors,
    ``keep=0`` returns the left marginal and ``keep=1`` the right one.
    """
    m = _as_square(m)
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims) or int(np.prod(dims)) != m.shape[0]:
        raise ShapeError(f"factor dims {dims} do not match matrix dimension {m.shape[0]}")
    if not 0 <= keep < len(dims):
        raise ShapeError(f"keep={keep} out of range for {len(dims)} factors")
    left = int(np.prod(dims[:keep]))
    right = int(np.prod(dims[keep + 1:]))
    d = dims[keep]
    t = m.reshape(left, d, right, left, d, right)
    return np.einsum("iajibj->ab", t)


def inv_sqrt_psd(s, floor: float = 0.0) -> np.ndarray:
    """``S^(-1/2)`` for a positive definite ``S``.

    Raises :class:`SingularityError` when the smallest eigenvalue is ``<= floor``.
    """
    w, u = hermitian_eig(s)
    if w[0] <= floor:
        raise SingularityError(
            f"smallest eigenvalue {w[0]:.3e} is not above the floor {floor:.3e}"
        )
    return (u / np.sqrt(w)) @ u.conj().T


def psd_sqrt(m: np.ndarray, tol: float = EIG_CLIP) -> np.ndarray:
    """Square root of a PSD matrix (batched over leading axes).

    Eigenvalues below ``tol * max(1, largest)`` are treated as zero, so that
    rounding noise on a null space does not turn into ``sqrt(noise)`` entries.
    """
    w, u = np.linalg.eigh(hermitian_part(np.asarray(m)))
    floor = tol * np.maximum(1.0, w[..., -1:])
    w = np.sqrt(np.where(w > floor, w, 0.0))
    return (u * w[..., None, :]) @ u.conj().swapaxes(-1, -2)


def numerical_rank(m, rel_tol: float = DEFAULT_RANK_TOL) -> int:
    """Number of eigenvalues strictly above ``rel_tol`` times the largest one."""
    w, _ = hermitian_eig(m)
    top = w[-1]
    if top <= 0:
        return 0
    return int(np.count_nonzero(w > rel_tol * top))


def ket(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    return np.outer(v, v.conj())
