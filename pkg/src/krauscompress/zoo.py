"""Concrete channel families: frames, measurement channels, randomizing and Werner maps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .channel import Channel, ChoiMatrix, kraus_from_choi


class ParameterError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Frame:
    """Unit vectors ``psi_1 .. psi_N`` in ``C^d`` with ``(1/N) sum_k psi_k psi_k^dagger = 1/d``.

    ``vectors`` has shape ``(N, d)``.
    """

    vectors: np.ndarray

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def frame_operator(self) -> np.ndarray:
        v = self.vectors
        return v.T @ v.conj() / self.count


def tight_frame(count: int, dim: int) -> Frame:
    """Fourier-phase frame ``psi_k = d^(-1/2) sum_{j=1}^d exp(2 pi i j k / N) |j>``, ``k = 1..N``."""
    if dim < 1 or count < dim:
        raise ParameterError(f"tight frame needs count >= dim >= 1, got N={count}, d={dim}")
    k = np.arange(1, count + 1)[:, None]
    j = np.arange(1, dim + 1)[None, :]
    vectors = np.exp(2j * np.pi * ((j * k) % count) / count) / np.sqrt(dim)
    return Frame(vectors)


def qc_channel(dim_in: int, dim_out: int) -> Channel:
    """Measurement channel ``X -> (|A|/|B|) sum_i <psi_i|X|psi_i> |x_i><x_i|``.

    The ``psi_i`` are ``tight_frame(dim_out, dim_in)``.
    """
    if dim_out < dim_in:
        raise ParameterError(f"qc channel needs dim_out >= dim_in, got {dim_in} -> {dim_out}")
    psi = tight_frame(dim_out, dim_in).vectors
    kraus = np.zeros((dim_out, dim_out, dim_in), dtype=complex)
    idx = np.arange(dim_out)
    kraus[idx, idx, :] = np.sqrt(dim_in / dim_out) * psi.conj()
    return Channel(kraus)


def cq_channel(dim_in: int, dim_out: int) -> Channel:
    """Preparation channel ``X -> sum_i <x_i|X|x_i> |psi_i><psi_i|`` with ``psi = tight_frame(dim_in, dim_out)``."""
    if dim_in < dim_out:
        raise ParameterError(f"cq channel needs dim_in >= dim_out, got {dim_in} -> {dim_out}")
    psi = tight_frame(dim_in, dim_out).vectors
    kraus = np.zeros((dim_in, dim_out, dim_in), dtype=complex)
    idx = np.arange(dim_in)
    kraus[idx, :, idx] = psi
    return Channel(kraus)


def shift_operator(dim: int) -> np.ndarray:
    """``X|j> = |j+1 mod d>``."""
    return np.roll(np.eye(dim, dtype=complex), 1, axis=0)


def phase_operator(dim: int) -> np.ndarray:
    """``Z|j> = exp(2 pi i j / d)|j>``."""
    return np.diag(np.exp(2j * np.pi * np.arange(dim) / dim))


def randomizing_channel(dim: int) -> Channel:
    """``X -> tr(X) 1/d`` with Kraus operators ``X^j Z^k / d``."""
    if dim < 1:
        raise ParameterError("dim must be positive")
    x, z = shift_operator(dim), phase_operator(dim)
    ops = []
    for j in range(dim):
        xj = np.linalg.matrix_power(x, j)
        for k in range(dim):
            ops.append(xj @ np.linalg.matrix_power(z, k) / dim)
    return Channel(np.stack(ops))


def forgetful_channel(dim_in: int, sigma: np.ndarray) -> Channel:
    """``X -> tr(X) sigma``: Kraus operators ``sqrt(s_b) |v_b><a|`` over eigenpairs of sigma."""
    w, u = np.linalg.eigh((sigma + sigma.conj().T) / 2)
    w = np.clip(w, 0.0, None)
    keep = w > 1e-14 * w.max()
    ops = []
    for wb, vb in zip(w[keep], u[:, keep].T):
        for a in range(dim_in):
            k = np.zeros((sigma.shape[0], dim_in), dtype=complex)
            k[:, a] = np.sqrt(wb) * vb
            ops.append(k)
    return Channel(np.stack(ops))


def swap_operator(dim: int) -> np.ndarray:
    f = np.zeros((dim * dim, dim * dim))
    i, j = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    f[(i * dim + j).ravel(), (j * dim + i).ravel()] = 1.0
    return f


def werner_state(dim: int, sym_weight: float) -> np.ndarray:
    """``mu * varsigma + (1 - mu) * alpha`` with the normalized (anti)symmetric projectors."""
    f = swap_operator(dim)
    eye = np.eye(dim * dim)
    sym = (eye + f) / (dim * (dim + 1))
    anti = (eye - f) / (dim * (dim - 1))
    return sym_weight * sym + (1.0 - sym_weight) * anti


def werner_sym_weight(dim: int, lam: float) -> float:
    """Weight of the symmetric state in the Choi matrix of ``W_lambda``."""
    return lam * (dim + 1) / (dim + 2 * lam - 1)


def werner_map(dim: int, lam: float, x: np.ndarray) -> np.ndarray:
    """Closed form ``[(tr X) 1 + (2 lambda - 1) X^T] / (d + 2 lambda - 1)``."""
    return (np.trace(x) * np.eye(dim) + (2 * lam - 1) * x.T) / (dim + 2 * lam - 1)


def werner_channel(dim: int, lam: float) -> Channel:
    if not 0.0 <= lam <= 1.0:
        raise ParameterError(f"lambda must lie in [0, 1], got {lam}")
    if dim < 2:
        raise ParameterError("Werner channels need dim >= 2")
    choi = (np.eye(dim * dim) + (2 * lam - 1) * swap_operator(dim)) / (dim * (dim + 2 * lam - 1))
    return kraus_from_choi(ChoiMatrix(choi.astype(complex), dim, dim))


def werner_max_output_norm(dim: int, lam: float) -> float:
    if lam >= 0.5:
        return 2 * lam / (dim + 2 * lam - 1)
    return 1.0 / (dim + 2 * lam - 1)


def random_isometry(rows: int, cols: int, seed: int) -> np.ndarray:
    """First ``cols`` columns of the Q factor of a seeded complex Gaussian matrix.

    Column phases are fixed by making the diagonal of R positive.
    """
    g = _rng.complex_normal(_rng.substream(seed, _rng.CHANNEL_STREAM), (rows, cols))
    q, r = np.linalg.qr(g)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases.conj()[None, :]


def random_channel(dim_in: int, dim_out: int, dim_env: int, seed: int) -> Channel:
    if min(dim_in, dim_out, dim_env) < 1 or dim_out * dim_env < dim_in:
        raise ParameterError(
            f"need dim_out * dim_env >= dim_in, got {dim_out} * {dim_env} < {dim_in}"
        )
    v = random_isometry(dim_out * dim_env, dim_in, seed)
    kraus = v.reshape(dim_out, dim_env, dim_in).transpose(1, 0, 2)
    return Channel(kraus.copy())


def unitary_channel(u: np.ndarray) -> Channel:
    return Channel(np.asarray(u, dtype=complex)[None])


def identity_channel(dim: int) -> Channel:
    return unitary_channel(np.eye(dim))


def haar_unitary(dim: int, seed: int) -> np.ndarray:
    return random_isometry(dim, dim, seed)
