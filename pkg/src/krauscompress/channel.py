"""Completely positive maps in Kraus form, with Stinespring and Choi views.

The Kraus list is the canonical representation.  Kraus operators are stored as
one ``(s, dim_out, dim_in)`` array.  The Choi matrix uses the state
normalization ``tau(N) = (Id (x) N)(psi)`` with
``psi = |Omega><Omega|``, ``|Omega> = sum_j |jj> / sqrt(dim_in)``, ordered
input-slow / output-fast.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import linalg

TP_TOL = 1e-10
NOT_CP_TOL = 1e-8


class ChannelError(ValueError):
    pass


class NotCPError(ChannelError):
    pass


def _tp_defect(kraus: np.ndarray) -> float:
    dim_in = kraus.shape[2]
    s = np.einsum("kba,kbc->ac", kraus.conj(), kraus)
    return float(np.linalg.norm(s - np.eye(dim_in), ord=2))


@dataclass(frozen=True, eq=False)
class Channel:
    """A CP map ``X -> sum_i K_i X K_i^dagger`` from ``L(C^dim_in)`` to ``L(C^dim_out)``.

    ``tp_defect`` is ``|| sum_i K_i^dagger K_i - 1 ||_inf``; ``tp_status`` bins it
    into ``"exact"`` (<= 1e-10), ``"approximate"`` (< 1) or ``"non-tp"``.
    """

    kraus: np.ndarray
    tp_defect: float = field(default=float("nan"))

    def __post_init__(self):
        k = np.array(self.kraus, dtype=complex)
        k.setflags(write=False)
        object.__setattr__(self, "kraus", k)
        if np.isnan(self.tp_defect):
            object.__setattr__(self, "tp_defect", _tp_defect(k))

    @property
    def dim_in(self) -> int:
        return self.kraus.shape[2]

    @property
    def dim_out(self) -> int:
        return self.kraus.shape[1]

    @property
    def num_kraus(self) -> int:
        return self.kraus.shape[0]

    @property
    def tp_status(self) -> str:
        if self.tp_defect <= TP_TOL:
            return "exact"
        if self.tp_defect < 1:
            return "approximate"
        return "non-tp"

    @property
    def is_tp(self) -> bool:
        return self.tp_status == "exact"

    def __call__(self, rho) -> np.ndarray:
        return apply(self, rho)

    def __repr__(self) -> str:
        return (
            f"Channel(dim_in={self.dim_in}, dim_out={self.dim_out}, "
            f"num_kraus={self.num_kraus}, tp={self.tp_status})"
        )

    def to_dict(self) -> dict:
        return channel_to_dict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True, eq=False)
class StinespringIsometry:
    """``V : A -> B (x) E`` stored as a ``(dim_out * dim_env, dim_in)`` matrix."""

    matrix: np.ndarray
    dim_out: int
    dim_env: int

    @property
    def dim_in(self) -> int:
        return self.matrix.shape[1]

    def tensor(self) -> np.ndarray:
        """``V`` reshaped to ``(dim_out, dim_env, dim_in)``."""
        return self.matrix.reshape(self.dim_out, self.dim_env, self.dim_in)


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    matrix: np.ndarray
    dim_in: int
    dim_out: int

    @property
    def dims(self) -> tuple:
        return (self.dim_in, self.dim_out)


def from_kraus(ops: Iterable) -> Channel:
    """Build a channel from a nonempty list of equally shaped Kraus operators."""
    ops = [np.asarray(k) for k in ops]
    if not ops:
        raise ChannelError("need at least one Kraus operator")
    shape = ops[0].shape
    if len(shape) != 2:
        raise ChannelError(f"Kraus operators must be matrices, got shape {shape}")
    for k in ops[1:]:
        if k.shape != shape:
            raise ChannelError(f"Kraus shape mismatch: {shape} vs {k.shape}")
    return Channel(np.stack(ops).astype(complex))


def _apply_kraus(kraus: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.einsum("kba,ac,kdc->bd", kraus, x, kraus.conj(), optimize=True)


def apply(ch: Channel, rho) -> np.ndarray:
    """``sum_i K_i rho K_i^dagger``.  Linear, so any ``dim_in x dim_in`` operator is accepted."""
    rho = np.asarray(rho)
    if rho.shape != (ch.dim_in, ch.dim_in):
        raise ChannelError(f"input of shape {rho.shape} does not match dim_in={ch.dim_in}")
    return _apply_kraus(ch.kraus, rho)


def choi_vectors(ch: Channel) -> np.ndarray:
    """Rows ``(1 (x) K_i)|Omega> * sqrt(dim_in)``, i.e. ``sum_j |j> (x) K_i|j>``."""
    return ch.kraus.transpose(0, 2, 1).reshape(ch.num_kraus, ch.dim_in * ch.dim_out)


def transfer_matrix(ch: Channel) -> np.ndarray:
    """``dim_in * tau(N)``: the unnormalized Choi matrix ``sum_jk |j><k| (x) N(|j><k|)``."""
    v = choi_vectors(ch)
    return linalg.hermitian_part(v.T @ v.conj())


def to_choi(ch: Channel) -> ChoiMatrix:
    return ChoiMatrix(transfer_matrix(ch) / ch.dim_in, ch.dim_in, ch.dim_out)


def kraus_from_choi(tau: ChoiMatrix, rel_tol: float = linalg.DEFAULT_RANK_TOL) -> Channel:
    """Kraus operators from the eigendecomposition of a Choi matrix.

    Eigenvalues below ``rel_tol * max`` are dropped (ties at the threshold kept).
    Raises :class:`NotCPError` for eigenvalues below ``-1e-8``.
    """
    dim_in, dim_out = tau.dim_in, tau.dim_out
    w, u = linalg.hermitian_eig(tau.matrix)
    if w[0] < -NOT_CP_TOL:
        raise NotCPError(f"Choi matrix has eigenvalue {w[0]:.3e}; map is not CP")
    keep = w >= rel_tol * w[-1]
    if w[-1] <= 0 or not keep.any():
        raise NotCPError("Choi matrix is zero")
    # tau is trace normalized: the transfer matrix is dim_in * tau
    weights = np.sqrt(dim_in * w[keep])
    vecs = u[:, keep].T * weights[:, None]
    kraus = vecs.reshape(-1, dim_in, dim_out).transpose(0, 2, 1)
    return Channel(kraus[::-1].copy())


def stinespring(ch: Channel) -> StinespringIsometry:
    """Stack the Kraus operators as ``V = sum_i K_i (x) |i>`` (environment fast)."""
    v = ch.kraus.transpose(1, 0, 2).reshape(ch.dim_out * ch.num_kraus, ch.dim_in)
    return StinespringIsometry(v, ch.dim_out, ch.num_kraus)


def from_stinespring(iso: StinespringIsometry) -> Channel:
    return Channel(iso.tensor().transpose(1, 0, 2).copy())


def dual(ch: Channel) -> Channel:
    """Adjoint map under the trace pairing; Kraus operators ``K_i^dagger``."""
    return Channel(ch.kraus.conj().transpose(0, 2, 1).copy())


def kraus_rank(ch: Channel, rel_tol: float = linalg.DEFAULT_RANK_TOL) -> int:
    return linalg.numerical_rank(to_choi(ch).matrix, rel_tol)


def apply_extended(ch: Channel, rho_ac, dim_c: int | None = None) -> np.ndarray:
    """``(N (x) Id_C)(rho_AC)`` with ``A`` the slow factor of the input."""
    rho_ac = np.asarray(rho_ac)
    if dim_c is None:
        dim_c, rem = divmod(rho_ac.shape[0], ch.dim_in)
        if rem:
            raise ChannelError(f"dimension {rho_ac.shape[0]} is not a multiple of dim_in")
    if rho_ac.shape != (ch.dim_in * dim_c, ch.dim_in * dim_c):
        raise ChannelError(f"input shape {rho_ac.shape} does not match {ch.dim_in} x {dim_c}")
    t = rho_ac.reshape(ch.dim_in, dim_c, ch.dim_in, dim_c)
    out = np.einsum("kba,acAC,kBA->bcBC", ch.kraus, t, ch.kraus.conj(), optimize=True)
    n = ch.dim_out * dim_c
    return out.reshape(n, n)


def mix(channels: Sequence[Channel], weights: Sequence[float]) -> Channel:
    """Convex combination; Kraus operators of each term scaled by ``sqrt(weight)``."""
    parts = [np.sqrt(w) * ch.kraus for ch, w in zip(channels, weights)]
    return Channel(np.concatenate(parts))


def scaled(ch: Channel, factor: float) -> Channel:
    return Channel(np.sqrt(factor) * ch.kraus)


def _encode_matrix(m: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in m.reshape(-1)]


def _decode_matrix(entries, rows: int, cols: int) -> np.ndarray:
    a = np.asarray(entries, dtype=float)
    if a.shape != (rows * cols, 2):
        raise ChannelError(f"expected {rows * cols} [re, im] pairs, got array of shape {a.shape}")
    return (a[:, 0] + 1j * a[:, 1]).reshape(rows, cols)


def channel_to_dict(ch: Channel) -> dict:
    return {
        "dim_in": ch.dim_in,
        "dim_out": ch.dim_out,
        "kraus": [_encode_matrix(k) for k in ch.kraus],
    }


def channel_from_dict(data: dict) -> Channel:
    dim_in, dim_out = int(data["dim_in"]), int(data["dim_out"])
    ops = [_decode_matrix(k, dim_out, dim_in) for k in data["kraus"]]
    return from_kraus(ops)


def channel_from_json(text: str) -> Channel:
    return channel_from_dict(json.loads(text))


def encode_vector(v: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v).reshape(-1)]


def decode_vector(entries) -> np.ndarray:
    a = np.asarray(entries, dtype=float).reshape(-1, 2)
    return a[:, 0] + 1j * a[:, 1]
