"""Random environment slicing.

For a channel with Stinespring isometry ``V : A -> B (x) E`` and a unit vector
``phi`` in ``E``, the slice map ``N_phi`` has the single Kraus operator
``sqrt(|E|) (1_B (x) <phi|) V``.  Averaging ``n`` independent slices gives a CP
map with at most ``n`` Kraus operators whose mean is ``N``.  Rescaling by
``S^(-1/2)``, ``S = sum_i K_i^dagger K_i``, makes it exactly trace preserving.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import comb
from typing import Optional

import numpy as np

from . import linalg
from . import rng as _rng
from .channel import (
    Channel,
    StinespringIsometry,
    channel_to_dict,
    encode_vector,
    stinespring,
)

SAMPLERS = ("haar", "basis", "exhaustive")
COARSE_DEFECT = 0.5


class CoarseCompressionWarning(UserWarning):
    """The sliced map is far from trace preserving (defect >= 0.5)."""


class DegenerateTargetError(ValueError):
    pass


@dataclass(frozen=True)
class CompressionPlan:
    """How to compress: ``n`` slices drawn with ``sampler`` from stream ``seed``.

    ``sampler`` is ``"haar"`` (uniform unit vectors), ``"basis"`` (uniform
    standard basis vectors, with replacement) or ``"exhaustive"`` (every basis
    vector once; requires ``n == |E|``).
    """

    n: int
    sampler: str = "haar"
    seed: int = 0
    epsilon_target: Optional[float] = None

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError(f"slice count must be >= 1, got {self.n}")
        if self.sampler not in SAMPLERS:
            raise ValueError(f"unknown sampler {self.sampler!r}; expected one of {SAMPLERS}")

    def to_dict(self) -> dict:
        return {
            "n": int(self.n),
            "sampler": self.sampler,
            "seed": int(self.seed),
            "epsilon_target": self.epsilon_target,
        }


@dataclass(frozen=True, eq=False)
class CompressionResult:
    plan: CompressionPlan
    sliced: Channel
    witness_S: np.ndarray
    tp_defect: float
    env_dim: int
    phis: np.ndarray
    corrected: Optional[Channel] = field(default=None)

    @property
    def coarse(self) -> bool:
        return self.tp_defect >= COARSE_DEFECT

    def to_dict(self, include_phis: bool = True) -> dict:
        out = {
            "plan": self.plan.to_dict(),
            "env_dim": self.env_dim,
            "tp_defect": self.tp_defect,
            "witness_S": [encode_vector(row) for row in self.witness_S],
            "sliced": channel_to_dict(self.sliced),
            "corrected": None if self.corrected is None else channel_to_dict(self.corrected),
            "corrected_tp_defect": None if self.corrected is None else self.corrected.tp_defect,
        }
        if include_phis:
            out["phis"] = [encode_vector(p) for p in self.phis]
        return out


def sample_env_vector(sampler: str, dim_env: int, rng: np.random.Generator) -> np.ndarray:
    """One environment vector: Haar-uniform, or a uniformly chosen basis vector."""
    if sampler == "haar":
        return _rng.haar_vector(rng, dim_env)
    if sampler == "basis":
        return linalg.ket(dim_env, int(rng.integers(dim_env)))
    raise ValueError(f"sampler {sampler!r} has no single-draw form")


def sample_env_vectors(plan: CompressionPlan, dim_env: int) -> np.ndarray:
    """The ``n`` environment vectors of a plan; slice ``i`` uses stream ``(seed, i)``."""
    if plan.sampler == "exhaustive":
        if plan.n != dim_env:
            raise ValueError(f"exhaustive sampling needs n == |E| = {dim_env}, got {plan.n}")
        return np.eye(dim_env, dtype=complex)
    return np.stack([
        sample_env_vector(plan.sampler, dim_env, _rng.substream(plan.seed, i))
        for i in range(plan.n)
    ])


def slice_kraus(iso: StinespringIsometry, phis: np.ndarray) -> np.ndarray:
    """``sqrt(|E|) (1 (x) <phi_i|) V`` for each row of ``phis``; shape ``(n, dim_out, dim_in)``."""
    phis = np.atleast_2d(phis)
    if phis.shape[1] != iso.dim_env:
        raise ValueError(f"phi has dimension {phis.shape[1]}, environment is {iso.dim_env}")
    return np.sqrt(iso.dim_env) * np.einsum("ne,bea->nba", phis.conj(), iso.tensor())


def slice_map(iso: StinespringIsometry, phi: np.ndarray) -> Channel:
    return Channel(slice_kraus(iso, phi))


def compress(ch: Channel, plan: CompressionPlan) -> CompressionResult:
    """Average ``plan.n`` slice maps of ``ch`` and, when possible, correct to trace preserving."""
    iso = stinespring(ch)
    phis = sample_env_vectors(plan, iso.dim_env)
    kraus = slice_kraus(iso, phis) / np.sqrt(plan.n)
    s = linalg.hermitian_part(np.einsum("kba,kbc->ac", kraus.conj(), kraus))
    defect = float(np.linalg.norm(s - np.eye(ch.dim_in), ord=2))
    sliced = Channel(kraus, tp_defect=defect)
    result = CompressionResult(plan, sliced, s, defect, iso.dim_env, phis)
    if defect < 1:
        result = CompressionResult(plan, sliced, s, defect, iso.dim_env, phis, tp_correct(result))
    if defect >= COARSE_DEFECT:
        warnings.warn(
            f"TP defect {defect:.3f} >= {COARSE_DEFECT}: compression is coarse",
            CoarseCompressionWarning,
            stacklevel=2,
        )
    return result


def tp_correct(result: CompressionResult) -> Channel:
    """Kraus operators ``K_i S^(-1/2)``.  Raises ``SingularityError`` when the defect is >= 1."""
    if not result.tp_defect < 1:
        raise linalg.SingularityError(
            f"TP defect {result.tp_defect:.3f} >= 1; S is not safely invertible"
        )
    s_inv = linalg.inv_sqrt_psd(result.witness_S)
    return Channel(result.sliced.kraus @ s_inv)


@dataclass(frozen=True)
class MomentEstimate:
    p: float
    normalized_moment: float
    bound: float
    mean: float
    mean_stderr: float
    samples: int


def _env_marginal(sigma: np.ndarray, y: np.ndarray, dim_env: int) -> np.ndarray:
    """``sigma_y = (<y| (x) 1) sigma (|y> (x) 1)``."""
    d = y.shape[0]
    t = np.asarray(sigma).reshape(d, dim_env, d, dim_env)
    return np.einsum("b,beCE,C->eE", y.conj(), t, y)


def psi1_moment_oracle(
    sigma: np.ndarray, y: np.ndarray, p: float, m: int, seed: int, dim_env: int | None = None
) -> MomentEstimate:
    """Monte-Carlo moments of ``X = tr[(y (x) phi) sigma]`` over Haar ``phi``.

    Returns the empirical ``(E|X|^p)^(1/p) / p`` next to the bound
    ``tr[(y (x) 1) sigma] / s``, plus the empirical mean of ``X``.
    """
    y = np.asarray(y, dtype=complex)
    d = y.shape[0]
    if dim_env is None:
        dim_env = sigma.shape[0] // d
    sigma_y = _env_marginal(sigma, y, dim_env)
    phis = _rng.haar_vectors(_rng.substream(seed, _rng.TRIAL_STREAM), m, dim_env)
    x = np.einsum("ne,ef,nf->n", phis.conj(), sigma_y, phis).real
    moment = np.mean(np.abs(x) ** p) ** (1.0 / p)
    bound = float(np.trace(sigma_y).real / dim_env)
    return MomentEstimate(
        p=p,
        normalized_moment=float(moment / p),
        bound=bound,
        mean=float(x.mean()),
        mean_stderr=float(x.std(ddof=1) / np.sqrt(m)),
        samples=m,
    )


def exact_moment(sigma_y: np.ndarray, p: int) -> float:
    """``E (phi^dagger sigma_y phi)^p`` for Haar ``phi`` in ``C^s`` (integer ``p``).

    Uses ``E phi^(x)p = P_sym / C(s+p-1, p)`` and ``tr[P_sym A^(x)p] = h_p(eig A)``,
    the complete homogeneous symmetric polynomial.
    """
    s = sigma_y.shape[0]
    lam = np.linalg.eigvalsh(linalg.hermitian_part(sigma_y))
    h = np.zeros(p + 1)
    h[0] = 1.0
    for value in lam:  # h_k(..., lam_i) = h_k(...) + lam_i * h_{k-1}(..., lam_i)
        for k in range(1, p + 1):
            h[k] += value * h[k - 1]
    return float(h[p] / comb(s + p - 1, p))


def tail_probability_oracle(
    ch: Channel,
    x: np.ndarray,
    y: np.ndarray,
    n: int,
    eps: float,
    trials: int,
    seed: int,
) -> float:
    """Fraction of trials in which ``(1/n) sum_i <y|N_phi_i(x)|y>`` misses ``<y|N(x)|y>``
    by more than ``eps`` times the target.  Trial ``t`` draws from stream ``(seed, t)``.
    """
    iso = stinespring(ch)
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    # <y|N_phi(x)|y> = |E| |<phi|w>|^2 with w = (<y| (x) 1) V |x>
    w = np.einsum("b,bea,a->e", y.conj(), iso.tensor(), x)
    target = float(np.vdot(w, w).real)
    if target < 1e-12:
        raise DegenerateTargetError(f"<y|N(x)|y> = {target:.3e} is too small for a relative test")
    chunk = max(1, 2_000_000 // iso.dim_env)
    misses = 0
    for t in range(trials):
        gen = _rng.substream(seed, _rng.TRIAL_STREAM + 1 + t)
        total, done = 0.0, 0
        while done < n:
            k = min(chunk, n - done)
            phis = _rng.haar_vectors(gen, k, iso.dim_env)
            total += float(np.sum(np.abs(phis.conj() @ w) ** 2))
            done += k
        estimate = iso.dim_env * total / n
        if abs(estimate - target) > eps * target:
            misses += 1
    return misses / trials
