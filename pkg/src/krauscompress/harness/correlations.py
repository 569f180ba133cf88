"""Compressing a completely forgetful channel and checking what it does to correlations."""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass
from typing import List, Optional

import numpy as np

from .. import linalg
from .. import rng as _rng
from ..channel import apply_extended, dual
from ..compressor import CoarseCompressionWarning, CompressionPlan, compress
from ..metrics import ordering_parameters, pure_pool
from ..zoo import forgetful_channel

DUAL_SLACK = 1e-10


class SigmaSpecError(ValueError):
    pass


def parse_sigma(spec: str, dim_out: int) -> np.ndarray:
    """``maxmixed``, ``diag:w1,w2,...`` (weights summing to 1) or ``random:seed=N``."""
    name, _, rest = spec.partition(":")
    if name == "maxmixed" and not rest:
        return np.eye(dim_out, dtype=complex) / dim_out
    if name == "diag":
        try:
            w = np.array([float(t) for t in rest.split(",")])
        except ValueError:
            raise SigmaSpecError(f"non-numeric weight in {spec!r}") from None
        if len(w) != dim_out:
            raise SigmaSpecError(f"{spec!r} has {len(w)} weights, output dimension is {dim_out}")
        if (w < 0).any() or abs(w.sum() - 1) > 1e-9:
            raise SigmaSpecError(f"weights in {spec!r} must be nonnegative and sum to 1")
        return np.diag(w).astype(complex)
    if name == "random":
        key, eq, value = rest.partition("=")
        if key != "seed" or not eq or not value.lstrip("-").isdigit():
            raise SigmaSpecError(f"expected random:seed=N, got {spec!r}")
        return _rng.random_density(_rng.substream(int(value), _rng.CHANNEL_STREAM), dim_out)
    raise SigmaSpecError(f"unknown sigma spec {spec!r}")


@dataclass
class CorrelationReport:
    dim_A: int
    dim_B: int
    dim_C: int
    n: int
    sampler: str
    seed: int
    mixture_terms: int
    tp_defect: float
    left_side: float
    per_term_bound: float
    ordering_parameter: float
    dual_lhs: List[float]
    dual_rhs: List[float]

    @property
    def convexity_ok(self) -> bool:
        return self.left_side <= self.per_term_bound + 1e-10

    @property
    def dual_ok(self) -> bool:
        return all(l <= r + DUAL_SLACK for l, r in zip(self.dual_lhs, self.dual_rhs))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["convexity_ok"] = self.convexity_ok
        out["dual_ok"] = self.dual_ok
        return out


def _trace_norm(h: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(linalg.hermitian_part(h))).sum())


def separable_state(dim_a: int, dim_c: int, terms: int, seed: int):
    """Seeded mixture of product states; returns ``(rho_AC, weights, A parts, C parts)``."""
    gen = _rng.substream(seed, _rng.POOL_STREAM + 3)
    weights = gen.random(terms) + 0.1
    weights /= weights.sum()
    parts_a = np.stack([_rng.random_density(gen, dim_a, int(gen.integers(1, dim_a + 1)))
                        for _ in range(terms)])
    parts_c = np.stack([_rng.random_density(gen, dim_c, int(gen.integers(1, dim_c + 1)))
                        for _ in range(terms)])
    rho = np.einsum("x,xab,xcd->acbd", weights, parts_a, parts_c)
    return rho.reshape(dim_a * dim_c, dim_a * dim_c), weights, parts_a, parts_c


def povm_elements(dim: int, count: int, seed: int) -> np.ndarray:
    """Seeded operators ``0 <= M <= 1``: Haar eigenbases with uniform eigenvalues."""
    gen = _rng.substream(seed, _rng.POOL_STREAM + 4)
    out = []
    for _ in range(count):
        q, r = np.linalg.qr(_rng.complex_normal(gen, (dim, dim)))
        u = q * (np.diag(r) / np.abs(np.diag(r))).conj()
        out.append((u * gen.random(dim)) @ u.conj().T)
    return np.stack(out)


def correlations_demo(
    dim_A: int,
    dim_C: int,
    sigma_spec: str = "maxmixed",
    n: int = 2048,
    seed: int = 0,
    mixture_terms: int = 20,
    dim_B: Optional[int] = None,
    sampler: str = "haar",
    povm_count: int = 20,
    pool_size: int = 500,
) -> CorrelationReport:
    """Compress ``X -> tr(X) sigma`` and compare ``(N_hat (x) Id)(rho_AC)`` with ``sigma (x) rho_C``.

    ``per_term_bound`` is ``max_x ||N_hat(rho_A^x) - sigma||_1`` over the product
    terms, which upper-bounds the left side by convexity.  The dual check
    compares ``||N_hat^*(M) - N^*(M)||_inf`` with ``eps * tr(M (sigma + 1/|B|))``,
    where ``eps`` is the ordering parameter measured over a pure-state pool and
    the inputs that attain each dual norm.
    """
    if dim_A < 2 or dim_C < 2:
        raise ValueError("dim_A and dim_C must be >= 2")
    if mixture_terms < 1:
        raise ValueError("mixture_terms must be >= 1")
    if dim_B is None:
        dim_B = dim_A
    sigma = parse_sigma(sigma_spec, dim_B)
    ref = forgetful_channel(dim_A, sigma)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CoarseCompressionWarning)
        result = compress(ref, CompressionPlan(n, sampler, seed))
    if result.corrected is None:
        raise linalg.SingularityError(f"TP defect {result.tp_defect:.3f}: cannot correct")
    approx = result.corrected

    rho, _, parts_a, parts_c = separable_state(dim_A, dim_C, mixture_terms, seed)
    rho_c = linalg.partial_trace(rho, (dim_A, dim_C), keep=1)
    left = _trace_norm(apply_extended(approx, rho, dim_C) - np.kron(sigma, rho_c))
    per_term = max(_trace_norm(approx(a) - sigma) for a in parts_a)

    pool = pure_pool(dim_A, pool_size, seed)
    eps_pool = float(ordering_parameters(ref, approx, pool).max())
    ref_dual, approx_dual = dual(ref), dual(approx)
    weight = sigma + np.eye(dim_B) / dim_B
    lhs, rhs = [], []
    for m in povm_elements(dim_B, povm_count, seed):
        diff = approx_dual(m) - ref_dual(m)
        w, u = np.linalg.eigh(linalg.hermitian_part(diff))
        top = u[:, int(np.argmax(np.abs(w)))]
        eps_x = float(ordering_parameters(ref, approx, top[None])[0])
        lhs.append(float(np.abs(w).max()))
        rhs.append(float(np.trace(m @ weight).real))
        eps_pool = max(eps_pool, eps_x)
    rhs = [eps_pool * r for r in rhs]
    return CorrelationReport(
        dim_A=dim_A, dim_B=dim_B, dim_C=dim_C, n=n, sampler=sampler, seed=seed,
        mixture_terms=mixture_terms, tp_defect=result.tp_defect,
        left_side=left, per_term_bound=per_term, ordering_parameter=eps_pool,
        dual_lhs=lhs, dual_rhs=rhs,
    )
