"""Approximation-quality functionals for pairs of CP maps.

Every sup over input states here is estimated from below: a seeded pool of
pure states is scored, the best few are refined, and the reported value is
re-evaluated at the returned witness.  No value is claimed to be a global
optimum.

The convex objectives (output Schatten norms of a difference map, largest
output eigenvalue) are refined by a support-function ascent: with ``G`` a dual
certificate of the objective at ``x``, ``M = L^*(G)`` satisfies
``f(y) >= f(x) + <y|M|y> - <x|M|x>``, so moving to the top eigenvector of ``M``
never decreases ``f``.  When that jump stalls, projected gradient steps with
step halving are tried.

Entropies use the natural logarithm.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from . import linalg
from . import rng as _rng
from .channel import Channel, encode_vector, stinespring, transfer_matrix

STATE_TOL = 1e-9


class NotAStateError(ValueError):
    pass


@dataclass(frozen=True)
class OptBudget:
    """Search effort for sup-over-states estimates.

    ``sample_pool`` seeded pure states are scored; the best ``restarts`` of them
    are refined for at most ``iterations`` steps each.
    """

    restarts: int = 20
    iterations: int = 200
    step: float = 1.0
    min_step: float = 1e-6
    sample_pool: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.sample_pool < self.restarts:
            raise ValueError("sample_pool must be >= restarts")

    @classmethod
    def quick(cls, seed: int = 0) -> "OptBudget":
        return cls(restarts=5, iterations=50, sample_pool=500, seed=seed)

    @classmethod
    def full(cls, seed: int = 0) -> "OptBudget":
        return cls(seed=seed)

    @classmethod
    def named(cls, name: str, seed: int = 0) -> "OptBudget":
        if name == "quick":
            return cls.quick(seed)
        if name == "full":
            return cls.full(seed)
        raise ValueError(f"unknown budget {name!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class MetricReport:
    quantity: str
    value: float
    witness: Optional[np.ndarray]
    budget: Optional[OptBudget]
    seed: Optional[int]
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        details = {}
        for key, val in self.details.items():
            if isinstance(val, np.ndarray):
                details[key] = encode_vector(val)
            else:
                details[key] = val
        return {
            "quantity": self.quantity,
            "value": float(self.value),
            "witness": None if self.witness is None else encode_vector(self.witness),
            "budget": None if self.budget is None else self.budget.to_dict(),
            "seed": self.seed,
            "details": details,
        }


# -- linear maps as transfer tensors -------------------------------------------------


class TransferMap:
    """Hermiticity-preserving map ``X -> sum_jk X[j,k] T[j,:,k,:]``.

    ``T`` is the unnormalized Choi matrix ``sum_jk |j><k| (x) L(|j><k|)`` reshaped
    to ``(A, B, A, B)``.
    """

    def __init__(self, tensor: np.ndarray):
        self.tensor = tensor
        self.dim_in = tensor.shape[0]
        self.dim_out = tensor.shape[1]
        a, b = self.dim_in, self.dim_out
        self._forward = tensor.transpose(0, 2, 1, 3).reshape(a * a, b * b)

    @classmethod
    def of(cls, ch: Channel) -> "TransferMap":
        a, b = ch.dim_in, ch.dim_out
        return cls(transfer_matrix(ch).reshape(a, b, a, b))

    @classmethod
    def trace_to_identity(cls, dim_in: int, dim_out: int) -> "TransferMap":
        """``X -> tr(X) 1 / dim_out``."""
        t = np.einsum("jk,bc->jbkc", np.eye(dim_in), np.eye(dim_out)) / dim_out
        return cls(t.astype(complex))

    def __add__(self, other: "TransferMap") -> "TransferMap":
        return TransferMap(self.tensor + other.tensor)

    def __sub__(self, other: "TransferMap") -> "TransferMap":
        return TransferMap(self.tensor - other.tensor)

    def __mul__(self, c: float) -> "TransferMap":
        return TransferMap(c * self.tensor)

    __rmul__ = __mul__

    def __neg__(self) -> "TransferMap":
        return TransferMap(-self.tensor)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Apply to one operator ``(A, A)`` or a stack ``(p, A, A)``."""
        x = np.asarray(x)
        flat = x.reshape(-1, self.dim_in * self.dim_in) @ self._forward
        out = flat.reshape(x.shape[:-2] + (self.dim_out, self.dim_out))
        return linalg.hermitian_part(out)

    def apply_pure(self, vecs: np.ndarray) -> np.ndarray:
        vecs = np.asarray(vecs)
        return self.apply(vecs[..., :, None] * vecs[..., None, :].conj())

    def adjoint(self, g: np.ndarray) -> np.ndarray:
        """``L^*(G)``, so that ``tr(G L(X)) = tr(L^*(G) X)``."""
        m = np.einsum("jbkc,cb->kj", self.tensor, g)
        return linalg.hermitian_part(m)


def _check_dims(ch1: Channel, ch2: Channel) -> None:
    if (ch1.dim_in, ch1.dim_out) != (ch2.dim_in, ch2.dim_out):
        raise ValueError(
            f"dimension mismatch: {ch1.dim_in}->{ch1.dim_out} vs {ch2.dim_in}->{ch2.dim_out}"
        )


# -- state pools ---------------------------------------------------------------------


def pure_pool(dim: int, size: int, seed: int) -> np.ndarray:
    """``size`` Haar-random unit vectors in ``C^dim``, fixed by ``seed``."""
    return _rng.haar_vectors(_rng.substream(seed, _rng.POOL_STREAM), size, dim)


def state_pool(dim: int, size: int, seed: int, mixed_fraction: float = 0.5) -> np.ndarray:
    """Seeded mixture of pure and full-rank mixed density matrices, shape ``(size, dim, dim)``."""
    n_mixed = int(round(size * mixed_fraction))
    pure = pure_pool(dim, size - n_mixed, seed)
    states = [np.einsum("pi,pj->pij", pure, pure.conj())]
    if n_mixed:
        gen = _rng.substream(seed, _rng.POOL_STREAM + 1)
        ranks = gen.integers(2, dim + 1, size=n_mixed) if dim > 1 else np.ones(n_mixed, int)
        states.append(np.stack([_rng.random_density(gen, dim, int(r)) for r in ranks]))
    return np.concatenate(states)


# -- generic ascent over pure states -------------------------------------------------

Local = Callable[[np.ndarray], Tuple[float, np.ndarray]]


def _ascend(local: Local, x: np.ndarray, budget: OptBudget) -> Tuple[np.ndarray, float]:
    value, m = local(x)
    for _ in range(budget.iterations):
        gain_tol = 1e-14 * max(1.0, abs(value))
        _, u = np.linalg.eigh(m)
        cand = u[:, -1]
        cand_value, cand_m = local(cand)
        if cand_value > value + gain_tol:
            x, value, m = cand, cand_value, cand_m
            continue
        g = m @ x - np.vdot(x, m @ x).real * x
        step = budget.step
        moved = False
        while step >= budget.min_step:
            cand = x + step * g
            cand = cand / np.linalg.norm(cand)
            cand_value, cand_m = local(cand)
            if cand_value > value + gain_tol:
                x, value, m = cand, cand_value, cand_m
                moved = True
                break
            step /= 2
        if not moved:
            break
    return x, value


def _maximize(
    score: Callable[[np.ndarray], np.ndarray],
    local: Local,
    dim: int,
    budget: OptBudget,
    candidates: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, float]:
    pool = pure_pool(dim, budget.sample_pool, budget.seed)
    if candidates is not None:
        pool = np.concatenate([np.atleast_2d(candidates).astype(complex), pool])
    values = np.concatenate([score(chunk) for chunk in np.array_split(pool, max(1, len(pool) // 512))])
    order = np.argsort(-values, kind="stable")
    best_x, best_v = pool[order[0]], values[order[0]]
    if budget.iterations > 0:
        for idx in order[: budget.restarts]:
            x, v = _ascend(local, pool[idx], budget)
            if v > best_v:
                best_x, best_v = x, v
    return best_x, best_v


# -- (1 -> p) distance ---------------------------------------------------------------


def _schatten_certificate(h: np.ndarray, p: float) -> Tuple[float, np.ndarray]:
    """``||H||_p`` and a unit-dual-norm ``G`` with ``tr(G H) = ||H||_p``."""
    w, u = np.linalg.eigh(h)
    a = np.abs(w)
    if np.isinf(p):
        i = int(np.argmax(a))
        sign = 1.0 if w[i] >= 0 else -1.0
        return float(a[i]), sign * np.outer(u[:, i], u[:, i].conj())
    norm = float(linalg.norm_from_singular_values(a, p))
    if norm == 0:
        return 0.0, np.zeros_like(h)
    weights = np.sign(w) * (a / norm) ** (p - 1)
    return norm, (u * weights) @ u.conj().T


def one_to_p_distance(
    ch1: Channel,
    ch2: Channel,
    p: float = 1.0,
    budget: Optional[OptBudget] = None,
    candidates: Optional[np.ndarray] = None,
) -> MetricReport:
    """Estimate ``sup_rho ||ch1(rho) - ch2(rho)||_p`` over pure inputs (a lower bound)."""
    _check_dims(ch1, ch2)
    if not p >= 1:
        raise linalg.DomainError(f"p must be >= 1, got {p}")
    budget = budget or OptBudget()
    diff = TransferMap.of(ch1) - TransferMap.of(ch2)

    def score(xs):
        w = np.linalg.eigvalsh(diff.apply_pure(xs))
        return linalg.norm_from_singular_values(w, p)

    def local(x):
        value, g = _schatten_certificate(diff.apply_pure(x), p)
        return value, diff.adjoint(g)

    x, _ = _maximize(score, local, ch1.dim_in, budget, candidates)
    value = float(score(x[None])[0])
    return MetricReport(f"one_to_p(p={p:g})", value, x, budget, budget.seed, {"p": p})


def output_difference_norms(
    ch1: Channel, ch2: Channel, states: np.ndarray, p: float = 1.0
) -> np.ndarray:
    """``||(ch1 - ch2)(rho)||_p`` for each state (pure vectors or density matrices)."""
    _check_dims(ch1, ch2)
    diff = TransferMap.of(ch1) - TransferMap.of(ch2)
    states = np.asarray(states)
    out = diff.apply_pure(states) if states.ndim == 2 else diff.apply(states)
    return linalg.norm_from_singular_values(np.linalg.eigvalsh(out), p)


def max_output_infnorm(ch: Channel, budget: Optional[OptBudget] = None) -> MetricReport:
    """Estimate ``sup_rho ||N(rho)||_inf`` (largest output eigenvalue over pure inputs)."""
    budget = budget or OptBudget()
    tm = TransferMap.of(ch)

    def score(xs):
        return np.linalg.eigvalsh(tm.apply_pure(xs))[..., -1]

    def local(x):
        w, u = np.linalg.eigh(tm.apply_pure(x))
        top = u[:, -1]
        return float(w[-1]), tm.adjoint(np.outer(top, top.conj()))

    x, _ = _maximize(score, local, ch.dim_in, budget)
    value = float(score(x[None])[0])
    return MetricReport("max_output_infnorm", value, x, budget, budget.seed)


# -- operator ordering ---------------------------------------------------------------


def _ordering_maps(ref: Channel, approx: Channel, eps: float):
    ref_t = TransferMap.of(ref)
    diff = TransferMap.of(approx) - ref_t
    envelope = eps * (ref_t + TransferMap.trace_to_identity(ref.dim_in, ref.dim_out))
    # slack maps: upper  eps(N + 1/|B|) - (approx - ref)  >= 0
    #             lower  eps(N + 1/|B|) + (approx - ref)  >= 0
    return envelope - diff, envelope + diff


def ordering_margin(
    ref: Channel,
    approx: Channel,
    eps: float,
    budget: Optional[OptBudget] = None,
    candidates: Optional[np.ndarray] = None,
    use_pool: bool = True,
) -> MetricReport:
    """Smallest slack of ``-eps(N + 1/|B|) <= approx - ref <= eps(N + 1/|B|)``.

    For each input ``x`` the minimum over unit ``y`` is an exact eigenvalue
    computation; the minimum over ``x`` is searched (the slack is concave in the
    input state, so pure inputs suffice).  A negative value certifies a violation
    at the witness pair ``(x, y)``, returned as ``witness`` and ``details["y"]``.
    """
    _check_dims(ref, approx)
    if not eps > 0:
        raise ValueError("eps must be positive")
    budget = budget or OptBudget()
    upper, lower = _ordering_maps(ref, approx, eps)

    def slacks(xs):
        wu = np.linalg.eigvalsh(upper.apply_pure(xs))[..., 0]
        wl = np.linalg.eigvalsh(lower.apply_pure(xs))[..., 0]
        return np.minimum(wu, wl)

    def local(x):
        best = None
        for name, tm in (("upper", upper), ("lower", lower)):
            w, u = np.linalg.eigh(tm.apply_pure(x))
            if best is None or w[0] < best[0]:
                bottom = u[:, 0]
                best = (float(w[0]), tm, bottom)
        value, tm, bottom = best
        # maximize -slack; its support operator is -L^*(y y^dagger)
        return -value, -tm.adjoint(np.outer(bottom, bottom.conj()))

    if use_pool:
        x, _ = _maximize(lambda xs: -slacks(xs), local, ref.dim_in, budget, candidates)
    else:
        cands = np.atleast_2d(candidates).astype(complex)
        vals = slacks(cands)
        x = cands[int(np.argmin(vals))]
    # re-evaluate the witness pair on both sides
    sides = {}
    for name, tm in (("upper", upper), ("lower", lower)):
        w, u = np.linalg.eigh(tm.apply_pure(x))
        sides[name] = {"value": float(w[0]), "y": u[:, 0]}
    side = min(sides, key=lambda k: sides[k]["value"])
    return MetricReport(
        f"ordering_margin(eps={eps:g})", sides[side]["value"], x, budget, budget.seed,
        {"y": sides[side]["y"], "side": side, "eps": eps,
         "upper": sides["upper"]["value"], "y_upper": sides["upper"]["y"],
         "lower": sides["lower"]["value"], "y_lower": sides["lower"]["y"]},
    )


def ordering_parameters(ref: Channel, approx: Channel, states: np.ndarray) -> np.ndarray:
    """Per-state smallest ``eps`` with ``|approx(rho) - ref(rho)| <= eps (ref(rho) + tr(rho)/|B|)``.

    Equal to ``||W^(-1/2) D W^(-1/2)||_inf`` with ``D`` the output difference
    and ``W = ref(rho) + tr(rho) 1/|B|``.  Accepts unit vectors ``(p, A)`` or
    density matrices ``(p, A, A)``.
    """
    _check_dims(ref, approx)
    ref_t = TransferMap.of(ref)
    diff = TransferMap.of(approx) - ref_t
    states = np.asarray(states)
    if states.ndim == 2:
        states = states[:, :, None] * states[:, None, :].conj()
    d = diff.apply(states)
    traces = np.trace(states, axis1=-2, axis2=-1).real
    w = ref_t.apply(states) + traces[:, None, None] * np.eye(ref.dim_out) / ref.dim_out
    lam, u = np.linalg.eigh(w)
    inv = (u / np.sqrt(lam)[:, None, :]) @ u.conj().swapaxes(-1, -2)
    rel = linalg.hermitian_part(inv @ d @ inv)
    return np.abs(np.linalg.eigvalsh(rel)).max(axis=-1)


def ordering_parameter(
    ref: Channel, approx: Channel, budget: Optional[OptBudget] = None,
    states: Optional[np.ndarray] = None,
) -> MetricReport:
    """Largest per-state ordering parameter over a pool (or the given ``states``)."""
    budget = budget or OptBudget()
    if states is None:
        states = state_pool(ref.dim_in, budget.sample_pool, budget.seed)
    eps = ordering_parameters(ref, approx, states)
    i = int(np.argmax(eps))
    return MetricReport("ordering_parameter", float(eps[i]), states[i], budget, budget.seed,
                        {"pool_size": int(len(states))})


# -- entropies and fidelities --------------------------------------------------------


def _check_state(rho, name: str = "rho") -> np.ndarray:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise NotAStateError(f"{name} must be a square matrix")
    if np.abs(rho - rho.conj().T).max() > STATE_TOL:
        raise NotAStateError(f"{name} is not Hermitian")
    rho = linalg.hermitian_part(rho)
    if abs(np.trace(rho).real - 1) > STATE_TOL:
        raise NotAStateError(f"{name} has trace {np.trace(rho).real:.6g}, expected 1")
    if np.linalg.eigvalsh(rho)[0] < -STATE_TOL:
        raise NotAStateError(f"{name} is not positive semidefinite")
    return rho


def renyi_from_spectrum(w: np.ndarray, p: float) -> np.ndarray:
    """Renyi entropy from eigenvalues along the last axis (natural log).

    Uses ``-(p/(p-1)) log ||rho||_p``, which is defined for unnormalized operators too.
    """
    w = np.clip(np.asarray(w, dtype=float), 0.0, None)
    if p == 1:
        safe = np.where(w > 0, w, 1.0)
        return -(w * np.log(safe)).sum(axis=-1)
    if np.isinf(p):
        return -np.log(w.max(axis=-1))
    return -(p / (p - 1)) * np.log(linalg.norm_from_singular_values(w, p))


def renyi_entropy(rho, p: float = 1.0) -> float:
    """Renyi entropy of order ``p >= 1``; ``p = 1`` is the von Neumann entropy."""
    if not p >= 1:
        raise linalg.DomainError(f"Renyi order must be >= 1, got {p}")
    rho = _check_state(rho)
    w = linalg.clip_spectrum(np.linalg.eigvalsh(rho))
    return float(renyi_from_spectrum(w, p))


def von_neumann_entropy(rho) -> float:
    return renyi_entropy(rho, 1.0)


def fidelity(rho, sigma) -> float:
    """``F(rho, sigma) = || sqrt(rho) sqrt(sigma) ||_1``."""
    rho = _check_state(rho, "rho")
    sigma = _check_state(sigma, "sigma")
    s = np.linalg.svd(linalg.psd_sqrt(rho) @ linalg.psd_sqrt(sigma), compute_uv=False)
    return float(min(1.0, s.sum()))


def entropy_exchange(ch: Channel, rho) -> float:
    """Entropy of the environment marginal of ``V rho V^dagger``."""
    iso = stinespring(ch)
    rho = np.asarray(rho)
    big = iso.matrix @ rho @ iso.matrix.conj().T
    env = linalg.partial_trace(big, (iso.dim_out, iso.dim_env), keep=1)
    env = env / np.trace(env).real
    return float(renyi_from_spectrum(np.linalg.eigvalsh(linalg.hermitian_part(env)), 1))


def entropy_rank_bound(ch: Channel, budget: Optional[OptBudget] = None) -> MetricReport:
    """Estimate ``max_rho |S(rho) - S(N(rho))|`` over pure and mixed inputs.

    Any CP map approximating ``ch`` in output entropy up to ``eps`` needs
    ``log r_K >= (1 - eps)`` times this value; see :func:`rank_floor`.
    """
    budget = budget or OptBudget()
    tm = TransferMap.of(ch)
    states = state_pool(ch.dim_in, budget.sample_pool, budget.seed)
    # the maximally mixed state is the natural extreme for cq-type channels
    states = np.concatenate([np.eye(ch.dim_in)[None] / ch.dim_in, states])

    def gap(rhos):
        s_in = renyi_from_spectrum(np.linalg.eigvalsh(rhos), 1)
        s_out = renyi_from_spectrum(np.linalg.eigvalsh(tm.apply(rhos)), 1)
        return np.abs(s_in - s_out)

    values = gap(states)
    order = np.argsort(-values, kind="stable")
    best_rho, best_v = states[order[0]], float(values[order[0]])
    gen = _rng.substream(budget.seed, _rng.POOL_STREAM + 2)
    for idx in order[: budget.restarts]:
        rho, v = states[idx], float(values[idx])
        step = 0.5
        for _ in range(budget.iterations):
            if step < budget.min_step:
                break
            push = _rng.random_density(gen, ch.dim_in)
            cand = (1 - step) * rho + step * push
            cv = float(gap(cand[None])[0])
            if cv > v:
                rho, v = cand, cv
            else:
                step /= 2
        if v > best_v:
            best_rho, best_v = rho, v
    value = float(gap(best_rho[None])[0])
    return MetricReport("entropy_rank_bound", value, best_rho, budget, budget.seed)


def rank_floor(entropy_gap: float, eps: float) -> float:
    """Lower bound ``exp((1 - eps) * gap)`` on the Kraus rank of an entropy-approximating map."""
    return float(np.exp((1 - eps) * entropy_gap))


@dataclass(frozen=True)
class ApproximationReport:
    """Pool-wide deviations between the outputs of a reference and an approximating map."""

    renyi_deviation: dict
    entropy_deviation: float
    fidelity_deviation: float
    trace_distance: float
    ordering_parameter: float
    fannes_audenaert_rhs: Optional[float]
    pool_size: int
    omega_pool_size: int
    seed: int

    def to_dict(self) -> dict:
        out = asdict(self)
        out["renyi_deviation"] = {str(k): v for k, v in self.renyi_deviation.items()}
        return out


def approximation_report(
    ref: Channel,
    approx: Channel,
    budget: Optional[OptBudget] = None,
    pool_size: Optional[int] = None,
    omega_pool_size: Optional[int] = None,
    orders: Sequence[float] = (2.0, np.inf),
) -> ApproximationReport:
    """Output entropy, Renyi entropy and fidelity deviations over a seeded input pool.

    Fidelity deviations are maximized over pairs (pool input ``rho``, reference
    state ``omega``), with ``omega`` drawn from a second seeded pool on the
    output space.  ``ordering_parameter`` is the largest per-state ordering
    parameter over the same input pool.
    """
    _check_dims(ref, approx)
    budget = budget or OptBudget()
    pool_size = pool_size or budget.sample_pool
    omega_pool_size = omega_pool_size or pool_size
    states = state_pool(ref.dim_in, pool_size, budget.seed)
    omegas = state_pool(ref.dim_out, omega_pool_size, budget.seed + 1)
    out_ref = TransferMap.of(ref).apply(states)
    out_apx = TransferMap.of(approx).apply(states)
    w_ref = np.linalg.eigvalsh(out_ref)
    w_apx = np.linalg.eigvalsh(out_apx)

    renyi = {}
    for p in orders:
        renyi[p] = float(np.abs(renyi_from_spectrum(w_apx, p) - renyi_from_spectrum(w_ref, p)).max())
    s_dev = float(np.abs(renyi_from_spectrum(w_apx, 1) - renyi_from_spectrum(w_ref, 1)).max())
    trace_dist = float(np.abs(np.linalg.eigvalsh(out_apx - out_ref)).sum(axis=-1).max())

    sq_ref, sq_apx, sq_om = linalg.psd_sqrt(out_ref), linalg.psd_sqrt(out_apx), linalg.psd_sqrt(omegas)
    fid_dev = 0.0
    for start in range(0, len(states), 64):
        a = sq_ref[start:start + 64, None] @ sq_om[None]
        b = sq_apx[start:start + 64, None] @ sq_om[None]
        fa = np.linalg.svd(a, compute_uv=False).sum(axis=-1)
        fb = np.linalg.svd(b, compute_uv=False).sum(axis=-1)
        fid_dev = max(fid_dev, float(np.abs(fa - fb).max()))

    eps_hat = float(ordering_parameters(ref, approx, states).max())
    log_b = np.log(ref.dim_out)
    fa_rhs = None
    if log_b > 0:
        e = trace_dist * log_b / 2
        fa_rhs = float(e + 2 * e / log_b + np.sqrt(e / log_b))
    return ApproximationReport(
        renyi_deviation=renyi,
        entropy_deviation=s_dev,
        fidelity_deviation=fid_dev,
        trace_distance=trace_dist,
        ordering_parameter=eps_hat,
        fannes_audenaert_rhs=fa_rhs,
        pool_size=len(states),
        omega_pool_size=len(omegas),
        seed=budget.seed,
    )
