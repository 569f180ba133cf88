import json
import warnings

import numpy as np
import pytest

from krauscompress import linalg, metrics, rng, zoo
from krauscompress.channel import Channel, apply, kraus_rank, stinespring
from krauscompress.compressor import CoarseCompressionWarning, CompressionPlan, compress
from krauscompress.metrics import (
    NotAStateError,
    OptBudget,
    TransferMap,
    approximation_report,
    entropy_exchange,
    entropy_rank_bound,
    fidelity,
    max_output_infnorm,
    one_to_p_distance,
    ordering_margin,
    ordering_parameter,
    ordering_parameters,
    output_difference_norms,
    renyi_entropy,
    von_neumann_entropy,
)

from conftest import random_matrix, random_state

QUICK = OptBudget.quick()


def compressed(ch, n, seed=0, sampler="haar"):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CoarseCompressionWarning)
        return compress(ch, CompressionPlan(n, sampler, seed))


def test_budget_validation():
    with pytest.raises(ValueError):
        OptBudget(restarts=0)
    with pytest.raises(ValueError):
        OptBudget(restarts=10, sample_pool=5)
    assert OptBudget(iterations=0).iterations == 0
    assert OptBudget.full() == OptBudget()
    assert (OptBudget().sample_pool, OptBudget().restarts, OptBudget().iterations) == (2000, 20, 200)
    with pytest.raises(ValueError):
        OptBudget.named("medium")


def test_transfer_map_matches_kraus(gen):
    ch = zoo.random_channel(3, 4, 5, seed=2)
    tm = TransferMap.of(ch)
    x = random_matrix(gen, 3)
    xh = (x + x.conj().T) / 2
    assert np.abs(tm.apply(xh) - apply(ch, xh)).max() <= 1e-13
    g = random_matrix(gen, 4)
    g = (g + g.conj().T) / 2
    assert abs(np.trace(g @ tm.apply(xh)) - np.trace(tm.adjoint(g) @ xh)) <= 1e-12


def test_one_to_p_equal_channels():
    ch = zoo.random_channel(3, 3, 4, seed=1)
    assert one_to_p_distance(ch, ch, 1, QUICK).value == pytest.approx(0, abs=1e-14)


@pytest.mark.parametrize("d", [2, 4, 8])
def test_one_to_one_randomizing_vs_unitary(d):
    u = zoo.unitary_channel(zoo.haar_unitary(d, d))
    rep = one_to_p_distance(zoo.randomizing_channel(d), u, 1, OptBudget())
    assert rep.value == pytest.approx(2 * (1 - 1 / d), abs=1e-6)


def test_one_to_p_errors():
    with pytest.raises(ValueError):
        one_to_p_distance(zoo.randomizing_channel(2), zoo.randomizing_channel(3), 1, QUICK)
    with pytest.raises(linalg.DomainError):
        one_to_p_distance(zoo.randomizing_channel(2), zoo.randomizing_channel(2), 0.5, QUICK)


@pytest.mark.parametrize("p", [1, 2, 3.5, np.inf])
def test_one_to_p_witness_reevaluates(p):
    a, b = zoo.random_channel(3, 3, 2, seed=1), zoo.random_channel(3, 3, 3, seed=2)
    rep = one_to_p_distance(a, b, p, QUICK)
    x = rep.witness
    direct = linalg.schatten_norm(apply(a, np.outer(x, x.conj())) - apply(b, np.outer(x, x.conj())), p)
    assert abs(rep.value - direct) <= 1e-10
    assert abs(np.linalg.norm(x) - 1) <= 1e-12


def test_refinement_improves_on_pool():
    a, b = zoo.random_channel(4, 4, 2, seed=3), zoo.random_channel(4, 4, 2, seed=4)
    pool_only = one_to_p_distance(a, b, 1, OptBudget(iterations=0, sample_pool=50, restarts=5)).value
    refined = one_to_p_distance(a, b, 1, OptBudget(sample_pool=50, restarts=5)).value
    assert refined >= pool_only


def test_one_to_p_bounded_by_ordering():
    ref = zoo.randomizing_channel(4)
    approx = compressed(ref, 2048).sliced
    eps = ordering_parameter(ref, approx, QUICK).value
    margin = ordering_margin(ref, approx, eps * 1.5, QUICK).value
    assert margin >= 0
    assert one_to_p_distance(approx, ref, 1, QUICK).value <= 2 * eps * 1.5


def test_one_to_p_symmetry_and_triangle():
    chans = [zoo.random_channel(3, 3, 3, seed=s) for s in range(3)]
    pool = metrics.pure_pool(3, 300, 5)
    d = {}
    for i in range(3):
        for j in range(3):
            d[i, j] = output_difference_norms(chans[i], chans[j], pool, 1.0)
    for i in range(3):
        for j in range(3):
            assert np.abs(d[i, j] - d[j, i]).max() <= 1e-10
            for k in range(3):
                assert np.all(d[i, k] <= d[i, j] + d[j, k] + 1e-8)


def test_one_to_p_monotone_in_p():
    a, b = zoo.random_channel(3, 4, 2, seed=6), zoo.random_channel(3, 4, 5, seed=7)
    pool = metrics.pure_pool(3, 200, 1)
    values = [output_difference_norms(a, b, pool, p) for p in (1, 2, 4, np.inf)]
    for lo, hi in zip(values[1:], values):
        assert np.all(lo <= hi + 1e-12)


def test_max_output_infnorm_examples():
    assert max_output_infnorm(zoo.identity_channel(3), QUICK).value == pytest.approx(1)
    assert max_output_infnorm(zoo.randomizing_channel(5), QUICK).value == pytest.approx(1 / 5)
    rep = max_output_infnorm(zoo.werner_channel(4, 0.75), OptBudget())
    assert rep.value == pytest.approx(1.5 / 4.5, abs=1e-6)
    x = rep.witness
    direct = np.linalg.eigvalsh(apply(zoo.werner_channel(4, 0.75), np.outer(x, x.conj())))[-1]
    assert abs(direct - rep.value) <= 1e-10


def test_ordering_margin_self():
    for ch in (zoo.randomizing_channel(3), zoo.werner_channel(3, 0.2), zoo.qc_channel(3, 5),
               zoo.cq_channel(5, 3), zoo.random_channel(3, 3, 4, seed=1)):
        for eps in (1e-3, 0.5):
            assert ordering_margin(ch, ch, eps, QUICK).value > 0


def test_ordering_margin_self_value():
    ch = zoo.randomizing_channel(4)
    eps = 0.2
    # N(x) = 1/4, so every slack is eps/4 + eps/4
    assert ordering_margin(ch, ch, eps, QUICK).value == pytest.approx(eps / 2)


def test_ordering_margin_qc_violation():
    ref = zoo.qc_channel(16, 16)
    approx = compressed(ref, 8).sliced
    e0 = linalg.ket(16, 0)
    rep = ordering_margin(ref, approx, 0.3, QUICK, candidates=e0[None], use_pool=False)
    assert rep.details["lower"] < -(1 - 0.6) / 16 + 1e-9
    y = rep.details["y_lower"]
    assert abs(np.vdot(y, apply(approx, np.outer(e0, e0)) @ y)) <= 1e-12
    # the pool search finds something at least as bad
    assert ordering_margin(ref, approx, 0.3, QUICK, candidates=e0[None]).value <= rep.value


def test_ordering_margin_witness_reevaluates():
    ref = zoo.randomizing_channel(4)
    approx = compressed(ref, 64, seed=1).sliced
    eps = 0.3
    rep = ordering_margin(ref, approx, eps, QUICK)
    x, y = rep.witness, rep.details["y"]
    X = np.outer(x, x.conj())
    sign = -1 if rep.details["side"] == "upper" else 1
    slack = (eps * np.vdot(y, apply(ref, X) @ y) + eps / 4
             + sign * np.vdot(y, (apply(approx, X) - apply(ref, X)) @ y)).real
    assert abs(slack - rep.value) <= 1e-10


def test_ordering_margin_randomizing_large_n():
    ref = zoo.randomizing_channel(8)
    approx = compressed(ref, 4096).sliced
    rep = ordering_margin(ref, approx, 0.5, OptBudget(sample_pool=1000, restarts=20))
    assert rep.value >= 0


def test_ordering_parameter_definition(gen):
    ref = zoo.randomizing_channel(3)
    approx = compressed(ref, 200, seed=2).sliced
    rho = random_state(gen, 3)
    eps = ordering_parameters(ref, approx, rho[None])[0]
    d = apply(approx, rho) - apply(ref, rho)
    w = apply(ref, rho) + np.eye(3) / 3
    # both sides of the ordering hold at eps and fail slightly below it
    lo = np.linalg.eigvalsh(eps * w - d)[0], np.linalg.eigvalsh(eps * w + d)[0]
    assert min(lo) >= -1e-12 and min(lo) <= 1e-10
    shrunk = 0.99 * eps
    assert min(np.linalg.eigvalsh(shrunk * w - d)[0], np.linalg.eigvalsh(shrunk * w + d)[0]) < 0


def test_ordering_parameter_report():
    ref = zoo.randomizing_channel(3)
    rep = ordering_parameter(ref, ref, QUICK)
    assert rep.value == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("p", [1, 2, 3, np.inf])
def test_renyi_examples(p):
    assert renyi_entropy(np.eye(4) / 4, p) == pytest.approx(np.log(4))
    psi = np.zeros(3)
    psi[1] = 1
    assert renyi_entropy(np.outer(psi, psi), p) == pytest.approx(0, abs=1e-12)


def test_renyi_two_half_half():
    assert renyi_entropy(np.diag([0.5, 0.5, 0.0]), 2) == pytest.approx(np.log(2))


def test_renyi_continuous_at_one(gen):
    rho = random_state(gen, 4)
    assert renyi_entropy(rho, 1 + 1e-6) == pytest.approx(von_neumann_entropy(rho), abs=1e-5)


def test_renyi_monotone_in_p(gen):
    for _ in range(10):
        rho = random_state(gen, 5)
        vals = [renyi_entropy(rho, p) for p in (1, 1.5, 2, 3, 5, np.inf)]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_renyi_rejects_non_states():
    with pytest.raises(NotAStateError):
        renyi_entropy(np.eye(2), 2)
    with pytest.raises(NotAStateError):
        renyi_entropy(np.diag([1.5, -0.5]), 2)
    with pytest.raises(NotAStateError):
        renyi_entropy(np.array([[0.5, 0.5], [0.0, 0.5]]), 2)
    with pytest.raises(linalg.DomainError):
        renyi_entropy(np.eye(2) / 2, 0.5)


def test_fidelity_examples(gen):
    rho = random_state(gen, 3)
    assert fidelity(rho, rho) == pytest.approx(1)
    a, b = linalg.ket(3, 0), linalg.ket(3, 2)
    assert fidelity(np.outer(a, a), np.outer(b, b)) == pytest.approx(0, abs=1e-12)
    for d in (2, 5):
        psi = rng.haar_vector(gen, d)
        assert fidelity(np.outer(psi, psi.conj()), np.eye(d) / d) == pytest.approx(1 / np.sqrt(d), abs=1e-10)


def test_fidelity_symmetric(gen):
    r, s = random_state(gen, 4), random_state(gen, 4, 2)
    assert fidelity(r, s) == pytest.approx(fidelity(s, r), abs=1e-10)
    with pytest.raises(NotAStateError):
        fidelity(r, 2 * s)


def test_entropy_exchange(gen):
    u = zoo.unitary_channel(zoo.haar_unitary(3, 4))
    assert entropy_exchange(u, random_state(gen, 3)) == pytest.approx(0, abs=1e-10)
    assert entropy_exchange(zoo.randomizing_channel(3), np.eye(3) / 3) == pytest.approx(2 * np.log(3))
    for ch in (zoo.random_channel(3, 3, 4, seed=5), zoo.werner_channel(3, 0.7), zoo.qc_channel(3, 4)):
        for _ in range(5):
            psi = rng.haar_vector(gen, 3)
            P = np.outer(psi, psi.conj())
            assert entropy_exchange(ch, P) == pytest.approx(von_neumann_entropy(apply(ch, P)), abs=1e-9)


def test_entropy_exchange_randomizing_env_marginal():
    d = 3
    iso = stinespring(zoo.randomizing_channel(d))
    env = linalg.partial_trace(iso.matrix @ (np.eye(d) / d) @ iso.matrix.conj().T, (d, d * d), keep=1)
    assert np.abs(env - np.eye(d * d) / d**2).max() <= 1e-12


def test_entropy_rank_bound():
    assert entropy_rank_bound(zoo.identity_channel(3), QUICK).value == pytest.approx(0, abs=1e-9)
    rep = entropy_rank_bound(zoo.randomizing_channel(4), QUICK)
    assert rep.value >= np.log(4) - 1e-9
    cq = entropy_rank_bound(zoo.cq_channel(4, 4), QUICK)
    assert cq.value >= 0
    w = cq.witness
    s_in = von_neumann_entropy(w)
    s_out = von_neumann_entropy(apply(zoo.cq_channel(4, 4), w))
    assert abs(abs(s_in - s_out) - cq.value) <= 1e-10


def test_rank_floor():
    assert metrics.rank_floor(np.log(16), 0.0) == pytest.approx(16)
    assert metrics.rank_floor(np.log(16), 0.5) == pytest.approx(4)


def test_compressed_output_entropy_below_log_rank(gen):
    for n in (2, 5, 9):
        sliced = compressed(zoo.randomizing_channel(3), n, seed=n).corrected
        if sliced is None:
            continue
        r = kraus_rank(sliced)
        for _ in range(5):
            out = apply(sliced, random_state(gen, 3))
            assert von_neumann_entropy(out) <= np.log(r) + 1e-9


def test_approximation_report_identical():
    ch = zoo.random_channel(3, 3, 4, seed=1)
    rep = approximation_report(ch, ch, QUICK, pool_size=50, omega_pool_size=20)
    assert rep.entropy_deviation == pytest.approx(0, abs=1e-12)
    assert all(v == pytest.approx(0, abs=1e-12) for v in rep.renyi_deviation.values())
    assert rep.fidelity_deviation == pytest.approx(0, abs=1e-8)
    assert rep.trace_distance == pytest.approx(0, abs=1e-12)
    json.dumps(rep.to_dict())


def test_approximation_report_bounds():
    ref = zoo.randomizing_channel(8)
    approx = compressed(ref, 4096).corrected
    rep = approximation_report(ref, approx, QUICK, pool_size=200, omega_pool_size=50)
    eps = rep.ordering_parameter
    assert eps < 0.5
    assert rep.renyi_deviation[2.0] <= 8 * eps
    assert rep.renyi_deviation[np.inf] <= 4 * eps
    assert rep.fidelity_deviation <= 3 / np.sqrt(2) * np.sqrt(eps)
    assert rep.entropy_deviation <= rep.fannes_audenaert_rhs


def test_fidelity_batch_matches_scalar():
    ref = zoo.randomizing_channel(3)
    approx = compressed(ref, 50, seed=3).corrected
    rep = approximation_report(ref, approx, OptBudget(sample_pool=20, restarts=1), pool_size=10,
                               omega_pool_size=10)
    states = metrics.state_pool(3, 10, 0)
    omegas = metrics.state_pool(3, 10, 1)
    best = 0.0
    for rho in states:
        a, b = apply(ref, rho), apply(approx, rho)
        a, b = a / np.trace(a).real, b / np.trace(b).real
        for om in omegas:
            best = max(best, abs(fidelity(a, om) - fidelity(b, om)))
    assert rep.fidelity_deviation == pytest.approx(best, abs=1e-8)


def test_metric_report_json():
    rep = one_to_p_distance(zoo.randomizing_channel(2), zoo.identity_channel(2), 1, QUICK)
    data = json.loads(json.dumps(rep.to_dict()))
    assert set(data) >= {"quantity", "value", "witness", "budget", "seed"}
    assert data["budget"]["sample_pool"] == QUICK.sample_pool


def test_state_pool_is_states():
    pool = metrics.state_pool(4, 30, 2)
    assert pool.shape == (30, 4, 4)
    for rho in pool:
        assert abs(np.trace(rho) - 1) <= 1e-12
        assert np.linalg.eigvalsh(rho)[0] >= -1e-12
