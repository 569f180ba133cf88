import numpy as np
import pytest

from krauscompress import linalg, rng, zoo
from krauscompress.channel import apply, kraus_rank, to_choi
from krauscompress.metrics import OptBudget, max_output_infnorm

from conftest import random_matrix, random_state


@pytest.mark.parametrize("count,dim", [(4, 4), (8, 4), (16, 4), (37, 5), (5, 1), (9, 2)])
def test_tight_frame_properties(count, dim):
    f = zoo.tight_frame(count, dim)
    assert (f.count, f.dim) == (count, dim)
    assert np.abs(np.linalg.norm(f.vectors, axis=1) - 1).max() <= 1e-12
    assert np.abs(f.frame_operator() - np.eye(dim) / dim).max() <= 1e-12
    assert np.abs(np.abs(f.vectors) ** 2 - 1 / dim).max() <= 1e-12


def test_tight_frame_square_is_orthonormal():
    v = zoo.tight_frame(6, 6).vectors
    assert np.abs(v @ v.conj().T - np.eye(6)).max() <= 1e-12


def test_tight_frame_formula():
    v = zoo.tight_frame(7, 3).vectors
    k, j = 2, 3  # 1-based
    assert v[k - 1, j - 1] == pytest.approx(np.exp(2j * np.pi * j * k / 7) / np.sqrt(3))


def test_tight_frame_too_few():
    with pytest.raises(zoo.ParameterError):
        zoo.tight_frame(3, 4)


def test_qc_channel():
    ch = zoo.qc_channel(4, 8)
    assert ch.is_tp
    assert kraus_rank(ch) <= 8
    assert np.abs(apply(ch, linalg.projector(linalg.ket(4, 0))) - np.eye(8) / 8).max() <= 1e-12
    assert zoo.qc_channel(5, 5).tp_defect <= 1e-12
    with pytest.raises(zoo.ParameterError):
        zoo.qc_channel(8, 4)


def test_qc_outputs_diagonal(gen):
    ch = zoo.qc_channel(3, 7)
    for _ in range(10):
        out = apply(ch, random_matrix(gen, 3))
        assert np.abs(out - np.diag(np.diag(out))).max() <= 1e-12


def test_cq_channel():
    a, b = 8, 4
    ch = zoo.cq_channel(a, b)
    assert ch.is_tp
    psi = zoo.tight_frame(a, b).vectors
    for i in (0, 3, 7):
        out = apply(ch, linalg.projector(linalg.ket(a, i)))
        assert np.allclose(out, np.outer(psi[i], psi[i].conj()), atol=1e-13)
    assert np.abs(apply(ch, np.eye(a) / a) - np.eye(b) / b).max() <= 1e-12
    with pytest.raises(zoo.ParameterError):
        zoo.cq_channel(2, 3)


def test_generalized_paulis():
    x, z = zoo.shift_operator(3), zoo.phase_operator(3)
    assert np.allclose(x @ linalg.ket(3, 2), linalg.ket(3, 0))
    assert np.allclose(z @ linalg.ket(3, 1), np.exp(2j * np.pi / 3) * linalg.ket(3, 1))


def test_randomizing_d2_kraus_set():
    k = zoo.randomizing_channel(2).kraus * 2
    x, z = zoo.shift_operator(2), zoo.phase_operator(2)
    expected = [np.eye(2), z, x, x @ z]
    for got, want in zip(k, expected):
        assert np.allclose(got, want)


@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_randomizing(d, gen):
    ch = zoo.randomizing_channel(d)
    assert ch.is_tp and ch.num_kraus == d * d
    assert kraus_rank(ch) == d * d
    assert np.abs(to_choi(ch).matrix - np.eye(d * d) / d**2).max() <= 1e-12
    for _ in range(10):
        assert np.abs(apply(ch, random_state(gen, d)) - np.eye(d) / d).max() <= 1e-12


@pytest.mark.parametrize("lam", [0.0, 0.25, 0.5, 0.75, 1.0])
@pytest.mark.parametrize("d", [2, 3, 4])
def test_werner_matches_formula(d, lam, gen):
    ch = zoo.werner_channel(d, lam)
    assert ch.is_tp
    for _ in range(5):
        x = random_matrix(gen, d)
        assert np.abs(apply(ch, x) - zoo.werner_map(d, lam, x)).max() <= 1e-10


@pytest.mark.parametrize("lam", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_werner_choi_is_werner_state(lam):
    d = 3
    tau = to_choi(zoo.werner_channel(d, lam)).matrix
    mu = zoo.werner_sym_weight(d, lam)
    assert np.abs(tau - zoo.werner_state(d, mu)).max() <= 1e-12


def test_werner_sym_weight_agrees_with_lambda_only_at_endpoints():
    d = 4
    assert zoo.werner_sym_weight(d, 0.0) == 0.0
    assert zoo.werner_sym_weight(d, 1.0) == pytest.approx(1.0)
    # in between, the symmetric weight of the Choi state is not lambda
    tau = to_choi(zoo.werner_channel(d, 0.25)).matrix
    assert np.abs(tau - zoo.werner_state(d, 0.25)).max() > 1e-3


@pytest.mark.parametrize("d", [3, 4])
def test_werner_ranks(d):
    assert kraus_rank(zoo.werner_channel(d, 0.3)) == d * d
    assert kraus_rank(zoo.werner_channel(d, 0.5)) == d * d
    assert kraus_rank(zoo.werner_channel(d, 1.0)) == d * (d + 1) // 2
    assert kraus_rank(zoo.werner_channel(d, 0.0)) == d * (d - 1) // 2


def test_werner_half_is_randomizing(gen):
    w, r = zoo.werner_channel(4, 0.5), zoo.randomizing_channel(4)
    for _ in range(10):
        rho = random_state(gen, 4)
        assert np.abs(apply(w, rho) - apply(r, rho)).max() <= 1e-10


def test_werner_parameter_errors():
    with pytest.raises(zoo.ParameterError):
        zoo.werner_channel(3, 1.5)
    with pytest.raises(zoo.ParameterError):
        zoo.werner_channel(1, 0.5)


@pytest.mark.parametrize("d,lam", [(3, 0.2), (3, 0.9), (4, 0.75), (4, 0.0), (4, 1.0)])
def test_werner_max_output_norm(d, lam):
    found = max_output_infnorm(zoo.werner_channel(d, lam), OptBudget.quick()).value
    assert found == pytest.approx(zoo.werner_max_output_norm(d, lam), abs=1e-6)


def test_werner_max_output_norm_instance():
    assert zoo.werner_max_output_norm(4, 0.75) == pytest.approx(1.5 / 4.5)


def test_random_channel():
    u = zoo.random_channel(4, 4, 1, seed=3)
    assert kraus_rank(u) == 1 and u.tp_defect <= 1e-12
    for seed in range(10):
        ch = zoo.random_channel(3, 3, 5, seed)
        assert ch.tp_defect <= 1e-12
        assert kraus_rank(ch) == 5
    a, b = zoo.random_channel(3, 2, 4, seed=1), zoo.random_channel(3, 2, 4, seed=1)
    assert np.array_equal(a.kraus, b.kraus)
    with pytest.raises(zoo.ParameterError):
        zoo.random_channel(9, 2, 4, seed=0)


def test_random_isometry_positive_r():
    v = zoo.random_isometry(6, 3, seed=2)
    assert np.abs(v.conj().T @ v - np.eye(3)).max() <= 1e-12
    g = rng.complex_normal(rng.substream(2, rng.CHANNEL_STREAM), (6, 3))
    r = v.conj().T @ g
    assert np.allclose(np.tril(r, -1), 0, atol=1e-12)
    assert np.all(np.diag(r).real > 0) and np.allclose(np.diag(r).imag, 0, atol=1e-12)


def test_random_channel_frozen_value():
    # frozen output of the seeded construction; guards against stream changes
    k = zoo.random_channel(2, 2, 2, seed=7).kraus
    assert k[0, 0, 0] == pytest.approx(FROZEN_RANDOM_K000, abs=1e-14)


def test_forgetful_channel(gen):
    sigma = random_state(gen, 3)
    ch = zoo.forgetful_channel(4, sigma)
    assert ch.is_tp
    rho = random_state(gen, 4)
    assert np.abs(apply(ch, rho) - sigma).max() <= 1e-12


FROZEN_RANDOM_K000 = 0.03262454787937208 + 0.4274508684985041j
