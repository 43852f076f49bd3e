from fractions import Fraction

import numpy as np
from numpy.testing import assert_allclose
import pytest

from freeprob.errors import InvalidInputError
from freeprob.freecum import scalar_moments
from freeprob.randmat import RngStream, ginibre
from freeprob.trimodel import (BlockSpec, circular_free_poisson_sample,
                               computation_lemma_expected, computation_lemma_sum,
                               dh_model_sample, dh_trace_moment, dh_verify,
                               hermitian_psd_sqrt, read_matrix_binary, read_matrix_csv,
                               upper_triangular_sqrt, verify_computation_lemma,
                               write_matrix_binary, write_matrix_csv)

SHAPES = [(1, 1), (2, 2, 2), (3, 1, 2)]


def random_pd(n, gen):
    g = ginibre(n, gen)
    return g @ g.conj().T + 0.05 * np.eye(n)


def tr_moments(x, kmax):
    h = x @ x.conj().T
    p = np.eye(h.shape[0])
    out = []
    for _ in range(kmax):
        p = p @ h
        out.append(np.trace(p).real / h.shape[0])
    return out


# -- square roots ------------------------------------------------------------------------------

def test_identity_root():
    assert_allclose(upper_triangular_sqrt(np.eye(4), [2, 2]), np.eye(4), atol=1e-15)


def test_two_by_two_hand_case():
    x = upper_triangular_sqrt([[2, 1], [1, 1]], [1, 1])
    assert_allclose(x, [[1, 1], [0, 1]], atol=1e-14)


def test_block_diagonal_input_gives_hermitian_blocks():
    gen = RngStream(11).generator()
    a, b = random_pd(2, gen), random_pd(3, gen)
    y = np.zeros((5, 5), dtype=complex)
    y[:2, :2], y[2:, 2:] = a, b
    x = upper_triangular_sqrt(y, [2, 3])
    assert_allclose(x[:2, 2:], 0, atol=1e-14)
    assert_allclose(x[:2, :2], hermitian_psd_sqrt(a), atol=1e-12)
    assert_allclose(x[2:, 2:], hermitian_psd_sqrt(b), atol=1e-12)


@pytest.mark.parametrize("sizes", SHAPES)
def test_random_instances(sizes):
    blocks = BlockSpec(sizes)
    gen = RngStream(101, sum(sizes)).generator()
    for _ in range(50):
        y = random_pd(blocks.total, gen)
        x, info = upper_triangular_sqrt(y, blocks, return_info=True)
        assert np.linalg.norm(x @ x.conj().T - y) <= 1e-10 * np.linalg.norm(y)
        assert blocks.below_diagonal_norm(x) == 0.0
        norm = np.linalg.norm(y, 2)
        assert min(info["schur_min_eigs"]) > -1e-12 * norm


def test_schur_complements_stay_positive_near_singularity():
    gen = RngStream(5).generator()
    for _ in range(20):
        v = ginibre(6, gen)
        lam = np.array([1e-6, 1e-4, 1e-2, 1, 10, 100])
        q, _ = np.linalg.qr(v)
        y = (q * lam) @ q.conj().T
        x, info = upper_triangular_sqrt(y, [2, 2, 2], return_info=True)
        assert min(info["schur_min_eigs"]) > 0
        assert np.linalg.norm(x @ x.conj().T - y) <= 1e-10 * np.linalg.norm(y)


def test_sqrt_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        upper_triangular_sqrt([[1, 2], [0, 1]], [1, 1])
    with pytest.raises(InvalidInputError):
        upper_triangular_sqrt([[1, 1], [1, 1]], [1, 1])
    with pytest.raises(InvalidInputError):
        upper_triangular_sqrt(np.eye(3), [1, 1])
    with pytest.raises(InvalidInputError):
        BlockSpec([2, 0])


def test_psd_sqrt_examples():
    assert_allclose(hermitian_psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)
    assert_allclose(hermitian_psd_sqrt(np.eye(3)), np.eye(3), atol=1e-15)
    gen = RngStream(8).generator()
    g = ginibre(6, gen)[:, :3]
    y = g @ g.conj().T  # rank 3
    r = hermitian_psd_sqrt(y)
    assert np.linalg.norm(r @ r - y) <= 1e-10 * np.linalg.norm(y)
    assert_allclose(r, r.conj().T, atol=0)


def test_psd_sqrt_errors():
    with pytest.raises(InvalidInputError):
        hermitian_psd_sqrt([[1, 1], [0, 1]])
    with pytest.raises(InvalidInputError):
        hermitian_psd_sqrt(np.diag([1.0, -1.0]))


# -- random model ---------------------------------------------------------------------------------

def _mc(fn, trials, seed):
    return np.array([fn(RngStream(seed, k).generator()) for k in range(trials)])


def test_circular_free_poisson_one_moments():
    data = _mc(lambda g: tr_moments(circular_free_poisson_sample(1, 128, g), 2), 20, 21)
    mean, se = data.mean(0), data.std(0, ddof=1) / np.sqrt(20)
    assert np.all(np.abs(mean - [1, 2]) <= 3 * se + 1e-12)


def test_circular_free_poisson_mean_is_lambda():
    data = _mc(lambda g: tr_moments(circular_free_poisson_sample(3, 64, g), 2), 20, 22)
    mean, se = data.mean(0), data.std(0, ddof=1) / np.sqrt(20)
    assert np.all(np.abs(mean - [3, 12]) <= 3 * se + 1e-12)


def test_circular_free_poisson_unitary_invariance():
    v = np.linalg.qr(ginibre(64, RngStream(0).generator()))[0]

    def stats(g, rotate):
        x = circular_free_poisson_sample(2, 64, g)
        if rotate:
            x = v @ x
        return [np.trace(x @ x).real / 64, np.trace(x @ x @ x.conj().T).real / 64]
    for rotate in (False, True):
        data = _mc(lambda g: stats(g, rotate), 20, 23)
        mean, se = data.mean(0), data.std(0, ddof=1) / np.sqrt(20)
        assert np.all(np.abs(mean) <= 3 * se + 1e-12)


def test_circular_free_poisson_rejects_small_lambda():
    with pytest.raises(InvalidInputError):
        circular_free_poisson_sample(0.5, 8, RngStream(0))


def test_dh_single_block_reduces_to_circular_free_poisson():
    x = dh_model_sample(2, 1, 16, RngStream(4))
    y = circular_free_poisson_sample(2, 16, RngStream(4))
    assert np.array_equal(x, y)


def test_dh_block_sparsity():
    x = dh_model_sample(1, 3, 8, RngStream(5))
    blocks = BlockSpec.uniform(3, 8)
    assert blocks.below_diagonal_norm(x) == 0.0
    for i in range(3):
        for j in range(i, 3):
            assert np.abs(x[blocks.slice(i), blocks.slice(j)]).max() > 0


def test_dh_parameter_validation():
    with pytest.raises(InvalidInputError):
        dh_model_sample(0.5, 2, 4, RngStream(0))
    with pytest.raises(InvalidInputError):
        dh_model_sample(1, 0, 4, RngStream(0))


@pytest.mark.slow
def test_second_moment_error_shrinks_with_dimension():
    errs = []
    for m in (128, 256):
        data = _mc(lambda g: tr_moments(dh_model_sample(1, 2, m, g), 2)[1], 20, 31)
        errs.append(np.mean(np.abs(data - 2.0)))
    assert errs[1] < errs[0]


# -- symbolic model and the computation lemma --------------------------------------------------------

@pytest.mark.parametrize("c,N,kmax", [(1, 1, 4), (1, 2, 4), (2, 2, 3), (2, 3, 3),
                                      (Fraction(3, 2), 2, 3)])
def test_symbolic_trace_moments_are_free_poisson(c, N, kmax):
    target = scalar_moments([Fraction(c)] * kmax)
    assert [dh_trace_moment(c, N, k) for k in range(1, kmax + 1)] == target


def test_lemma_example():
    assert computation_lemma_sum(1, 2, 2, (1, 2)) == 2
    assert computation_lemma_expected(1, 2, 2, (1, 2)) == 2


def test_lemma_trichotomy_values():
    assert computation_lemma_sum(2, 3, 2, (1, 1)) == 1
    assert computation_lemma_sum(2, 3, 2, (3, 1)) == 0
    assert computation_lemma_sum(2, 3, 2, (2, 1, 2)) == (2 - 1) * 3 + 2


def test_lemma_exhaustive():
    rep = verify_computation_lemma(3, 3, (1, 2))
    assert rep.passed and rep.cases == 296 and not rep.mismatches


def test_lemma_index_validation():
    with pytest.raises(InvalidInputError):
        computation_lemma_sum(1, 2, 3, (1,))


def test_dh_verify_targets():
    rep = dh_verify(2, 2, 32, 4, rng=3, lemma=False)
    assert [r["target"] for r in rep.moments] == [2, 6, 22, 90]
    rep = dh_verify(1, 2, 32, 4, rng=3, lemma=False)
    assert [r["target"] for r in rep.moments] == [1, 2, 5, 14]
    js = rep.to_json()
    assert js["effective_diagonal_params"] == [1.0, 2.0]
    with pytest.raises(InvalidInputError):
        dh_verify(1, 2, 8, 1)


@pytest.mark.slow
def test_dh_verify_passes_at_moderate_size():
    rep = dh_verify(2, 2, 128, 20, rng=7, threads=2)
    assert rep.passed, rep.to_json()


def test_dh_verify_independent_of_threads():
    a = dh_verify(1, 2, 24, 6, rng=5, threads=1, lemma=False).to_json()
    b = dh_verify(1, 2, 24, 6, rng=5, threads=3, lemma=False).to_json()
    assert a == b


# -- matrix IO ------------------------------------------------------------------------------------

def test_binary_round_trip(tmp_path):
    a = ginibre(5, RngStream(1).generator())[:, :3]
    p = tmp_path / "a.bin"
    write_matrix_binary(p, a)
    assert p.stat().st_size == 16 + 16 * 15
    assert np.array_equal(read_matrix_binary(p), a)


def test_binary_truncated(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"\x01\x00")
    with pytest.raises(InvalidInputError):
        read_matrix_binary(p)


def test_csv_round_trip(tmp_path):
    a = ginibre(3, RngStream(2).generator())
    p = tmp_path / "a.csv"
    write_matrix_csv(p, a)
    assert open(p).readline().strip() == "row,col,re,im"
    assert np.array_equal(read_matrix_csv(p), a)
