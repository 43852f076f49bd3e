from fractions import Fraction
import math

from hypothesis import given, strategies as st
import numpy as np
from numpy.testing import assert_allclose
import pytest

from freeprob.errors import DomainError, InvalidInputError, NotInvertibleError
from freeprob.freecum import (CumulantFunctional, Letter, MomentFunctional, free_poisson,
                              joint_free_functional, scalar_cumulants, scalar_moments)
from freeprob.transforms import (DiscreteMeasure, FreePoissonLaw, MeasureLaw, TruncatedSeries,
                                 compress_s, free_mult_convolution, free_poisson_surrogate,
                                 mean_inverse, moments_from_s_series, psi_eval, r_series,
                                 revert_series, s_eval_negative, s_limit_minus_one, s_series)

K = 8
CATALAN = [1, 2, 5, 14, 42, 132, 429, 1430, 4862]


def fp_moments(c, k=K):
    return scalar_moments([Fraction(c)] * k)


def geometric(c, coef, k):
    """Coefficients of ``1/(coef z + c)`` to order k."""
    c, coef = Fraction(c), Fraction(coef)
    return [(-coef) ** n / c ** (n + 1) for n in range(k + 1)]


TWO_ATOM = DiscreteMeasure([1, 2], [Fraction(1, 2), Fraction(1, 2)])


# -- reversion ---------------------------------------------------------------------------

def test_revert_identity():
    assert revert_series(TruncatedSeries.z(6)) == TruncatedSeries.z(6)


def test_revert_geometric():
    f = TruncatedSeries([0] + [1] * K)
    g = revert_series(f)
    assert g.coeffs == [0] + [(-1) ** k for k in range(K)]


def test_revert_quadratic_catalan_signs():
    g = revert_series(TruncatedSeries([0, 1, 1], 6))
    assert g.coeffs == [0, 1, -1, 2, -5, 14, -42]


def test_revert_errors():
    with pytest.raises(NotInvertibleError):
        revert_series(TruncatedSeries([0, 0, 1]))
    with pytest.raises(InvalidInputError):
        revert_series(TruncatedSeries([1, 1, 1]))


@given(st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=5), min_size=2,
                max_size=7), st.fractions(min_value=1, max_value=3, max_denominator=4))
def test_revert_composes_to_identity(tail, c1):
    f = TruncatedSeries([0, c1] + tail)
    g = revert_series(f)
    assert f.compose(g) == TruncatedSeries.z(f.order)
    assert g.compose(f) == TruncatedSeries.z(f.order)


def test_float_reversion_is_accurate():
    f = TruncatedSeries([0.0, 2.0, 0.3, -0.1, 0.05, 0.0, 0.01])
    resid = f.compose(revert_series(f)) - TruncatedSeries.z(6)
    assert max(abs(c) for c in resid.coeffs) < 1e-13


# -- R and S series ------------------------------------------------------------------------

def test_r_series_semicircle():
    assert r_series([0, 1, 0, 2, 0, 5, 0, 14]).coeffs == [0, 1, 0, 0, 0, 0, 0, 0]


@pytest.mark.parametrize("c", [1, 2, Fraction(3, 2)])
def test_r_series_free_poisson(c):
    assert r_series(fp_moments(c)).coeffs == [c] * K


def test_r_series_point_mass():
    lam = Fraction(5, 3)
    assert r_series([lam ** k for k in range(1, 7)]).coeffs == [lam, 0, 0, 0, 0, 0]


@given(st.lists(st.fractions(min_value=-4, max_value=4, max_denominator=6), min_size=1,
                max_size=8))
def test_r_series_coefficients_are_free_cumulants(ms):
    assert r_series(ms).coeffs == scalar_cumulants(ms)


def test_s_series_point_mass():
    lam = Fraction(7, 2)
    assert s_series([lam ** k for k in range(1, 7)]).coeffs == [1 / lam] + [0] * 5


@pytest.mark.parametrize("c", [1, 2, Fraction(5, 2)])
def test_s_series_free_poisson(c):
    assert s_series(fp_moments(c)).coeffs == geometric(c, 1, K - 1)


@given(st.lists(st.fractions(min_value=-4, max_value=4, max_denominator=6), min_size=1,
                max_size=6).filter(lambda m: m[0] != 0))
def test_s_at_zero_is_reciprocal_mean(ms):
    assert s_series(ms)[0] == 1 / ms[0]


def test_s_series_needs_nonzero_mean():
    with pytest.raises(NotInvertibleError):
        s_series([0, 1, 0, 2])


@pytest.mark.parametrize("moments", [fp_moments(1), fp_moments(2), TWO_ATOM.moments(K),
                                     DiscreteMeasure([Fraction(1, 3), 4], [Fraction(1, 4),
                                                     Fraction(3, 4)]).moments(K)],
                         ids=["fp1", "fp2", "two-atom", "skewed"])
def test_zs_is_inverse_of_zr(moments):
    zr = r_series(moments).shift_up()
    zs = s_series(moments).shift_up()
    assert revert_series(zr) == zs


@given(st.lists(st.fractions(min_value=-4, max_value=4, max_denominator=6), min_size=2,
                max_size=7).filter(lambda m: m[0] != 0))
def test_moments_from_s_inverts_s_series(ms):
    assert moments_from_s_series(s_series(ms)) == ms


# -- multiplicative convolution ---------------------------------------------------------------

def oracle_product_moments(ma, mb, k):
    ka = CumulantFunctional(["a"], table={",".join(["a"] * (n + 1)): v
                                          for n, v in enumerate(scalar_cumulants(ma))})
    kb = CumulantFunctional(["b"], table={",".join(["b"] * (n + 1)): v
                                          for n, v in enumerate(scalar_cumulants(mb))})
    phi = MomentFunctional.from_cumulants(joint_free_functional([ka, kb]))
    return [phi((Letter("a"), Letter("b")) * n) for n in range(1, k + 1)]


def test_point_masses_multiply():
    d2 = [2 ** k for k in range(1, 4)]
    d3 = [3 ** k for k in range(1, 4)]
    assert free_mult_convolution(d2, d3, 3) == [6, 36, 216]


def test_free_poisson_square():
    got = free_mult_convolution(CATALAN, CATALAN, 6)
    assert got[:2] == [1, 3]
    assert got == oracle_product_moments(CATALAN[:6], CATALAN[:6], 6)


def test_point_mass_one_is_identity():
    mu = TWO_ATOM.moments(6)
    assert free_mult_convolution(mu, [1] * 6, 6) == mu


@pytest.mark.parametrize("a,b", [
    (TWO_ATOM.moments(6), fp_moments(2, 6)),
    (DiscreteMeasure([Fraction(1, 2), 3], [Fraction(1, 3), Fraction(2, 3)]).moments(6),
     TWO_ATOM.moments(6)),
    ([Fraction(5, 2) ** k for k in range(1, 7)], fp_moments(Fraction(3, 2), 6)),
], ids=["two-atom*fp2", "two-atom*two-atom", "delta*fp"])
def test_s_multiplicativity_matches_free_product(a, b):
    assert free_mult_convolution(a, b, 6) == oracle_product_moments(a, b, 6)


def test_convolution_accepts_measures():
    assert free_mult_convolution(TWO_ATOM, TWO_ATOM, 4) == \
        free_mult_convolution(TWO_ATOM.moments(4), TWO_ATOM.moments(4), 4)


def test_convolution_zero_mean():
    with pytest.raises(NotInvertibleError):
        free_mult_convolution([0, 1, 0], [1, 2, 5], 3)


# -- psi and numeric S ---------------------------------------------------------------------------

def test_psi_examples():
    assert psi_eval(TWO_ATOM, 0.0) == 0
    a, u = 2.5, -0.7
    assert psi_eval(DiscreteMeasure([a], [1]), u) == pytest.approx(u * a / (1 - u * a))
    assert psi_eval(TWO_ATOM, -1e12) == pytest.approx(-1.0, abs=1e-11)
    with pytest.raises(DomainError):
        psi_eval(TWO_ATOM, 0.5)


def test_psi_is_increasing_with_atom_limit():
    mu = DiscreteMeasure([0, 1, 3], [Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)])
    u = -np.logspace(-3, 6, 200)[::-1]
    vals = psi_eval(mu, u)
    assert np.all(np.diff(vals) > 0)
    assert vals[0] == pytest.approx(float(mu.w0) - 1, abs=1e-5)


def test_s_of_point_mass():
    mu = DiscreteMeasure([Fraction(5, 2)], [1])
    assert_allclose(s_eval_negative(mu, [-0.9, -0.5, -0.1]), 0.4, rtol=1e-10)


def test_s_near_zero_is_reciprocal_mean():
    assert s_eval_negative(TWO_ATOM, -1e-7) == pytest.approx(2 / 3, rel=1e-6)


@pytest.mark.parametrize("c", [1.0, 1.5, 2.0, 3.0])
def test_free_poisson_surrogate_s(c):
    mu = free_poisson_surrogate(c)
    assert s_eval_negative(mu, -0.5) == pytest.approx(1 / (c - 0.5), abs=1e-9)


def test_s_domain_errors():
    for z in (0.0, -1.0, 0.3, -1.5):
        with pytest.raises(DomainError):
            s_eval_negative(TWO_ATOM, z)
    mu = DiscreteMeasure([0, 1], [Fraction(1, 4), Fraction(3, 4)])
    with pytest.raises(DomainError):
        s_eval_negative(mu, -0.8)
    assert math.isfinite(s_eval_negative(mu, -0.7))


def test_mean_inverse_examples():
    assert mean_inverse(TWO_ATOM) == Fraction(3, 4)
    assert abs(s_limit_minus_one(TWO_ATOM) - 0.75) <= 1e-8
    mu = DiscreteMeasure([0, 2], [Fraction(1, 4), Fraction(3, 4)])
    assert mean_inverse(mu) == math.inf and s_limit_minus_one(mu) == math.inf
    assert mean_inverse(DiscreteMeasure([4], [1])) == Fraction(1, 4)


positive_measures = st.lists(
    st.tuples(st.floats(0.05, 20.0), st.floats(0.05, 1.0)), min_size=1, max_size=6
).map(lambda aw: DiscreteMeasure([a for a, _ in aw],
                                 list(np.array([w for _, w in aw]) / sum(w for _, w in aw))))


@given(positive_measures, st.floats(-50.0, -0.01))
def test_psi_of_inverse(mu, t):
    assert abs(psi_eval(mu.inverse(), t) + psi_eval(mu, 1 / t) + 1) <= 1e-10


@given(positive_measures)
def test_s_of_inverse(mu):
    s = np.round(np.arange(1, 10) / 10, 12)
    prod = s_eval_negative(mu, -s) * s_eval_negative(mu.inverse(), s - 1)
    assert np.max(np.abs(prod - 1)) <= 1e-8


@given(positive_measures)
def test_limit_matches_mean_inverse(mu):
    assert s_limit_minus_one(mu) == pytest.approx(float(mean_inverse(mu)), rel=1e-8)


# -- compression --------------------------------------------------------------------------------

def test_compress_identity():
    S = s_series(fp_moments(2))
    assert compress_s(S, 1) == S


def test_compress_free_poisson():
    c = Fraction(3, 2)
    S = compress_s(s_series(fp_moments(c)), Fraction(1, 2))
    assert S.coeffs == geometric(c, Fraction(1, 2), K - 1)
    law = compress_s(FreePoissonLaw(2.0), 0.5)
    z = np.array([-0.9, -0.4, -0.1])
    assert_allclose(law.s(z), 1 / (z / 2 + 2.0), rtol=1e-14)


@pytest.mark.parametrize("s", [Fraction(1, 2), Fraction(1, 3), Fraction(4, 5)])
def test_compression_matches_cumulant_rescaling(s):
    moments = TWO_ATOM.moments(K)
    kappas = scalar_cumulants(moments)
    scaled = scalar_moments([k * s ** n for n, k in enumerate(kappas)])
    assert s_series(scaled) == compress_s(s_series(moments), s)


def test_compress_evaluator_and_bad_parameter():
    law = MeasureLaw(TWO_ATOM)
    f = compress_s(law.s, 0.5)
    assert f(-0.4) == pytest.approx(law.s(-0.2))
    for bad in (0, -0.1, 1.5):
        with pytest.raises(DomainError):
            compress_s(law, bad)


# -- measures and JSON -------------------------------------------------------------------------

def test_discrete_measure_validation_and_json():
    mu = DiscreteMeasure([2, 1], ["1/3", "2/3"])
    assert mu.atoms == [1, 2] and mu.weights == [Fraction(2, 3), Fraction(1, 3)]
    assert DiscreteMeasure.from_json(mu.to_json()).moments(3) == mu.moments(3)
    for atoms, weights in [([1], [Fraction(1, 2)]), ([-1], [1]), ([1, 2], [1, 0]), ([], [])]:
        with pytest.raises(InvalidInputError):
            DiscreteMeasure(atoms, weights)


def test_series_json_round_trip():
    S = s_series(fp_moments(2))
    assert TruncatedSeries.from_json(S.to_json()) == S


def test_free_poisson_law_endpoints():
    law = FreePoissonLaw(2)
    assert law.mean_inverse == 1.0 and law.w0 == 0
    assert FreePoissonLaw(1).mean_inverse == math.inf
    assert FreePoissonLaw(0.5).w0 == 0.5
