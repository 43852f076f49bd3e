from fractions import Fraction
import csv
import math

import numpy as np
from numpy.testing import assert_allclose
import pytest

from freeprob.brown import (annuli_radii, circle_law, disk_law, radial_law, radial_quantile,
                            sample_brown, write_quantile_csv, write_samples_csv)
from freeprob.errors import InvalidInputError
from freeprob.randmat import RngStream, empirical_radial_cdf, ks_distance
from freeprob.transforms import DiscreteMeasure, FreePoissonLaw, mean_inverse

HALF = Fraction(1, 2)
LAWS = {
    "fp1": FreePoissonLaw(1),
    "fp2": FreePoissonLaw(2),
    "fp3.5": FreePoissonLaw(3.5),
    "delta1": DiscreteMeasure([1], [1]),
    "two-atom": DiscreteMeasure([1, 2], [HALF, HALF]),
    "atom-at-zero": DiscreteMeasure([0, 1, 4], [Fraction(1, 4), Fraction(1, 4), HALF]),
    "spread": DiscreteMeasure([0.1, 0.7, 2.0, 9.0], [0.1, 0.2, 0.3, 0.4]),
}

T = np.linspace(0, 1, 11)


def test_free_poisson_one_is_unit_disk():
    assert_allclose(radial_quantile(FreePoissonLaw(1), T), np.sqrt(T), atol=1e-14)


def test_point_mass_one_is_unit_circle():
    assert_allclose(radial_quantile(DiscreteMeasure([1], [1]), T), 1.0, rtol=1e-10)


def test_free_poisson_two_is_annulus():
    assert_allclose(radial_quantile(FreePoissonLaw(2), T), np.sqrt(1 + T), rtol=1e-14)


def test_quantile_rejects_levels_outside_unit_interval():
    for t in (-0.1, 1.1, float("nan")):
        with pytest.raises(InvalidInputError):
            radial_quantile(FreePoissonLaw(2), t)


@pytest.mark.parametrize("name", LAWS)
def test_quantile_nondecreasing(name):
    q = radial_quantile(LAWS[name], np.linspace(0, 1, 101))
    # interior values come from a bisection solved to 1e-10 relative
    assert np.all(np.diff(q) >= -1e-10 * q.max())


@pytest.mark.parametrize("name", ["two-atom", "spread", "fp2", "fp3.5", "delta1"])
def test_endpoint_identities(name):
    law = LAWS[name]
    q0, q1 = radial_quantile(law, 0.0), radial_quantile(law, 1.0)
    if isinstance(law, DiscreteMeasure):
        m1, mi = float(law.moments(1)[0]), float(mean_inverse(law))
    else:
        m1, mi = float(law.m1), float(law.mean_inverse)
    assert abs(q1 ** 2 - m1) <= 1e-8
    assert abs(q0 ** -2 - mi) <= 1e-8
    # the interior quantile approaches the endpoints
    assert radial_quantile(law, 1 - 1e-9) ** 2 == pytest.approx(m1, rel=1e-6)
    assert radial_quantile(law, 1e-9) ** -2 == pytest.approx(mi, rel=1e-6)


def test_atom_at_zero_gives_zero_inner_radius():
    law = LAWS["atom-at-zero"]
    assert radial_quantile(law, 0.0) == 0.0
    assert_allclose(radial_quantile(law, [0.1, 0.25]), 0.0)
    assert radial_quantile(law, 0.3) > 0


def test_annuli_examples():
    assert_allclose(annuli_radii(FreePoissonLaw(2), [HALF, HALF]),
                    [1, math.sqrt(1.5), math.sqrt(2)], rtol=1e-14)
    assert_allclose(annuli_radii(FreePoissonLaw(1), [HALF, HALF]),
                    [0, math.sqrt(0.5), 1], atol=1e-14)
    mu = LAWS["two-atom"]
    assert_allclose(annuli_radii(mu, [1]), [radial_quantile(mu, 0), radial_quantile(mu, 1)])


@pytest.mark.parametrize("name", LAWS)
def test_annuli_nest(name):
    r = annuli_radii(LAWS[name], [0.1, 0.3, 0.2, 0.4])
    assert all(a <= b + 1e-12 for a, b in zip(r, r[1:]))


def test_annuli_use_cumulative_weights():
    w = [Fraction(1, 5), Fraction(3, 10), HALF]
    got = annuli_radii(FreePoissonLaw(2), w)
    assert_allclose(got, np.sqrt(1 + np.array([0, 0.2, 0.5, 1.0])), rtol=1e-14)


@pytest.mark.parametrize("weights", [[], [HALF], [HALF, 0, HALF], [0.6, 0.6], [True],
                                     ["a", 1]])
def test_bad_weights(weights):
    with pytest.raises(InvalidInputError):
        annuli_radii(FreePoissonLaw(2), weights)


def test_sample_count_zero():
    z = sample_brown(disk_law(), 0, RngStream(1))
    assert z.shape == (0,)


def test_circle_samples_lie_on_circle():
    z = sample_brown(circle_law(), 500, RngStream(2))
    assert_allclose(np.abs(z), 1.0, rtol=1e-14)


def test_disk_samples_match_law():
    z = sample_brown(disk_law(), 100_000, RngStream(3))
    assert ks_distance(empirical_radial_cdf(z), disk_law()) <= 0.02


def test_annulus_samples_match_grid_inverted_cdf():
    law = radial_law(LAWS["two-atom"])
    z = sample_brown(law, 20_000, RngStream(4))
    assert ks_distance(empirical_radial_cdf(z), law) <= 0.02


def test_rotation_invariance():
    z = sample_brown(radial_law(FreePoissonLaw(2)), 5000, RngStream(5))
    rotated = z * np.exp(1j * 0.7)
    assert_allclose(np.sort(np.abs(rotated)), np.sort(np.abs(z)), rtol=1e-13)
    angles = np.angle(z)
    # angles are uniform: mean resultant length is small
    assert abs(np.mean(np.exp(1j * angles))) < 0.05


def test_sampling_is_deterministic():
    law = radial_law(FreePoissonLaw(2))
    a = sample_brown(law, 50, RngStream(9, 3))
    b = sample_brown(law, 50, RngStream(9, 3).generator())
    assert np.array_equal(a, b)


def test_radial_law_cdf_inverts_quantile():
    fp2 = radial_law(FreePoissonLaw(2))
    s = np.linspace(0.9, 1.5, 13)
    assert_allclose(fp2.cdf(s), np.clip(s ** 2 - 1, 0, 1), atol=1e-14)
    law = radial_law(LAWS["spread"])
    t = np.linspace(0.05, 0.95, 19)
    assert_allclose(law.cdf(law.quantile(t)), t, atol=2e-4)
    assert law.inner == pytest.approx(radial_quantile(LAWS["spread"], 0))
    assert law.outer == pytest.approx(radial_quantile(LAWS["spread"], 1))


def test_circle_cdf_has_a_jump():
    law = circle_law()
    assert law.cdf(1.0) == 1.0 and law.cdf_left(1.0) == 0.0
    assert law.cdf(0.99) == 0.0 and law.cdf(1.01) == 1.0


def test_csv_writers(tmp_path):
    p = tmp_path / "q.csv"
    t = np.linspace(0, 1, 3)
    write_quantile_csv(p, t, radial_quantile(FreePoissonLaw(2), t))
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["t", "radius"]
    assert rows[2] == ["0.5", format(math.sqrt(1.5), ".12g")]
    p = tmp_path / "z.csv"
    write_samples_csv(p, np.array([1 + 2j, complex(0, -0.5)]))
    assert open(p).read() == "re,im\n1,2\n0,-0.5\n"
