"""
Brown measure, annuli and radial laws of R-diagonal elements.

For an R-diagonal ``x`` the Brown measure is rotation invariant and its
radial distribution function ``F`` is determined by the law of ``x x*``:

    F^{-1}(t) = S_{xx*}(t - 1) ** (-1/2),    0 < t < 1,

with ``F^{-1}(1) = sqrt(phi(xx*))`` and ``F^{-1}(0) = phi((xx*)^{-1}) ** (-1/2)``
(zero when ``(xx*)^{-1}`` is not integrable).  With an atom of mass ``w0`` at
zero, ``F^{-1}`` vanishes on ``[0, w0]``.

=================  ============================================================
``RadialLaw``      quantile function plus grid-inverted CDF
``radial_law``     build the RadialLaw of ``x`` from the law of ``xx*``
``radial_quantile``  the quantile above, vectorised
``annuli_radii``   radii ``R_0 <= ... <= R_N`` at cumulative weights
``sample_brown``   inverse-CDF radius times uniform phase
=================  ============================================================
"""
import csv
import math
import numbers

import numpy as np

from .errors import InvalidInputError
from .exact import is_exact
from .transforms import FreePoissonLaw, as_s_law

__all__ = [
    "RadialLaw",
    "radial_law",
    "radial_quantile",
    "annuli_radii",
    "sample_brown",
    "disk_law",
    "circle_law",
    "write_quantile_csv",
    "write_samples_csv",
    "CDF_GRID",
]

CDF_GRID = 10_000


class RadialLaw:
    """Rotation-invariant law on the plane given by its radial quantile.

    Parameters
    ----------
    quantile : callable
        Vectorised nondecreasing map ``[0, 1] -> [0, inf)``.
    tag : str, optional
        Closed-form label (``"disk"``, ``"circle"``, ...).
    cdf : callable, optional
        Exact CDF of the radius.  Otherwise the quantile is inverted on a
        grid of ``CDF_GRID`` points with linear interpolation.
    """

    def __init__(self, quantile, tag=None, cdf=None, grid=CDF_GRID):
        self._quantile = quantile
        self.tag = tag
        self._cdf = cdf
        self._grid = int(grid)
        self._table = None

    def quantile(self, t):
        t = np.asarray(t, dtype=float)
        if np.any((t < 0) | (t > 1)) or np.any(np.isnan(t)):
            raise InvalidInputError("quantile level must lie in [0, 1]")
        out = np.asarray(self._quantile(t), dtype=float)
        return out if out.ndim else float(out)

    @property
    def inner(self):
        return float(self.quantile(0.0))

    @property
    def outer(self):
        return float(self.quantile(1.0))

    def _tab(self):
        if self._table is None:
            t = np.linspace(0.0, 1.0, self._grid + 1)
            q = np.maximum.accumulate(np.asarray(self.quantile(t), dtype=float))
            self._table = (t, q)
        return self._table

    def _interp(self, s, side):
        t, q = self._tab()
        s = np.asarray(s, dtype=float)
        k = np.searchsorted(q, s, side=side)
        lo = np.clip(k - 1, 0, len(q) - 1)
        hi = np.clip(k, 0, len(q) - 1)
        dq = q[hi] - q[lo]
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(dq > 0, (s - q[lo]) / dq, 1.0)
        out = t[lo] + np.clip(frac, 0.0, 1.0) * (t[hi] - t[lo])
        out = np.where(k == 0, 0.0, out)
        out = np.where(k >= len(q), 1.0, out)
        return out

    def cdf(self, s):
        """``P(|z| <= s)``."""
        if self._cdf is not None:
            return self._cdf(np.asarray(s, dtype=float))
        out = self._interp(s, "right")
        return out if np.ndim(out) else float(out)

    def cdf_left(self, s):
        """``P(|z| < s)``."""
        if self._cdf is not None:
            return self._cdf(np.asarray(s, dtype=float))
        out = self._interp(s, "left")
        return out if np.ndim(out) else float(out)

    def __repr__(self):
        return f"RadialLaw(tag={self.tag!r}, inner={self.inner:.6g}, outer={self.outer:.6g})"


def _law_bits(mu_xx):
    law = as_s_law(mu_xx)
    m1 = float(law.m1)
    mi = float(law.mean_inverse)
    inner = 0.0 if math.isinf(mi) else mi ** -0.5
    return law, m1, inner, float(law.w0)


def radial_quantile(mu_xx, t):
    """Radial quantile ``S_{xx*}(t - 1) ** (-1/2)`` of the Brown measure.

    Parameters
    ----------
    mu_xx : DiscreteMeasure or SLaw
        Distribution of ``x x*``.
    t : float or array in [0, 1]

    Returns
    -------
    float or ndarray
    """
    law, m1, inner, w0 = _law_bits(mu_xx)
    return _quantile(law, m1, inner, w0, t)


def _quantile(law, m1, inner, w0, t):
    tt = np.asarray(t, dtype=float)
    if np.any(np.isnan(tt)) or np.any((tt < 0) | (tt > 1)):
        raise InvalidInputError("quantile level must lie in [0, 1]")
    flat = np.atleast_1d(tt).ravel()
    out = np.empty_like(flat)
    out[flat == 1.0] = math.sqrt(m1)
    out[flat == 0.0] = inner
    zero = (flat > 0) & (flat <= w0)
    out[zero] = 0.0
    mid = (flat > w0) & (flat > 0) & (flat < 1)
    if mid.any():
        s = np.asarray(law.s(flat[mid] - 1.0), dtype=float)
        out[mid] = s ** -0.5
    out = out.reshape(tt.shape)
    return out if out.ndim else float(out)


def _free_poisson_cdf(c):
    # the quantile sqrt(c - 1 + t) inverts in closed form
    return lambda s: np.clip(np.asarray(s, dtype=float) ** 2 - (c - 1.0), 0.0, 1.0)


def radial_law(mu_xx):
    """RadialLaw of an R-diagonal ``x`` from the law of ``x x*``."""
    law, m1, inner, w0 = _law_bits(mu_xx)
    tag = None
    exact_cdf = None
    if isinstance(law, FreePoissonLaw):
        tag = law.tag
        if law.c >= 1:
            exact_cdf = _free_poisson_cdf(float(law.c))
    return RadialLaw(lambda t: _quantile(law, m1, inner, w0, t), tag=tag, cdf=exact_cdf)


def disk_law():
    """Uniform law on the unit disk (Brown measure of a circular element)."""
    return RadialLaw(lambda t: np.sqrt(np.asarray(t, dtype=float)), tag="disk",
                     cdf=lambda s: np.clip(np.asarray(s, dtype=float), 0.0, 1.0) ** 2)


def circle_law():
    """Uniform law on the unit circle (Brown measure of a Haar unitary)."""
    return RadialLaw(lambda t: np.ones_like(np.asarray(t, dtype=float)), tag="circle")


def annuli_radii(mu_xx, weights):
    """Radii ``R_0..R_N`` splitting the Brown measure into masses ``weights``.

    ``R_k`` is the radial quantile at ``t_1 + ... + t_k``, so the k-th
    diagonal block of the upper triangular form has spectrum in
    ``R_{k-1} <= |z| <= R_k``.
    """
    w = list(weights)
    if not w:
        raise InvalidInputError("need at least one weight")
    if any(isinstance(x, bool) or not isinstance(x, numbers.Real) for x in w):
        raise InvalidInputError("weights must be real numbers")
    if any(x <= 0 for x in w):
        raise InvalidInputError("weights must be positive")
    exact = all(is_exact(x) for x in w)
    total = sum(w)
    if (exact and total != 1) or (not exact and abs(float(total) - 1.0) > 1e-12):
        raise InvalidInputError(f"weights sum to {total}, not 1")
    cum = [0.0]
    acc = 0
    for x in w[:-1]:
        acc += x
        cum.append(min(float(acc), 1.0))
    cum.append(1.0)
    law, m1, inner, w0 = _law_bits(mu_xx)
    return [float(r) for r in _quantile(law, m1, inner, w0, np.array(cum))]


def sample_brown(law, count, rng):
    """``count`` samples ``quantile(U) * exp(i theta)``, U and theta uniform.

    All radii are drawn before the angles.
    """
    if count < 0:
        raise InvalidInputError("count must be >= 0")
    gen = rng if isinstance(rng, np.random.Generator) else rng.generator()
    u = gen.random(count)
    theta = 2.0 * math.pi * gen.random(count)
    r = np.asarray(law.quantile(u), dtype=float) if count else np.zeros(0)
    return r * np.exp(1j * theta)


def _g12(x):
    return format(float(x), ".12g")


def write_quantile_csv(path, t, radius):
    """Two-column CSV ``t,radius`` with 12 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "radius"])
        for a, b in zip(np.ravel(t), np.ravel(radius)):
            w.writerow([_g12(a), _g12(b)])


def write_samples_csv(path, z):
    """Two-column CSV ``re,im`` with 12 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re", "im"])
        for v in np.ravel(z):
            w.writerow([_g12(v.real), _g12(v.imag)])
