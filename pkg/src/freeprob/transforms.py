"""
R-, psi- and S-transforms.

Two layers:

* formal: :class:`TruncatedSeries` with exact (``Fraction``) or float
  coefficients; :func:`r_series`, :func:`s_series`,
  :func:`free_mult_convolution` work on moment sequences.
* analytic: :class:`DiscreteMeasure` on [0, inf) with :func:`psi_eval`,
  :func:`s_eval_negative` and :func:`mean_inverse` on the real intervals
  where the transforms are monotone, plus closed-form S-laws used by the
  Brown-measure predictions.

Conventions: ``psi(t) = sum_{k>=1} m_k t^k``, ``S(z) = (1+z)/z psi^{<-1>}(z)``,
``R(z) = G^{<-1>}(z) - 1/z`` whose coefficient of ``z^{n-1}`` is ``kappa_n``.
"""
from fractions import Fraction
import json
import math
import numbers

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DomainError, InvalidInputError, NotInvertibleError
from .exact import is_exact, to_exact

__all__ = [
    "TruncatedSeries",
    "revert_series",
    "r_series",
    "s_series",
    "moments_from_s_series",
    "free_mult_convolution",
    "DiscreteMeasure",
    "psi_eval",
    "s_eval_negative",
    "s_limit_minus_one",
    "mean_inverse",
    "compress_s",
    "SLaw",
    "FreePoissonLaw",
    "MeasureLaw",
    "as_s_law",
    "free_poisson_surrogate",
]


class TruncatedSeries:
    """Power series ``c0 + c1 z + ... + cK z^K + O(z^{K+1})``.

    Parameters
    ----------
    coeffs : sequence
        ``c0..cK``; exact scalars or floats.
    order : int, optional
        Truncation order ``K``; defaults to ``len(coeffs) - 1`` and pads
        with zeros when larger.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs, order=None):
        c = list(coeffs)
        if not c and order is None:
            raise InvalidInputError("empty series")
        if order is not None:
            if order < 0:
                raise InvalidInputError("order must be >= 0")
            c = c[: order + 1] + [0] * (order + 1 - len(c))
        self.coeffs = [_norm(x) for x in c]

    @property
    def order(self):
        return len(self.coeffs) - 1

    @property
    def exact(self):
        return all(is_exact(x) for x in self.coeffs)

    def __getitem__(self, k):
        return self.coeffs[k]

    def __len__(self):
        return len(self.coeffs)

    def __repr__(self):
        return f"TruncatedSeries({self.coeffs!r})"

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.coeffs == other.coeffs

    @classmethod
    def z(cls, order):
        return cls([0, 1], order)

    def truncate(self, order):
        return TruncatedSeries(self.coeffs, order)

    def _coerce(self, other):
        if isinstance(other, TruncatedSeries):
            return other
        return TruncatedSeries([other], self.order)

    def __add__(self, other):
        o = self._coerce(other)
        K = min(self.order, o.order)
        return TruncatedSeries([self[k] + o[k] for k in range(K + 1)])

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries([-x for x in self.coeffs])

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries([x * other for x in self.coeffs])
        K = min(self.order, other.order)
        out = [0] * (K + 1)
        for i in range(K + 1):
            a = self[i]
            if a == 0:
                continue
            for j in range(K + 1 - i):
                out[i + j] = out[i + j] + a * other[j]
        return TruncatedSeries(out)

    __rmul__ = __mul__

    def reciprocal(self):
        """``1/f`` for ``c0 != 0``."""
        c0 = self[0]
        if c0 == 0:
            raise NotInvertibleError("reciprocal needs c0 != 0")
        K = self.order
        inv0 = _div(1, c0)
        out = [inv0]
        for n in range(1, K + 1):
            s = 0
            for k in range(1, n + 1):
                s = s + self[k] * out[n - k]
            out.append(-s * inv0)
        return TruncatedSeries(out)

    def __truediv__(self, other):
        if isinstance(other, TruncatedSeries):
            return self * other.reciprocal()
        return TruncatedSeries([_div(x, other) for x in self.coeffs])

    def compose(self, g):
        """``f(g(z))`` for an inner series with ``g(0) = 0``."""
        if g[0] != 0:
            raise InvalidInputError("composition needs an inner series with c0 = 0")
        K = min(self.order, g.order)
        g = g.truncate(K)
        acc = TruncatedSeries([self[K]], K)
        for k in range(K - 1, -1, -1):
            acc = acc * g + self[k]
        return acc

    def derivative(self):
        if self.order == 0:
            return TruncatedSeries([0])
        return TruncatedSeries([k * self[k] for k in range(1, self.order + 1)])

    def shift_down(self):
        """``f(z)/z`` for ``c0 = 0``; the order drops by one."""
        if self[0] != 0:
            raise InvalidInputError("shift_down needs c0 = 0")
        return TruncatedSeries(self.coeffs[1:])

    def shift_up(self):
        """``z f(z)``; the order grows by one."""
        return TruncatedSeries([0] + self.coeffs)

    def __call__(self, z):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * z + c
        return acc

    def to_json(self):
        ex = self.exact
        return {"coefficients": [str(Fraction(c)) if ex else float(c) for c in self.coeffs],
                "exact": ex}

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)
        if data.get("exact", True):
            return cls([to_exact(c) for c in data["coefficients"]])
        return cls([float(c) for c in data["coefficients"]])


def _norm(x):
    if isinstance(x, bool):
        raise InvalidInputError("boolean coefficient")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return to_exact(x)
    return x


def _div(a, b):
    if isinstance(a, int) and isinstance(b, int):
        return Fraction(a, b)
    return a / b


def revert_series(f):
    """Compositional inverse ``g`` with ``f(g(z)) = z + O(z^{K+1})``.

    Newton iteration on truncations, ``g <- g - (f(g) - z)/f'(g)``, which
    doubles the number of correct coefficients per step; exact when the
    coefficients are rational.
    """
    K = f.order
    if K < 1:
        raise NotInvertibleError("reversion needs order >= 1")
    if f[0] != 0:
        raise InvalidInputError("reversion needs c0 = 0")
    if f[1] == 0:
        raise NotInvertibleError("reversion needs c1 != 0")
    z = TruncatedSeries.z(K)
    g = TruncatedSeries([0, _div(1, f[1])], K)
    fp = f.derivative()
    steps = max(1, math.ceil(math.log2(K))) + 1
    for _ in range(steps):
        resid = f.compose(g) - z
        if f.exact and all(c == 0 for c in resid.coeffs):
            break
        g = g - resid * fp.compose(g).truncate(K).reciprocal()
        g = g.truncate(K)
    return g


def _moments_list(moments):
    if isinstance(moments, DiscreteMeasure):
        raise InvalidInputError("pass moments, or call measure.moments(K)")
    m = [_norm(x) for x in moments]
    if not m:
        raise InvalidInputError("need at least one moment")
    return m


def r_series(moments):
    """R-transform from moments ``m1..mK``; coefficient of ``z^{n-1}`` is ``kappa_n``.

    Uses ``G(t) = sum_k m_k t^{-k-1}``: with ``H(u) = G(1/u) = u + m1 u^2 + ...``
    one has ``G^{<-1>}(z) = 1/H^{<-1>}(z)``, so ``R(z) = (z / H^{<-1>}(z) - 1)/z``.
    """
    m = _moments_list(moments)
    H = TruncatedSeries([0, 1] + m)
    h = revert_series(H).shift_down()
    q = h.reciprocal()
    return (q - 1).shift_down()


def s_series(moments):
    """S-transform ``((1+z)/z) psi^{<-1>}(z)`` from moments ``m1..mK`` (order K-1)."""
    m = _moments_list(moments)
    if m[0] == 0:
        raise NotInvertibleError("S-transform undefined: m1 = 0")
    psi = TruncatedSeries([0] + m)
    pinv = revert_series(psi).shift_down()
    return pinv * TruncatedSeries([1, 1], pinv.order)


def moments_from_s_series(S):
    """Invert the S pipeline: moments ``m1..m_{K+1}`` from ``S`` of order K."""
    if S[0] == 0:
        raise NotInvertibleError("S(0) = 0 has no moment sequence")
    K = S.order + 1
    one_plus = TruncatedSeries([1, 1], K)
    pinv = S.shift_up() * one_plus.reciprocal()
    psi = revert_series(pinv)
    return psi.coeffs[1:]


def free_mult_convolution(mu, nu, K):
    """Moments ``m1..mK`` of ``mu boxtimes nu`` from ``S_mu S_nu``.

    ``mu`` and ``nu`` are moment sequences (at least K terms) or
    :class:`DiscreteMeasure` objects.
    """
    a = mu.moments(K) if isinstance(mu, DiscreteMeasure) else list(mu)[:K]
    b = nu.moments(K) if isinstance(nu, DiscreteMeasure) else list(nu)[:K]
    if len(a) < K or len(b) < K:
        raise InvalidInputError(f"need {K} moments of each measure")
    if a[0] == 0 or b[0] == 0:
        raise NotInvertibleError("free multiplicative convolution needs nonzero first moments")
    S = s_series(a) * s_series(b)
    return moments_from_s_series(S)[:K]


# -- measures -------------------------------------------------------------------

class DiscreteMeasure:
    """Finitely many atoms on [0, inf) with positive weights summing to 1."""

    def __init__(self, atoms, weights):
        atoms = [_num(a) for a in atoms]
        weights = [_num(w) for w in weights]
        if len(atoms) != len(weights) or not atoms:
            raise InvalidInputError("atoms and weights must be nonempty and of equal length")
        if any(a < 0 for a in atoms):
            raise InvalidInputError("atoms must be >= 0")
        if any(w <= 0 for w in weights):
            raise InvalidInputError("weights must be positive")
        total = sum(weights)
        exact = all(is_exact(w) for w in weights)
        if (exact and total != 1) or (not exact and abs(float(total) - 1.0) > 1e-12):
            raise InvalidInputError(f"weights sum to {total}, not 1")
        order = sorted(range(len(atoms)), key=lambda i: atoms[i])
        self.atoms = [atoms[i] for i in order]
        self.weights = [weights[i] for i in order]
        self._a = np.array([float(a) for a in self.atoms])
        self._w = np.array([float(w) for w in self.weights])

    @property
    def exact(self):
        return all(is_exact(x) for x in self.atoms + self.weights)

    @property
    def w0(self):
        """Weight of the atom at 0."""
        return sum((w for a, w in zip(self.atoms, self.weights) if a == 0), Fraction(0))

    def moments(self, K):
        return [sum((w * a ** k for a, w in zip(self.atoms, self.weights)), Fraction(0))
                for k in range(1, K + 1)]

    def inverse(self):
        """Law of ``a^{-1}``; all atoms must be strictly positive."""
        if any(a == 0 for a in self.atoms):
            raise DomainError("inverse needs strictly positive atoms")
        return DiscreteMeasure([_div(1, a) for a in self.atoms], self.weights)

    def to_json(self):
        def f(x):
            return str(x) if is_exact(x) else float(x)
        return {"atoms": [f(a) for a in self.atoms], "weights": [f(w) for w in self.weights]}

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)
        extra = set(data) - {"atoms", "weights"}
        if extra:
            raise InvalidInputError(f"unknown keys {sorted(extra)}")
        return cls(data["atoms"], data["weights"])

    def __repr__(self):
        return f"DiscreteMeasure(atoms={self.atoms!r}, weights={self.weights!r})"


def _num(x):
    if isinstance(x, bool):
        raise InvalidInputError("boolean is not a number")
    if isinstance(x, (int, str)):
        return to_exact(x)
    if isinstance(x, (Fraction, float)):
        return x
    if isinstance(x, numbers.Real):
        return float(x)
    raise InvalidInputError(f"not a real number: {x!r}")


def psi_eval(mu, u):
    """``psi(u) = sum_i w_i u a_i / (1 - u a_i)`` (vectorised over ``u``)."""
    u = np.asarray(u, dtype=float)
    den = 1.0 - np.multiply.outer(u, mu._a)
    if np.any(den == 0):
        raise DomainError("psi has a pole at u = 1/atom")
    out = (mu._w * np.multiply.outer(u, mu._a) / den).sum(axis=-1)
    return out if out.ndim else float(out)


def _one_plus_psi(mu, u):
    return (mu._w / (1.0 - np.multiply.outer(u, mu._a))).sum(axis=-1)


_PSI_TOL = 1e-12
_MAX_BISECT = 200


def _solve_psi(mu, z, y):
    """Vectorised root ``u <= 0`` of ``psi(u) = z`` (``y = 1 + z``).

    Expanding lower bracket then bisection, stopped when ``psi`` matches
    ``z`` to relative tolerance 1e-12 on both ``z`` and ``1 + z`` or after
    200 halvings.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    lo = -np.ones_like(z)
    for _ in range(2100):
        bad = _one_plus_psi(mu, lo) > y
        if not bad.any():
            break
        lo = np.where(bad, lo * 2.0, lo)
    hi = np.zeros_like(z)
    mid = 0.5 * (lo + hi)
    done = np.zeros(z.shape, dtype=bool)
    for _ in range(_MAX_BISECT):
        mid = np.where(done, mid, 0.5 * (lo + hi))
        p = psi_eval(mu, mid)
        g = _one_plus_psi(mu, mid)
        conv = (np.abs(p - z) <= _PSI_TOL * np.abs(z)) & (np.abs(g - y) <= _PSI_TOL * y)
        done |= conv
        if done.all():
            break
        # psi(mid) too large means the root lies further left; compare in
        # whichever of psi or 1 + psi carries more relative precision
        up = np.where(np.abs(z) <= y, p > z, g > y)
        hi = np.where(~done & up, mid, hi)
        lo = np.where(~done & ~up, mid, lo)
    return mid


def s_eval_negative(mu, z):
    """Numeric ``S_mu(z)`` for ``z`` in ``(w0 - 1, 0)``; vectorised."""
    zz = np.asarray(z, dtype=float)
    w0 = float(mu.w0)
    if np.any(zz <= w0 - 1.0) or np.any(zz >= 0.0):
        raise DomainError(f"S is evaluated on ({w0 - 1.0}, 0); got {z!r}")
    out = _s_from(mu, zz, 1.0 + zz)
    return out.reshape(zz.shape) if zz.ndim else float(out[0])


def _s_from(mu, z, y):
    u = _solve_psi(mu, z, y)
    return np.atleast_1d(y) * u / np.atleast_1d(z)


def s_limit_minus_one(mu, eps0=1e-3, levels=6):
    """Numeric limit of ``S_mu(z)`` as ``z -> -1+`` (``inf`` with an atom at 0).

    ``S(-1 + e)`` is analytic in ``e`` at 0 when there is no atom at 0, so a
    Richardson (Neville) extrapolation over ``e = eps0 / 2^k`` is used.
    """
    if mu.w0 > 0:
        return math.inf
    eps = np.array([eps0 / 2.0 ** k for k in range(levels)])
    vals = _s_from(mu, eps - 1.0, eps)
    # Neville extrapolation to e = 0
    p = list(vals)
    for m in range(1, levels):
        for i in range(levels - m):
            p[i] = (eps[i] * p[i + 1] - eps[i + m] * p[i]) / (eps[i] - eps[i + m])
    return float(p[0])


def mean_inverse(mu):
    """``phi(a^{-1}) = sum w_i / a_i``, ``+inf`` when there is an atom at 0."""
    if any(a == 0 for a in mu.atoms):
        return math.inf
    return sum((_div(w, a) for a, w in zip(mu.atoms, mu.weights)), Fraction(0))


def compress_s(S, s):
    """``z -> S(s z)`` for a series or an evaluator, ``0 < s <= 1``."""
    if not (0 < s <= 1):
        raise DomainError("compression parameter must lie in (0, 1]")
    if isinstance(S, TruncatedSeries):
        return TruncatedSeries([c * s ** k for k, c in enumerate(S.coeffs)])
    if isinstance(S, SLaw):
        return _CompressedLaw(S, s)
    return lambda z: S(s * np.asarray(z, dtype=float) if not is_exact(z) else s * z)


# -- S-laws -----------------------------------------------------------------------

class SLaw:
    """Distribution of a positive element, seen through its S-transform.

    Subclasses provide ``s(z)`` on ``(w0 - 1, 0)``, ``m1``, ``w0`` and
    ``mean_inverse``.
    """

    def s(self, z):
        raise NotImplementedError

    def s_minus_one(self):
        """``S(-1) = phi(a^{-1})`` (``inf`` with an atom at 0)."""
        return float(self.mean_inverse)


class FreePoissonLaw(SLaw):
    """Free Poisson (Marchenko-Pastur) law with rate ``c``: ``S(z) = 1/(z + c)``."""

    def __init__(self, c):
        if c <= 0:
            raise InvalidInputError("free Poisson rate must be positive")
        self.c = c
        self.m1 = c
        self.w0 = max(0.0, 1.0 - float(c))
        self.mean_inverse = 1.0 / (float(c) - 1.0) if c > 1 else math.inf
        self.tag = f"free-poisson({c})"

    def s(self, z):
        z = np.asarray(z, dtype=float)
        out = 1.0 / (z + float(self.c))
        return out if out.ndim else float(out)


class MeasureLaw(SLaw):
    """S-law of a :class:`DiscreteMeasure` via numeric psi inversion."""

    def __init__(self, mu):
        self.mu = mu
        self.m1 = float(mu.moments(1)[0])
        self.w0 = float(mu.w0)
        mi = mean_inverse(mu)
        self.mean_inverse = float(mi)
        self.tag = None

    def s(self, z):
        return s_eval_negative(self.mu, z)


class _CompressedLaw(SLaw):
    def __init__(self, base, t):
        self.base = base
        self.t = t
        self.tag = None

    def s(self, z):
        return self.base.s(self.t * np.asarray(z, dtype=float))


def as_s_law(x):
    """Coerce a DiscreteMeasure or SLaw into an SLaw."""
    if isinstance(x, SLaw):
        return x
    if isinstance(x, DiscreteMeasure):
        return MeasureLaw(x)
    raise InvalidInputError(f"cannot build an S-law from {type(x).__name__}")


def free_poisson_surrogate(c, n_atoms=40):
    """Gauss quadrature rule matching the first ``2 n - 1`` free Poisson moments.

    Uses the Jacobi parameters of the free Poisson law with rate ``c``:
    diagonal ``c, c+1, c+1, ...`` and off-diagonal ``sqrt(c)``.
    """
    if c < 1:
        raise InvalidInputError("surrogate implemented for c >= 1 (no atom at 0)")
    d = np.full(n_atoms, c + 1.0)
    d[0] = c
    e = np.full(n_atoms - 1, math.sqrt(c))
    nodes, vecs = eigh_tridiagonal(d, e)
    w = vecs[0, :] ** 2
    w = w / w.sum()
    nodes = np.clip(nodes, 0.0, None)
    return DiscreteMeasure(list(map(float, nodes)), list(map(float, w)))
