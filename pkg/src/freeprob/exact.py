"""
Exact scalar and matrix arithmetic.

Rationals are :class:`fractions.Fraction`.  Rational-complex numbers use
:class:`GaussianRational`, a small value type with exact ``+ - * /`` that
interoperates with ``int`` and ``Fraction`` and collapses to a plain
``Fraction`` whenever the imaginary part vanishes, so that equality and
hashing against ordinary rationals behave as expected.

Exact matrices are numpy ``object`` arrays holding these scalars; numpy's
``@`` operator works on them unchanged.
"""
from fractions import Fraction
import numbers
import re

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "GaussianRational",
    "to_exact",
    "parse_scalar",
    "format_scalar",
    "is_exact",
    "conj",
    "scalar_abs",
    "exact_matrix",
    "eye",
    "matrix_unit",
    "zeros",
    "adjoint",
    "matrix_key",
    "is_zero_matrix",
    "format_matrix",
    "parse_matrix",
]


class GaussianRational:
    """Exact complex number ``re + im*i`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def make(re, im):
        """Return a Fraction when ``im == 0``, otherwise a GaussianRational."""
        if im == 0:
            return Fraction(re)
        return GaussianRational(re, im)

    @staticmethod
    def _parts(other):
        if isinstance(other, GaussianRational):
            return other.re, other.im
        if isinstance(other, (int, Fraction)):
            return Fraction(other), Fraction(0)
        return None

    def __add__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return GaussianRational.make(self.re + p[0], self.im + p[1])

    __radd__ = __add__

    def __sub__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return GaussianRational.make(self.re - p[0], self.im - p[1])

    def __rsub__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return GaussianRational.make(p[0] - self.re, p[1] - self.im)

    def __mul__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        a, b = self.re, self.im
        c, d = p
        return GaussianRational.make(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        c, d = p
        den = c * c + d * d
        if den == 0:
            raise ZeroDivisionError("division by zero")
        a, b = self.re, self.im
        return GaussianRational.make((a * c + b * d) / den, (b * c - a * d) / den)

    def __rtruediv__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return GaussianRational(*p) / self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return 1 / (self ** (-n))
        out = Fraction(1)
        base = self
        while n:
            if n & 1:
                out = base * out
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        p = self._parts(other)
        if p is None:
            if isinstance(other, complex):
                return complex(self) == other
            return NotImplemented
        return self.re == p[0] and self.im == p[1]

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def conjugate(self):
        return GaussianRational.make(self.re, -self.im)

    def __abs__(self):
        return abs(complex(self))

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        return format_scalar(self)


_EXACT_TYPES = (int, Fraction, GaussianRational)


def is_exact(x):
    """True for int, Fraction and GaussianRational (bool excluded)."""
    return isinstance(x, _EXACT_TYPES) and not isinstance(x, bool)


def to_exact(x):
    """Convert ``x`` to an exact scalar, rejecting floating input.

    Accepts ints, Fractions, GaussianRationals, rational strings (``"3/2"``,
    ``"1/2+3i"``) and ``[re, im]`` pairs of those.
    """
    if isinstance(x, bool):
        raise InvalidInputError("boolean is not a scalar")
    if isinstance(x, GaussianRational):
        return GaussianRational.make(x.re, x.im)
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_scalar(x)
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return GaussianRational.make(to_exact(x[0]), to_exact(x[1]))
    if isinstance(x, numbers.Number):
        raise InvalidInputError(
            f"floating value {x!r} rejected: exact rational input required")
    raise InvalidInputError(f"cannot interpret {x!r} as an exact scalar")


_COMPLEX_RE = re.compile(
    r"^\s*(?P<re>[+-]?\d+(?:/\d+)?)?\s*(?:(?P<sign>[+-])\s*(?P<im>\d+(?:/\d+)?)?\s*[ij])?\s*$")
_PURE_IM_RE = re.compile(r"^\s*(?P<im>[+-]?(?:\d+(?:/\d+)?)?)\s*[ij]\s*$")


def parse_scalar(text):
    """Parse ``"p/q"``, ``"a+bi"`` or ``"bi"`` into an exact scalar."""
    if not isinstance(text, str):
        return to_exact(text)
    s = text.strip()
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        pass
    m = _PURE_IM_RE.match(s)
    if m:
        im = m.group("im")
        if im in ("", "+"):
            im = "1"
        elif im == "-":
            im = "-1"
        return GaussianRational.make(0, Fraction(im))
    m = _COMPLEX_RE.match(s)
    if m and m.group("sign"):
        re_part = Fraction(m.group("re") or 0)
        im_part = Fraction(m.group("im") or 1)
        if m.group("sign") == "-":
            im_part = -im_part
        return GaussianRational.make(re_part, im_part)
    raise InvalidInputError(f"not a rational scalar: {text!r}")


def format_scalar(x):
    """Canonical string form: ``"p/q"`` or ``"a+bi"``."""
    if isinstance(x, GaussianRational):
        if x.im == 0:
            return str(x.re)
        im = x.im
        sign = "-" if im < 0 else "+"
        mag = abs(im)
        im_txt = "" if mag == 1 else str(mag)
        if x.re == 0:
            return f"{'-' if im < 0 else ''}{im_txt}i"
        return f"{x.re}{sign}{im_txt}i"
    if isinstance(x, (int, Fraction)):
        return str(Fraction(x))
    return repr(x)


def conj(x):
    return x.conjugate()


def scalar_abs(x):
    """Float modulus of an exact or floating scalar."""
    return abs(complex(x))


# -- exact matrices -----------------------------------------------------------

def exact_matrix(rows):
    """Build an object ndarray of exact scalars from nested rows."""
    arr = np.array(rows, dtype=object)
    if arr.ndim != 2:
        raise InvalidInputError("matrix must be two-dimensional")
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = to_exact(v)
    return out


def zeros(n):
    out = np.empty((n, n), dtype=object)
    out[...] = Fraction(0)
    return out


def eye(n):
    out = zeros(n)
    for i in range(n):
        out[i, i] = Fraction(1)
    return out


def matrix_unit(n, k, l):
    """The matrix unit e_{kl} (0-based indices)."""
    out = zeros(n)
    out[k, l] = Fraction(1)
    return out


def adjoint(a):
    """Conjugate transpose of an exact matrix."""
    out = np.empty((a.shape[1], a.shape[0]), dtype=object)
    for (i, j), v in np.ndenumerate(a):
        out[j, i] = v.conjugate()
    return out


def matrix_key(a):
    """Hashable key for an exact matrix."""
    return (a.shape, tuple(a.ravel().tolist()))


def is_zero_matrix(a):
    return all(v == 0 for v in a.ravel())


def format_matrix(a):
    return [[format_scalar(v) for v in row] for row in a.tolist()]


def parse_matrix(rows, n=None):
    m = exact_matrix(rows)
    if n is not None and m.shape != (n, n):
        raise InvalidInputError(f"expected {n}x{n} matrix, got {m.shape}")
    return m
