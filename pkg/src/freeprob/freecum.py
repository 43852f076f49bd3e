"""
Scalar free cumulants over words in a finite generator alphabet.

A word is a tuple of :class:`Letter`.  A :class:`MomentFunctional` maps words
to exact scalars (``phi``); a :class:`CumulantFunctional` maps nonempty words
to free cumulants (``kappa``).  The two are related by the noncrossing
moment-cumulant formula

    phi(a_1 ... a_n) = sum over pi in NC(n) of kappa_pi(a_1, ..., a_n),

which is used in both directions: inductively for :func:`moments_to_cumulant`
and as a direct sum for :func:`cumulants_to_moment`.

Arithmetic is exact (``Fraction`` or :class:`~freeprob.exact.GaussianRational`)
unless a functional is built with ``exact=False``; that floating mode exists
for Monte Carlo moment tables only.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
import itertools
import json
import math
import threading
from typing import NamedTuple

from .errors import InvalidInputError, ResourceLimitError, TracialityError
from .exact import format_scalar, scalar_abs, to_exact
from .ncpart import (SetPartition, kreweras_complement, nc_index_partitions,
                     nc_join)

__all__ = [
    "Letter",
    "parse_word",
    "format_word",
    "adjoint_word",
    "MomentFunctional",
    "CumulantFunctional",
    "moments_to_cumulant",
    "cumulants_to_moment",
    "evaluate_compound",
    "product_cumulant_ks",
    "joint_free_functional",
    "free_product",
    "mixed_moment_free",
    "composite_functional",
    "is_balanced",
    "balanced_words",
    "is_alternating",
    "check_r_diagonal",
    "freeness_diagnostic_exact",
    "RDiagonalReport",
    "FreenessReport",
    "scalar_cumulants",
    "scalar_moments",
    "haar_unitary",
    "circular",
    "circular_moments",
    "semicircular",
    "free_poisson",
    "r_diagonal",
    "circular_free_poisson",
    "load_functional",
]

INF = math.inf


class Letter(NamedTuple):
    """A generator, possibly starred."""

    gen: str
    starred: bool = False

    def __str__(self):
        return self.gen + ("*" if self.starred else "")

    def adjoint(self):
        return Letter(self.gen, not self.starred)

    @property
    def sign(self):
        """Exponent +1 for a, -1 for a*."""
        return -1 if self.starred else 1


def _parse_letter(x):
    if isinstance(x, Letter):
        return x
    if isinstance(x, tuple) and len(x) == 2:
        return Letter(str(x[0]), bool(x[1]))
    if isinstance(x, str):
        s = x.strip()
        if not s:
            raise InvalidInputError("empty letter")
        if s.endswith("*"):
            return Letter(s[:-1], True)
        return Letter(s, False)
    raise InvalidInputError(f"cannot interpret {x!r} as a letter")


def parse_word(w):
    """Parse ``"a,a*,b"``, a sequence of letter strings, or Letters."""
    if isinstance(w, str):
        s = w.strip()
        if not s:
            return ()
        return tuple(_parse_letter(t) for t in s.split(","))
    if isinstance(w, Letter):
        return (w,)
    return tuple(_parse_letter(t) for t in w)


def format_word(w):
    return ",".join(str(l) for l in w)


def adjoint_word(w):
    return tuple(l.adjoint() for l in reversed(w))


class _Memo:
    """Dictionary cache; reads are lock-free, writes take a lock."""

    def __init__(self):
        self._d = {}
        self._lock = threading.Lock()

    def get(self, key, default=None):
        return self._d.get(key, default)

    def set(self, key, value):
        with self._lock:
            self._d.setdefault(key, value)
        return self._d[key]

    def __len__(self):
        return len(self._d)


_MISSING = object()


def _close(x, y):
    return abs(complex(x) - complex(y)) <= 1e-9 * (1.0 + abs(complex(x)))


class _WordFunctional:

    def __init__(self, alphabet, rule=None, table=None, tracial=False,
                 max_order=None, exact=True, default=_MISSING, name=None):
        self.alphabet = frozenset(str(a) for a in alphabet)
        if not self.alphabet:
            raise InvalidInputError("alphabet must be nonempty")
        if (rule is None) == (table is None):
            raise InvalidInputError("give exactly one of rule or table")
        self.exact = bool(exact)
        self.tracial = bool(tracial)
        self.name = name
        self._rule = rule
        self._table = None
        self._default = default
        if table is not None:
            parsed = {}
            for k, v in table.items():
                w = parse_word(k)
                self._check_letters(w)
                parsed[w] = self._convert(v)
            self._table = parsed
            if max_order is None:
                max_order = max((len(w) for w in parsed), default=0)
        elif max_order is None:
            max_order = INF
        elif max_order != INF:
            raise InvalidInputError("generative functionals must declare max_order = inf")
        if default is not _MISSING and default is not None:
            self._default = self._convert(default)
        self.max_order = max_order
        self._values = _Memo()
        self._checked = _Memo()

    # -- validation -----------------------------------------------------------
    def _convert(self, v):
        if self.exact:
            return to_exact(v)
        if isinstance(v, str):
            return to_exact(v)
        return v

    def _check_letters(self, w):
        for l in w:
            if l.gen not in self.alphabet:
                raise InvalidInputError(
                    f"letter {l} not in alphabet {sorted(self.alphabet)}")

    def word(self, w):
        """Validate and normalise a word for this functional."""
        w = parse_word(w)
        self._check_letters(w)
        if len(w) > self.max_order:
            raise ResourceLimitError(
                f"word of length {len(w)} exceeds max_order {self.max_order}")
        return w

    # -- evaluation -----------------------------------------------------------
    def _raw(self, w):
        v = self._values.get(w, _MISSING)
        if v is not _MISSING:
            return v
        if self._table is not None:
            v = self._table.get(w, _MISSING)
            if v is _MISSING:
                if self._default is _MISSING:
                    raise InvalidInputError(
                        f"word {format_word(w)} missing from the table")
                v = self._default
        else:
            v = self._convert(self._rule(w))
        return self._values.set(w, v)

    def __call__(self, w):
        w = self.word(w)
        if not w:
            return self._empty()
        v = self._raw(w)
        if self.tracial and len(w) > 1 and self._checked.get(w) is None:
            self._check_rotations(w, v)
        return v

    def _check_rotations(self, w, v):
        for k in range(1, len(w)):
            r = w[k:] + w[:k]
            rv = self._raw(r)
            same = (rv == v) if self.exact else _close(rv, v)
            if not same:
                raise TracialityError(
                    f"functional declared tracial but {format_word(w)} -> {v} "
                    f"and {format_word(r)} -> {rv}")
        for k in range(len(w)):
            self._checked.set(w[k:] + w[:k], True)

    def _empty(self):
        raise NotImplementedError

    def words(self, n, letters=None):
        """All words of length ``n`` over the alphabet (stars included)."""
        if letters is None:
            letters = [Letter(g, s) for g in sorted(self.alphabet) for s in (False, True)]
        return [tuple(p) for p in itertools.product(letters, repeat=n)]


class MomentFunctional(_WordFunctional):
    """A moment functional ``phi`` on words; ``phi(empty) = 1``.

    Parameters
    ----------
    alphabet : iterable of str
        Generator ids.
    rule : callable, optional
        ``rule(word) -> scalar`` for generative functionals (``max_order``
        is then infinite).
    table : mapping, optional
        Extensional values keyed by word strings such as ``"a,a*"``.
    tracial : bool
        Declare ``phi`` cyclic; every visited word is checked against its
        rotations and a mismatch raises :class:`TracialityError`.
    max_order : int, optional
        Largest word length that may be evaluated.
    exact : bool
        Reject floating values (default).  ``exact=False`` allows floats.
    default : scalar, optional
        Value for words absent from ``table``.
    """

    def _empty(self):
        return Fraction(1) if self.exact else 1.0

    @classmethod
    def from_cumulants(cls, kappa, tracial=None):
        """The moment functional whose cumulants are ``kappa``."""
        return _derived(cls, kappa, lambda w: cumulants_to_moment(kappa, w),
                        kappa.tracial if tracial is None else tracial)


class CumulantFunctional(_WordFunctional):
    """A free-cumulant functional ``kappa``; undefined on the empty word."""

    def _empty(self):
        raise InvalidInputError("the cumulant of the empty word is undefined")

    @classmethod
    def from_moments(cls, phi):
        """The cumulant functional of ``phi`` (inductive definition)."""
        return _derived(cls, phi, lambda w: moments_to_cumulant(phi, w), phi.tracial)


def _derived(cls, parent, fn, tracial):
    # derived functionals inherit the parent's order bound
    obj = cls(parent.alphabet, rule=fn, tracial=tracial, exact=parent.exact)
    obj.max_order = parent.max_order
    return obj


# -- moment <-> cumulant ------------------------------------------------------

def _kappa_memo(phi):
    memo = getattr(phi, "_kappa_memo", None)
    if memo is None:
        memo = _Memo()
        phi._kappa_memo = memo
    return memo


def _kappa(phi, w, memo):
    v = memo.get(w, _MISSING)
    if v is not _MISSING:
        return v
    total = phi(w)
    for blocks in nc_index_partitions(len(w))[1:]:
        prod = None
        for b in blocks:
            k = _kappa(phi, tuple(w[i] for i in b), memo)
            if k == 0:
                prod = None
                break
            prod = k if prod is None else prod * k
        if prod is not None:
            total = total - prod
    return memo.set(w, total)


def moments_to_cumulant(phi, w):
    """Free cumulant ``kappa(w)`` of the moment functional ``phi``.

    Defined inductively by ``kappa(w) = phi(w) - sum_{pi != 1_n} kappa_pi(w)``
    over noncrossing ``pi``.  Values are memoised per functional.

    Examples
    --------
    >>> phi = MomentFunctional(["a"], table={"a": 1, "a,a": 3})
    >>> moments_to_cumulant(phi, "a,a")
    Fraction(2, 1)
    """
    w = phi.word(w)
    if not w:
        raise InvalidInputError("the cumulant of the empty word is undefined")
    return _kappa(phi, w, _kappa_memo(phi))


def cumulants_to_moment(kappa, w):
    """Moment ``phi(w) = sum_{pi in NC(n)} kappa_pi(w)``."""
    w = kappa.word(w)
    if not w:
        return Fraction(1) if kappa.exact else 1.0
    total = 0
    for blocks in nc_index_partitions(len(w)):
        prod = None
        for b in blocks:
            k = kappa(tuple(w[i] for i in b))
            if k == 0:
                prod = None
                break
            prod = k if prod is None else prod * k
        if prod is not None:
            total = total + prod
    return to_exact(total) if kappa.exact else total


def _partition_positions(pi, n):
    if not isinstance(pi, SetPartition):
        pi = SetPartition(pi)
    if pi.ground != tuple(range(1, n + 1)):
        raise InvalidInputError(
            f"partition ground {pi.ground} does not match word length {n}")
    return [tuple(x - 1 for x in b) for b in pi.blocks]


def evaluate_compound(base, pi, w):
    """Product over the blocks of ``pi`` of ``base`` on each sub-word.

    ``base`` is any word -> scalar callable (a moment or cumulant
    functional), so this gives both ``m_pi`` and ``kappa_pi``.
    """
    w = parse_word(w)
    prod = Fraction(1)
    for b in _partition_positions(pi, len(w)):
        prod = prod * base(tuple(w[i] for i in b))
    return prod


def _grouping_sigma(grouping, n):
    groups = [tuple(int(x) for x in g) for g in grouping]
    expect = 1
    for g in groups:
        if not g:
            raise InvalidInputError("empty group")
        if list(g) != list(range(expect, expect + len(g))):
            raise InvalidInputError(
                f"grouping must be consecutive intervals covering 1..{n}; bad group {g}")
        expect += len(g)
    if expect != n + 1:
        raise InvalidInputError(f"grouping covers 1..{expect - 1}, word has length {n}")
    return SetPartition(groups, range(1, n + 1))


def product_cumulant_ks(kappa, grouping, w):
    """Cumulant of grouped products via the Krawczyk-Speicher formula.

    Parameters
    ----------
    kappa : CumulantFunctional
    grouping : sequence of sequences of int
        Consecutive 1-based position groups covering the word, e.g.
        ``[(1, 2), (3, 4)]`` for ``kappa(a1 a2 (x) a3 a4)``.
    w : word

    Returns
    -------
    scalar
        ``sum kappa_pi(w)`` over ``pi in NC(n)`` with ``pi v sigma = 1_n``,
        ``sigma`` the interval partition of the grouping.
    """
    w = kappa.word(w)
    n = len(w)
    sigma = _grouping_sigma(grouping, n)
    ground = tuple(range(1, n + 1))
    one = SetPartition.one(ground)
    total = Fraction(0) if kappa.exact else 0.0
    for blocks in nc_index_partitions(n):
        pi = SetPartition([[i + 1 for i in b] for b in blocks], ground)
        if nc_join(pi, sigma) != one:
            continue
        prod = None
        for b in blocks:
            k = kappa(tuple(w[i] for i in b))
            if k == 0:
                prod = None
                break
            prod = k if prod is None else prod * k
        if prod is not None:
            total = total + prod
    return total


def joint_free_functional(parts):
    """Cumulant functional of a free family: mixed cumulants vanish.

    Parameters
    ----------
    parts : sequence of CumulantFunctional
        Functionals on pairwise disjoint alphabets.
    """
    parts = list(parts)
    if not parts:
        raise InvalidInputError("need at least one part")
    owner = {}
    for idx, p in enumerate(parts):
        for g in p.alphabet:
            if g in owner:
                raise InvalidInputError(f"generator {g!r} appears in two parts")
            owner[g] = idx
    exact = all(p.exact for p in parts)
    zero = Fraction(0) if exact else 0.0

    def rule(w):
        idx = {owner[l.gen] for l in w}
        if len(idx) != 1:
            return zero
        return parts[idx.pop()](w)

    # order bounds are enforced by the parts on the pure sub-words they see
    return CumulantFunctional(owner.keys(), rule=rule, exact=exact,
                              tracial=all(p.tracial for p in parts))


def free_product(moment_parts, tracial=None):
    """Moment functional of the free product of the given moment functionals."""
    kappas = [CumulantFunctional.from_moments(p) for p in moment_parts]
    joint = joint_free_functional(kappas)
    if tracial is None:
        tracial = all(p.tracial for p in moment_parts)
    return MomentFunctional(joint.alphabet, rule=lambda w: cumulants_to_moment(joint, w),
                            exact=joint.exact, tracial=tracial)


def mixed_moment_free(a_moments, b_cumulants, pattern):
    """Moment of an alternating product of two free sets.

    The pattern alternates letters of ``a_moments`` and letters of
    ``b_cumulants`` (a-letters at either end are optional).  The value is
    ``sum_pi m_{K(pi)}(a-part) * kappa_pi(b-part)`` with ``pi`` over NC of the
    b-positions and ``K(pi)`` its relative Kreweras complement on the
    a-positions.
    """
    w = parse_word(pattern)
    if not w:
        raise InvalidInputError("empty pattern")
    cls = []
    for l in w:
        in_a = l.gen in a_moments.alphabet
        in_b = l.gen in b_cumulants.alphabet
        if in_a == in_b:
            raise InvalidInputError(
                f"letter {l} must belong to exactly one of the two alphabets")
        cls.append("a" if in_a else "b")
    for x, y in zip(cls, cls[1:]):
        if x == y:
            raise InvalidInputError("pattern is not alternating")
    xa = [i + 1 for i, c in enumerate(cls) if c == "a"]
    xb = [i + 1 for i, c in enumerate(cls) if c == "b"]
    if not xb:
        return a_moments(w)
    total = 0
    for blocks in nc_index_partitions(len(xb)):
        pi = SetPartition([[xb[i] for i in b] for b in blocks], xb)
        k = Fraction(1)
        for b in pi.blocks:
            k = k * b_cumulants(tuple(w[x - 1] for x in b))
            if k == 0:
                break
        if k == 0:
            continue
        m = Fraction(1)
        if xa:
            comp = kreweras_complement(pi, xb, xa)
            for b in comp.blocks:
                m = m * a_moments(tuple(w[x - 1] for x in b))
        total = total + m * k
    return to_exact(total) if (a_moments.exact and b_cumulants.exact) else total


def composite_functional(phi, elements, name_prefix=None):
    """Moment functional on composite letters standing for words of ``phi``.

    Parameters
    ----------
    phi : MomentFunctional
    elements : mapping str -> word
        Each new generator id stands for the given word of ``phi``.  A starred
        composite letter stands for the adjoint word.
    """
    subs = {str(k): phi.word(v) for k, v in elements.items()}

    def expand(w):
        out = []
        for l in w:
            sw = subs[l.gen]
            out.extend(adjoint_word(sw) if l.starred else sw)
        return tuple(out)

    f = MomentFunctional(subs.keys(), rule=lambda w: phi(expand(w)), exact=phi.exact,
                         tracial=False)
    f.expand = expand
    return f


# -- R-diagonality and freeness checkers --------------------------------------

def is_balanced(s):
    """True iff the +-1 sequence sums to 0 with all proper partial sums <= 0."""
    s = list(s)
    if not s:
        raise InvalidInputError("balanced test needs a nonempty sequence")
    if any(x not in (-1, 1) for x in s):
        raise InvalidInputError("entries must be +1 or -1")
    acc = 0
    for x in s[:-1]:
        acc += x
        if acc > 0:
            return False
    return acc + s[-1] == 0


def balanced_words(gen, max_length):
    """All balanced words in ``gen`` (a = +1, a* = -1) up to ``max_length``."""
    out = []
    for n in range(2, max_length + 1, 2):
        for signs in itertools.product((-1, 1), repeat=n):
            if is_balanced(signs):
                out.append(tuple(Letter(gen, s < 0) for s in signs))
    return out


def is_alternating(w):
    """Even length and stars alternate (a,a*,a,a*,... or a*,a,a*,a,...)."""
    if len(w) == 0 or len(w) % 2:
        return False
    return all(w[i].starred != w[i + 1].starred for i in range(len(w) - 1))


def _fmt(v):
    return format_scalar(v) if not isinstance(v, float) else repr(v)


@dataclass
class RDiagonalReport:
    passed: bool
    order: int
    violations: list = field(default_factory=list)
    alternating: dict = field(default_factory=dict)
    first_failure_order: int = None

    def to_json(self):
        return {
            "passed": self.passed,
            "order": self.order,
            "first_failure_order": self.first_failure_order,
            "violations": [{"word": w, "value": _fmt(v)} for w, v in self.violations],
            "alternating": {w: _fmt(v) for w, v in self.alternating.items()},
        }


def check_r_diagonal(phi, order, max_violations=50):
    """Check that all non-alternating *-cumulants of ``phi`` vanish.

    ``phi`` must have a one-generator alphabet ``{a}``; every cumulant
    ``kappa(a^{s_1}, ..., a^{s_n})`` with ``n <= order`` is computed.
    """
    if len(phi.alphabet) != 1:
        raise InvalidInputError("check_r_diagonal needs a single-generator functional")
    if order > phi.max_order:
        raise ResourceLimitError(f"order {order} exceeds max_order {phi.max_order}")
    (gen,) = phi.alphabet
    rep = RDiagonalReport(passed=True, order=order)
    n_viol = 0
    for n in range(1, order + 1):
        for w in phi.words(n):
            k = moments_to_cumulant(phi, w)
            if is_alternating(w):
                rep.alternating[format_word(w)] = k
            elif k != 0:
                rep.passed = False
                if rep.first_failure_order is None:
                    rep.first_failure_order = n
                n_viol += 1
                if n_viol <= max_violations:
                    rep.violations.append((format_word(w), k))
    return rep


@dataclass
class FreenessReport:
    order: int
    max_abs: float
    all_zero: bool
    mixed_count: int
    argmax: str = None
    nonzero: list = field(default_factory=list)
    elements: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.all_zero

    def to_json(self):
        return {
            "order": self.order,
            "max_abs_mixed_cumulant": self.max_abs,
            "all_zero": self.all_zero,
            "mixed_count": self.mixed_count,
            "argmax": self.argmax,
            "nonzero": [{"word": w, "value": _fmt(v)} for w, v in self.nonzero],
            "elements": self.elements,
        }


def freeness_diagnostic_exact(phi, families, order, max_listed=20):
    """Largest mixed cumulant between families of elements, up to ``order``.

    Parameters
    ----------
    phi : MomentFunctional
    families : sequence of sequences of words
        Each family is a list of elements; an element is a generator letter
        or a word of ``phi`` (for instance ``"a,a*"``).
    order : int
        Largest number of cumulant arguments.

    Returns
    -------
    FreenessReport
        ``all_zero`` is exact; ``max_abs`` is the float modulus.
    """
    elements = {}
    family_of = {}
    for fi, fam in enumerate(families):
        for ei, el in enumerate(fam):
            name = f"F{fi}.{ei}"
            elements[name] = phi.word(el)
            family_of[name] = fi
    comp = composite_functional(phi, elements)
    letters = [Letter(n) for n in elements]
    rep = FreenessReport(order=order, max_abs=0.0, all_zero=True, mixed_count=0,
                         elements={k: format_word(v) for k, v in elements.items()})
    for n in range(2, order + 1):
        for w in itertools.product(letters, repeat=n):
            if len({family_of[l.gen] for l in w}) < 2:
                continue
            rep.mixed_count += 1
            k = moments_to_cumulant(comp, w)
            if k != 0:
                a = scalar_abs(k)
                label = " (x) ".join(format_word(elements[l.gen]) for l in w)
                if not comp.exact and a <= 0:
                    continue
                rep.all_zero = False
                if a > rep.max_abs:
                    rep.max_abs = a
                    rep.argmax = label
                if len(rep.nonzero) < max_listed:
                    rep.nonzero.append((label, k))
    return rep


# -- single-variable helpers --------------------------------------------------

def scalar_cumulants(moments, exact=True):
    """Free cumulants kappa_1..kappa_K of one self-adjoint variable."""
    moments = list(moments)
    table = {",".join(["a"] * (k + 1)): m for k, m in enumerate(moments)}
    phi = MomentFunctional(["a"], table=table, exact=exact)
    return [moments_to_cumulant(phi, (Letter("a"),) * k) for k in range(1, len(moments) + 1)]


def scalar_moments(cumulants, exact=True):
    """Moments m_1..m_K from free cumulants kappa_1..kappa_K."""
    cumulants = list(cumulants)
    table = {",".join(["a"] * (k + 1)): c for k, c in enumerate(cumulants)}
    kap = CumulantFunctional(["a"], table=table, exact=exact)
    return [cumulants_to_moment(kap, (Letter("a"),) * k) for k in range(1, len(cumulants) + 1)]


# -- standard functionals -----------------------------------------------------

def haar_unitary(gen="u"):
    """Moment functional of a Haar unitary: phi(w) = 1 iff the exponent sum is 0."""
    return MomentFunctional([gen], rule=lambda w: int(sum(l.sign for l in w) == 0),
                            tracial=True, name="haar_unitary")


def r_diagonal(gen, alpha, name="r_diagonal"):
    """Tracial R-diagonal cumulant functional with determining sequence ``alpha``.

    ``kappa(a, a*, ..., a, a*) = kappa(a*, a, ..., a*, a) = alpha(n)`` for
    words of length ``2n``; all other cumulants vanish.
    """
    def rule(w):
        if is_alternating(w):
            return alpha(len(w) // 2)
        return 0
    return CumulantFunctional([gen], rule=rule, tracial=True, name=name)


def circular(gen="c"):
    """Cumulant functional of a circular element (only kappa(c,c*) = kappa(c*,c) = 1)."""
    return r_diagonal(gen, lambda n: int(n == 1), name="circular")


def _count_signed_pairings(signs):
    # noncrossing pairings matching +1 with -1 (interval DP)
    n = len(signs)
    if n % 2:
        return 0

    @lru_cache(maxsize=None)
    def count(i, j):
        if i > j:
            return 1
        total = 0
        for k in range(i + 1, j + 1, 2):
            if signs[k] != signs[i]:
                left = count(i + 1, k - 1)
                if left:
                    total += left * count(k + 1, j)
        return total

    return count(0, n - 1)


def circular_moments(gen="c"):
    """Moment functional of a circular element, counted directly.

    ``phi(w)`` is the number of noncrossing pairings of ``w`` that match each
    ``c`` with a ``c*``; it agrees with ``MomentFunctional.from_cumulants(circular())``
    but stays cheap for long words.
    """
    return MomentFunctional([gen], rule=lambda w: _count_signed_pairings(tuple(l.sign for l in w)),
                            tracial=True, name="circular")


def semicircular(gen="s"):
    """Semicircular cumulants (self-adjoint): only kappa_2 = 1."""
    return CumulantFunctional([gen], rule=lambda w: int(len(w) == 2), tracial=True,
                              name="semicircular")


def free_poisson(c, gen="x"):
    """Free Poisson cumulants (self-adjoint): every kappa_n equals ``c``."""
    c = to_exact(c)
    return CumulantFunctional([gen], rule=lambda w: c, tracial=True, name="free_poisson")


@lru_cache(maxsize=None)
def _cfp_alpha(lam, n):
    return scalar_cumulants([lam] * n)[n - 1]


def circular_free_poisson(lam, gen="a"):
    """R-diagonal element whose ``a a*`` is free Poisson with parameter ``lam``.

    Its determining sequence is the free-cumulant sequence of the constant
    moment sequence ``lam, lam, ...``; then every cumulant of ``a a*`` equals
    ``lam``.
    """
    lam = to_exact(lam)
    return r_diagonal(gen, lambda n: _cfp_alpha(lam, n), name="circular_free_poisson")


# -- JSON ---------------------------------------------------------------------

def load_functional(data):
    """Load ``{"alphabet": [...], "moments"|"cumulants": {...}}``.

    Optional keys: ``"tracial"`` (bool), ``"max_order"`` (int), ``"default"``.
    """
    if isinstance(data, str):
        data = json.loads(data)
    allowed = {"alphabet", "moments", "cumulants", "tracial", "max_order", "default"}
    extra = set(data) - allowed
    if extra:
        raise InvalidInputError(f"unknown keys {sorted(extra)}")
    if ("moments" in data) == ("cumulants" in data):
        raise InvalidInputError("give exactly one of 'moments' or 'cumulants'")
    cls = MomentFunctional if "moments" in data else CumulantFunctional
    table = data.get("moments", data.get("cumulants"))
    kw = {}
    if "default" in data:
        kw["default"] = data["default"]
    return cls(data["alphabet"], table=table, tracial=data.get("tracial", False),
               max_order=data.get("max_order"), **kw)
