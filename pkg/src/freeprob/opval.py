"""
Operator-valued cumulants with amalgamation over D = M_N (or its diagonal).

A decorated word ``d0 a1 d1 a2 ... a_n d_n`` interleaves letters with N x N
exact matrices.  By the D-bimodule property every functional here factors as

    F(d0 a1 d1 ... a_n d_n) = d0 . F_inner(a1, ..., a_n; d1, ..., d_{n-1}) . d_n,

so implementations only supply ``F_inner`` (a "rule" taking the letters and
the interior decorations) and the outer decorations are applied here.

Nested compound evaluation of a noncrossing ``pi`` evaluates inner blocks
first; the value of an inner run left-multiplies the argument of the parent
block that follows it, e.g. ``kappa_{{1,3},{2}} = kappa(a1 (x) kappa(a2) a3)``.
"""
from dataclasses import dataclass, field
from fractions import Fraction
import itertools
import json
import math
import re

import numpy as np

from .errors import InvalidInputError, ResourceLimitError
from .exact import (adjoint, eye, format_matrix, format_scalar, is_zero_matrix,
                    matrix_key, matrix_unit, parse_matrix, to_exact, zeros)
from .freecum import (Letter, MomentFunctional, _Memo,
                      cumulants_to_moment, format_word, is_alternating,
                      parse_word)
from .ncpart import (SetPartition, is_noncrossing, kreweras_complement,
                     nc_index_partitions)

__all__ = [
    "DecoratedWord",
    "WeightedTrace",
    "MatrixMomentFunctional",
    "MatrixCumulantFunctional",
    "matrix_cumulant",
    "evaluate_nested_compound",
    "lift_entrywise",
    "matrix_model",
    "from_scalar",
    "amalgamated_free_product",
    "mixed_moment_amalgamated",
    "check_constant_cyclic",
    "check_rdiag_amalgamated",
    "weighted_trace",
    "compatible_scalar_functional",
    "unit_name",
    "load_matrix_functional",
]

INF = math.inf
_MISSING = object()


# -- decorated words ----------------------------------------------------------

class DecoratedWord:
    """``d0 a1 d1 ... a_n d_n``; decorations default to the identity.

    Parameters
    ----------
    letters : word
    N : int
    decorations : sequence of n+1 matrices, optional
        ``(d0, d1, ..., d_n)``; ``None`` entries mean the identity.
    """

    __slots__ = ("letters", "decorations", "N")

    def __init__(self, letters, N, decorations=None):
        self.letters = parse_word(letters)
        self.N = int(N)
        n = len(self.letters)
        if decorations is None:
            decorations = [None] * (n + 1)
        decorations = list(decorations)
        if len(decorations) != n + 1:
            raise InvalidInputError(
                f"a word of length {n} needs {n + 1} decorations, got {len(decorations)}")
        ident = eye(self.N)
        decs = []
        for d in decorations:
            if d is None:
                decs.append(ident)
            else:
                d = d if isinstance(d, np.ndarray) and d.dtype == object else parse_matrix(d)
                if d.shape != (self.N, self.N):
                    raise InvalidInputError(f"decoration of shape {d.shape}, expected N={self.N}")
                decs.append(d)
        self.decorations = tuple(decs)

    @classmethod
    def plain(cls, letters, N):
        return cls(letters, N)

    @classmethod
    def with_inner(cls, letters, N, inner, left=None, right=None):
        """Word with interior decorations ``inner = (d1, ..., d_{n-1})``."""
        return cls(letters, N, [left] + list(inner) + [right])

    @property
    def inner(self):
        return self.decorations[1:-1]

    def __len__(self):
        return len(self.letters)

    def __repr__(self):
        return f"DecoratedWord({format_word(self.letters)!r}, N={self.N})"


def _as_dword(w, N):
    if isinstance(w, DecoratedWord):
        if w.N != N:
            raise InvalidInputError(f"word has N={w.N}, functional has N={N}")
        return w
    return DecoratedWord(w, N)


def unit_name(N, k, l):
    """Generator id of the matrix unit e_{kl} (1-based)."""
    return f"e{k}{l}" if N < 10 else f"e{k}_{l}"


# -- functionals --------------------------------------------------------------

class _MatrixWordFunctional:
    def __init__(self, N, alphabet, rule, max_order=INF, algebra="full", name=None):
        self.N = int(N)
        if self.N < 1:
            raise InvalidInputError("N must be positive")
        if algebra not in ("full", "diagonal"):
            raise InvalidInputError("algebra must be 'full' or 'diagonal'")
        self.alphabet = frozenset(str(a) for a in alphabet)
        self.algebra = algebra
        self.max_order = max_order
        self.name = name
        self._rule = rule
        self._memo = _Memo()
        self.identity = eye(self.N)

    def _check(self, letters):
        for l in letters:
            if l.gen not in self.alphabet:
                raise InvalidInputError(f"letter {l} not in alphabet {sorted(self.alphabet)}")
        if len(letters) > self.max_order:
            raise ResourceLimitError(
                f"word of length {len(letters)} exceeds max_order {self.max_order}")

    def inner(self, letters, inner):
        """``F_inner(a1..an; d1..d_{n-1})`` with memoisation."""
        letters = tuple(letters)
        inner = tuple(inner)
        if len(inner) != max(len(letters) - 1, 0):
            raise InvalidInputError("interior decoration count must be n-1")
        key = (letters, tuple(matrix_key(d) for d in inner))
        v = self._memo.get(key, _MISSING)
        if v is not _MISSING:
            return v
        self._check(letters)
        v = self._evaluate(letters, inner)
        return self._memo.set(key, v)

    def _evaluate(self, letters, inner):
        v = self._rule(letters, inner)
        if not isinstance(v, np.ndarray):
            v = parse_matrix(v, self.N)
        return v

    def __call__(self, w):
        w = _as_dword(w, self.N)
        d = w.decorations
        if not w.letters:
            return self._empty(d[0])
        return d[0] @ self.inner(w.letters, w.inner) @ d[-1]

    def units(self):
        """Matrix units spanning D."""
        N = self.N
        if self.algebra == "diagonal":
            return [matrix_unit(N, k, k) for k in range(N)]
        return [matrix_unit(N, k, l) for k in range(N) for l in range(N)]


class MatrixMomentFunctional(_MatrixWordFunctional):
    """D-valued expectation ``E`` on decorated words.

    Parameters
    ----------
    N : int
    alphabet : iterable of str
    rule : callable
        ``rule(letters, inner_decorations) -> N x N exact matrix`` giving
        ``E(a1 d1 a2 ... d_{n-1} a_n)``.
    max_order : int or inf
    algebra : {"full", "diagonal"}
        D is M_N or its diagonal projections.
    """

    def _empty(self, d0):
        return d0

    @classmethod
    def from_cumulants(cls, kappa):
        """``E = sum over NC of nested kappa_pi``."""
        def rule(letters, inner):
            total = zeros(kappa.N)
            decs = [kappa.identity] + list(inner) + [kappa.identity]
            for blocks in nc_index_partitions(len(letters)):
                total = total + _nested(lambda V, l, i: kappa.inner(l, i), blocks,
                                        letters, decs, kappa.identity)
            return total
        return cls(kappa.N, kappa.alphabet, rule, kappa.max_order, kappa.algebra)


class MatrixCumulantFunctional(_MatrixWordFunctional):
    """D-valued cumulant functional ``kappa^D``; same rule signature as E."""

    def _empty(self, d0):
        raise InvalidInputError("the cumulant of the empty word is undefined")

    @classmethod
    def from_moments(cls, E):
        """Inductive definition ``kappa(w) = E(w) - sum_{pi != 1} kappa_pi(w)``."""
        def rule(letters, inner):
            out = E.inner(letters, inner)
            decs = [E.identity] + list(inner) + [E.identity]
            for blocks in nc_index_partitions(len(letters))[1:]:
                out = out - _nested(lambda V, l, i: obj.inner(l, i), blocks,
                                    letters, decs, E.identity)
            return out
        obj = cls(E.N, E.alphabet, rule, E.max_order, E.algebra)
        return obj


def _nested(base, blocks, letters, decs, ident):
    """Nested compound value of the partition ``blocks`` (0-based, noncrossing).

    ``decs`` has ``len(letters) + 1`` entries; the outer two are applied.
    ``base(V, sub_letters, sub_inner)`` evaluates one block.
    """
    owner = {}
    for b in blocks:
        for x in b:
            owner[x] = b

    def rec(lo, hi):
        out = ident
        pos = lo
        while pos < hi:
            V = owner[pos]
            sub_inner = []
            for j in range(len(V) - 1):
                sub_inner.append(decs[V[j] + 1] @ rec(V[j] + 1, V[j + 1]))
            val = base(V, tuple(letters[v] for v in V), tuple(sub_inner)) @ decs[V[-1] + 1]
            out = out @ val
            pos = V[-1] + 1
        return out

    n = len(letters)
    if n == 0:
        return decs[0]
    return decs[0] @ rec(0, n)


def _cumulant_of(E):
    k = getattr(E, "_kappa_functional", None)
    if k is None:
        k = MatrixCumulantFunctional.from_moments(E)
        E._kappa_functional = k
    return k


def matrix_cumulant(E, w):
    """D-valued free cumulant ``kappa^D(w)`` of the expectation ``E``."""
    w = _as_dword(w, E.N)
    if not w.letters:
        raise InvalidInputError("the cumulant of the empty word is undefined")
    return _cumulant_of(E)(w)


def _inner_callable(base):
    if isinstance(base, _MatrixWordFunctional):
        return base.inner, base.N
    raise InvalidInputError("base must be a MatrixMomentFunctional or MatrixCumulantFunctional")


def evaluate_nested_compound(base, pi, w):
    """Nested compound ``base_pi(w)`` for a noncrossing partition ``pi``.

    Parameters
    ----------
    base : MatrixMomentFunctional or MatrixCumulantFunctional
    pi : SetPartition of {1..n}
    w : DecoratedWord (or plain word, identity decorations)
    """
    fn, N = _inner_callable(base)
    w = _as_dword(w, N)
    n = len(w.letters)
    if not isinstance(pi, SetPartition):
        pi = SetPartition(pi)
    if pi.ground != tuple(range(1, n + 1)):
        raise InvalidInputError("partition does not match the word length")
    if not is_noncrossing(pi):
        raise InvalidInputError("nested evaluation needs a noncrossing partition")
    blocks = [tuple(x - 1 for x in b) for b in pi.blocks]
    return _nested(lambda V, l, i: fn(l, i), blocks, w.letters, w.decorations, eye(N))


# -- constructions --------------------------------------------------------------

def from_scalar(phi):
    """Embed a scalar moment functional as a 1 x 1 matrix functional."""
    def rule(letters, inner):
        v = phi(letters)
        for d in inner:
            v = v * d[0, 0]
        return np.array([[v]], dtype=object)
    return MatrixMomentFunctional(1, phi.alphabet, rule, phi.max_order)


class LiftedFunctional(MatrixMomentFunctional):
    """Expectation of ``m(x)z`` elements; see :func:`lift_entrywise`."""

    def closed_form_cumulant(self, w):
        w = _as_dword(w, self.N)
        return w.decorations[0] @ self._closed_kappa(w.letters, w.inner) @ w.decorations[-1]

    def closed_form_moment(self, w):
        """``(Id (x) phi~)`` applied directly: phi~(z-word) . m1 d1 m2 ... m_n."""
        w = _as_dword(w, self.N)
        zw, prod = self._factor(w.letters, w.inner)
        return w.decorations[0] @ (prod * cumulants_to_moment(self.scalar_kappa, zw)) @ w.decorations[-1]

    def _factor(self, letters, inner):
        zw = []
        prod = self.identity
        for i, l in enumerate(letters):
            m, z = self.entries[l.gen]
            if l.starred:
                m, z = adjoint(m), z.adjoint()
            zw.append(z)
            prod = prod @ m
            if i < len(inner):
                prod = prod @ inner[i]
        return tuple(zw), prod

    def _closed_kappa(self, letters, inner):
        zw, prod = self._factor(letters, inner)
        k = self.scalar_kappa(zw)
        return prod * k


def lift_entrywise(scalar_kappa, entries):
    """Matrix functional of generators ``m (x) z`` from scalar cumulants.

    Parameters
    ----------
    scalar_kappa : CumulantFunctional
        Cumulants of the scalar generators ``z``.
    entries : mapping generator -> (matrix, scalar generator)
        Each new generator stands for ``m (x) z``; ``(m (x) z)* = m* (x) z*``.

    Returns
    -------
    LiftedFunctional
        Its D-valued cumulants are ``kappa~(z1..zn) . m1 d1 m2 ... m_n`` and its
        moments are the NC sum of their nested compounds.
    """
    parsed = {}
    N = None
    for g, (m, z) in entries.items():
        m = m if isinstance(m, np.ndarray) and m.dtype == object else parse_matrix(m)
        if m.shape[0] != m.shape[1]:
            raise InvalidInputError("lift matrices must be square")
        if N is None:
            N = m.shape[0]
        elif m.shape[0] != N:
            raise InvalidInputError("all lift matrices must share one dimension")
        zl = parse_word(z)
        if len(zl) != 1:
            raise InvalidInputError("each lifted generator needs one scalar letter")
        if zl[0].gen not in scalar_kappa.alphabet:
            raise InvalidInputError(f"scalar generator {zl[0]} not in the scalar alphabet")
        parsed[str(g)] = (m, zl[0])
    if N is None:
        raise InvalidInputError("no entries to lift")

    kap = MatrixCumulantFunctional(N, parsed.keys(), lambda l, i: obj._closed_kappa(l, i),
                                   scalar_kappa.max_order)
    obj = LiftedFunctional(N, parsed.keys(), rule=None, max_order=scalar_kappa.max_order)
    obj.entries = parsed
    obj.scalar_kappa = scalar_kappa
    obj.closed_kappa = kap

    def rule(letters, inner):
        total = zeros(N)
        decs = [obj.identity] + list(inner) + [obj.identity]
        for blocks in nc_index_partitions(len(letters)):
            total = total + _nested(lambda V, l, i: kap.inner(l, i), blocks, letters,
                                    decs, obj.identity)
        return total
    obj._rule = rule
    return obj


def _poly_mul(p, q):
    out = {}
    for w1, c1 in p.items():
        for w2, c2 in q.items():
            w = w1 + w2
            v = out.get(w, 0) + c1 * c2
            if v == 0:
                out.pop(w, None)
            else:
                out[w] = v
    return out


def _formal_matmul(A, B, N):
    C = [[{} for _ in range(N)] for _ in range(N)]
    for i in range(N):
        for j in range(N):
            if not A[i][j]:
                continue
            for k in range(N):
                if not B[j][k]:
                    continue
                for w, c in _poly_mul(A[i][j], B[j][k]).items():
                    v = C[i][k].get(w, 0) + c
                    if v == 0:
                        C[i][k].pop(w, None)
                    else:
                        C[i][k][w] = v
    return C


def matrix_model(N, entries, scalar_phi, gen="x"):
    """``E = Id (x) phi~`` for the matrix ``x = [x_ij]`` of scalar generators.

    Parameters
    ----------
    N : int
    entries : mapping (i, j) -> scalar generator id
        1-based positions of the nonzero entries; missing entries are 0.
    scalar_phi : MomentFunctional
        Joint moments of the scalar entries.
    gen : str
        Generator id of the matrix element.
    """
    ent = {}
    for (i, j), z in entries.items():
        if not (1 <= i <= N and 1 <= j <= N):
            raise InvalidInputError(f"entry ({i},{j}) outside a {N}x{N} matrix")
        zl = parse_word(z)
        if len(zl) != 1 or zl[0].gen not in scalar_phi.alphabet:
            raise InvalidInputError(f"entry ({i},{j}) must be one scalar generator")
        ent[(i - 1, j - 1)] = zl[0]

    X = [[({(ent[(i, j)],): Fraction(1)} if (i, j) in ent else {}) for j in range(N)]
         for i in range(N)]
    Xs = [[({(ent[(j, i)].adjoint(),): Fraction(1)} if (j, i) in ent else {}) for j in range(N)]
          for i in range(N)]

    def const(d):
        return [[({(): d[i, j]} if d[i, j] != 0 else {}) for j in range(N)] for i in range(N)]

    def rule(letters, inner):
        acc = None
        for idx, l in enumerate(letters):
            M = Xs if l.starred else X
            acc = M if acc is None else _formal_matmul(acc, M, N)
            if idx < len(inner):
                acc = _formal_matmul(acc, const(inner[idx]), N)
        out = zeros(N)
        for i in range(N):
            for j in range(N):
                v = Fraction(0)
                for w, c in acc[i][j].items():
                    v = v + c * scalar_phi(w)
                out[i, j] = v
        return out

    E = MatrixMomentFunctional(N, [gen], rule, INF)
    E.entries = ent
    E.scalar_phi = scalar_phi
    return E


def amalgamated_free_product(kappas):
    """D-valued cumulants of a family free with amalgamation (mixed vanish)."""
    kappas = list(kappas)
    N = kappas[0].N
    owner = {}
    for idx, k in enumerate(kappas):
        if k.N != N:
            raise InvalidInputError("all parts must share N")
        for g in k.alphabet:
            if g in owner:
                raise InvalidInputError(f"generator {g!r} appears in two parts")
            owner[g] = idx

    def rule(letters, inner):
        idx = {owner[l.gen] for l in letters}
        if len(idx) != 1:
            return zeros(N)
        return kappas[idx.pop()].inner(letters, inner)

    return MatrixCumulantFunctional(N, owner.keys(), rule, min(k.max_order for k in kappas))


def mixed_moment_amalgamated(E_a, kappa_b, w):
    """``E(a1 b1 a2 ... )`` for ``{a}`` free from ``{b}`` with amalgamation.

    Sums the nested value of ``(E u kappa)_{K(pi) u pi}`` over NC partitions
    ``pi`` of the b-positions, where ``K(pi)`` is the relative Kreweras
    complement on the a-positions; a-blocks are evaluated by ``E_a`` and
    b-blocks by ``kappa_b``.
    """
    N = E_a.N
    w = _as_dword(w, N)
    cls = []
    for l in w.letters:
        in_a, in_b = l.gen in E_a.alphabet, l.gen in kappa_b.alphabet
        if in_a == in_b:
            raise InvalidInputError(f"letter {l} must belong to exactly one alphabet")
        cls.append("a" if in_a else "b")
    xa = [i + 1 for i, c in enumerate(cls) if c == "a"]
    xb = [i + 1 for i, c in enumerate(cls) if c == "b"]
    if not xb:
        return E_a(w)
    total = zeros(N)
    for blocks in nc_index_partitions(len(xb)):
        pi = SetPartition([[xb[i] for i in b] for b in blocks], xb)
        allblocks = list(pi.blocks)
        if xa:
            allblocks += list(kreweras_complement(pi, xb, xa).blocks)
        zero_based = [tuple(x - 1 for x in b) for b in allblocks]

        def base(V, l, i):
            f = E_a if cls[V[0]] == "a" else kappa_b
            return f.inner(l, i)
        total = total + _nested(base, zero_based, w.letters, w.decorations, eye(N))
    return total


# -- traces and checkers --------------------------------------------------------

class WeightedTrace:
    """State ``phi0(d) = sum_i t_i d_ii`` on D."""

    def __init__(self, weights):
        w = [to_exact(x) for x in weights]
        if not w or any(x <= 0 for x in w):
            raise InvalidInputError("weights must be positive")
        if sum(w) != 1:
            raise InvalidInputError("weights must sum to 1")
        self.weights = tuple(w)

    @classmethod
    def uniform(cls, N):
        return cls([Fraction(1, N)] * N)

    @property
    def N(self):
        return len(self.weights)

    def __call__(self, d):
        if d.shape != (self.N, self.N):
            raise InvalidInputError("weight/dimension mismatch")
        return sum((t * d[i, i] for i, t in enumerate(self.weights)), Fraction(0))


def weighted_trace(E, t, w):
    """Compatible scalar state ``phi(w) = phi0(E(w))``."""
    if not isinstance(t, WeightedTrace):
        t = WeightedTrace(t)
    if t.N != E.N:
        raise InvalidInputError("weight/dimension mismatch")
    return t(E(w))


def compatible_scalar_functional(E, t=None, units=True):
    """Scalar moment functional ``phi = phi0 o E``.

    With ``units=True`` the alphabet also contains the matrix units (ids from
    :func:`unit_name`, with ``e_kl* = e_lk``); consecutive units fold into the
    decorations of the word handed to ``E``.
    """
    t = WeightedTrace.uniform(E.N) if t is None else (
        t if isinstance(t, WeightedTrace) else WeightedTrace(t))
    if t.N != E.N:
        raise InvalidInputError("weight/dimension mismatch")
    N = E.N
    unit_ids = {}
    if units:
        pats = [(k, k) for k in range(N)] if E.algebra == "diagonal" else \
            [(k, l) for k in range(N) for l in range(N)]
        for k, l in pats:
            unit_ids[unit_name(N, k + 1, l + 1)] = (k, l)
    if set(unit_ids) & E.alphabet:
        raise InvalidInputError("alphabet clashes with matrix-unit ids")

    def rule(w):
        letters = []
        decs = [eye(N)]
        for l in w:
            if l.gen in unit_ids:
                k, m = unit_ids[l.gen]
                if l.starred:
                    k, m = m, k
                decs[-1] = decs[-1] @ matrix_unit(N, k, m)
            else:
                letters.append(l)
                decs.append(eye(N))
        return t(E(DecoratedWord(letters, N, decs)))

    return MomentFunctional(set(E.alphabet) | set(unit_ids), rule=rule)


@dataclass
class ConstantCyclicReport:
    passed: bool
    N: int
    order: int
    c: dict = field(default_factory=dict)
    kappa_scalar: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    def to_json(self):
        return {
            "passed": self.passed,
            "N": self.N,
            "order": self.order,
            "c": {str(n): format_scalar(v) for n, v in self.c.items()},
            "kappa_scalar": {str(n): format_scalar(v) for n, v in self.kappa_scalar.items()},
            "violations": [{"indices": [list(p) for p in idx], "value": format_scalar(v),
                            "reason": why} for idx, v, why in self.violations],
        }


def check_constant_cyclic(entry_cumulants, N, order, max_violations=50):
    """Check that entry cumulants are constant on cyclic index tuples.

    Parameters
    ----------
    entry_cumulants : callable or mapping
        ``((i1, j1), ..., (in, jn)) -> kappa~(x_{i1 j1}, ..., x_{in jn})``,
        1-based.  Tuples missing from a mapping count as 0.
    N, order : int

    Returns
    -------
    ConstantCyclicReport
        ``c[n]`` is the common cyclic value and ``kappa_scalar[n] = N^(n-1) c[n]``
        is the implied cumulant of ``x`` under the normalised trace.
    """
    if callable(entry_cumulants):
        get = entry_cumulants
    else:
        table = {tuple(tuple(p) for p in k): to_exact(v) for k, v in entry_cumulants.items()}
        get = lambda idx: table.get(idx, Fraction(0))
    rep = ConstantCyclicReport(passed=True, N=N, order=order)
    pairs = [(i, j) for i in range(1, N + 1) for j in range(1, N + 1)]
    for n in range(1, order + 1):
        cn = _MISSING
        for idx in itertools.product(pairs, repeat=n):
            v = to_exact(get(idx))
            cyclic = all(idx[k][1] == idx[(k + 1) % n][0] for k in range(n))
            if cyclic:
                if cn is _MISSING:
                    cn = v
                elif v != cn:
                    rep.passed = False
                    if len(rep.violations) < max_violations:
                        rep.violations.append((idx, v, "cyclic value differs"))
            elif v != 0:
                rep.passed = False
                if len(rep.violations) < max_violations:
                    rep.violations.append((idx, v, "non-cyclic cumulant nonzero"))
        rep.c[n] = cn
        rep.kappa_scalar[n] = cn * Fraction(N) ** (n - 1)
    return rep


@dataclass
class AmalgamatedRDiagonalReport:
    passed: bool
    order: int
    checked: int = 0
    violations: list = field(default_factory=list)
    first_failure_order: int = None

    def to_json(self):
        return {
            "passed": self.passed,
            "order": self.order,
            "checked": self.checked,
            "first_failure_order": self.first_failure_order,
            "violations": [{"word": w, "decorations": d, "value": format_matrix(v)}
                           for w, d, v in self.violations],
        }


def check_rdiag_amalgamated(E, order, max_violations=20):
    """Check that non-alternating D-valued *-cumulants vanish.

    Evaluates ``kappa^D(d1 a^{s1} (x) ... (x) d_n a^{s_n})`` for every sign
    pattern up to ``order`` and every choice of matrix units ``d2..d_n``
    (the leading ``d1`` only multiplies the value from the left, so the
    identity suffices).
    """
    if len(E.alphabet) != 1:
        raise InvalidInputError("check_rdiag_amalgamated needs a one-generator functional")
    if order > E.max_order:
        raise ResourceLimitError(f"order {order} exceeds max_order {E.max_order}")
    (gen,) = E.alphabet
    kap = _cumulant_of(E)
    units = E.units()
    unit_labels = [_unit_label(u) for u in units]
    rep = AmalgamatedRDiagonalReport(passed=True, order=order)
    for n in range(1, order + 1):
        for stars in itertools.product((False, True), repeat=n):
            letters = tuple(Letter(gen, s) for s in stars)
            alt = is_alternating(letters)
            for combo in itertools.product(range(len(units)), repeat=n - 1):
                inner = tuple(units[c] for c in combo)
                v = kap.inner(letters, inner)
                rep.checked += 1
                if not alt and not is_zero_matrix(v):
                    rep.passed = False
                    if rep.first_failure_order is None:
                        rep.first_failure_order = n
                    if len(rep.violations) < max_violations:
                        rep.violations.append((format_word(letters),
                                               [unit_labels[c] for c in combo], v))
    return rep


def _unit_label(u):
    (k,), (l,) = np.nonzero(np.array(u != 0, dtype=bool))
    return f"e{k + 1}{l + 1}"


# -- JSON -----------------------------------------------------------------------

_UNIT_RE = re.compile(r"^e(\d+)_?(\d+)$")


def load_matrix_functional(data):
    """Load a table-defined matrix moment functional.

    Format: ``{"N": 2, "alphabet": ["a"], "moments": {"a,e12,a*": [["1/2","0"],
    ["0","1"]], ...}}``.  Tokens ``e{k}{l}`` between letters name interior
    matrix-unit decorations; no token means the identity.  Words are looked
    up directly when every interior decoration is the identity or a multiple
    of a matrix unit, otherwise by expansion in matrix units.
    """
    if isinstance(data, str):
        data = json.loads(data)
    allowed = {"N", "alphabet", "moments", "max_order", "algebra"}
    extra = set(data) - allowed
    if extra:
        raise InvalidInputError(f"unknown keys {sorted(extra)}")
    N = int(data["N"])
    alphabet = [str(a) for a in data["alphabet"]]
    table = {}
    for key, mat in data["moments"].items():
        toks = [t.strip() for t in key.split(",") if t.strip()]
        letters, slots, pending = [], [], None
        for tok in toks:
            m = _UNIT_RE.match(tok)
            if m and tok not in alphabet and tok.rstrip("*") not in alphabet:
                if not letters or pending is not None:
                    raise InvalidInputError(f"misplaced unit token in {key!r}")
                pending = (int(m.group(1)) - 1, int(m.group(2)) - 1)
            else:
                if letters:
                    slots.append(pending)
                pending = None
                letters.append(parse_word(tok)[0])
        if pending is not None:
            raise InvalidInputError(f"trailing unit token in {key!r}")
        table[(tuple(letters), tuple(slots))] = parse_matrix(mat, N)
    max_order = data.get("max_order", max((len(k[0]) for k in table), default=0))
    ident = eye(N)

    def lookup(letters, slots):
        v = table.get((letters, slots))
        if v is None:
            raise InvalidInputError(f"word {format_word(letters)} with decorations {slots} "
                                    "missing from the table")
        return v

    def rule(letters, inner):
        # direct path: identities and unit multiples
        slots, coef = [], Fraction(1)
        direct = True
        for d in inner:
            if all((d[i, j] == ident[i, j]) for i in range(N) for j in range(N)):
                slots.append(None)
                continue
            nz = [(i, j) for i in range(N) for j in range(N) if d[i, j] != 0]
            if len(nz) == 1:
                slots.append(nz[0])
                coef = coef * d[nz[0]]
            else:
                direct = False
                break
        if direct:
            try:
                return coef * lookup(letters, tuple(slots))
            except InvalidInputError:
                pass
        # expansion path
        options = []
        for d in inner:
            options.append([((i, j), d[i, j]) for i in range(N) for j in range(N) if d[i, j] != 0])
        total = zeros(N)
        for combo in itertools.product(*options):
            c = Fraction(1)
            for _, v in combo:
                c = c * v
            total = total + c * lookup(letters, tuple(s for s, _ in combo))
        return total

    return MatrixMomentFunctional(N, alphabet, rule, max_order, data.get("algebra", "full"))
