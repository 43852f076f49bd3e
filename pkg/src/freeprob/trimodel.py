"""
Block upper-triangular square roots and the triangular circular free Poisson model.

The model is the ``N x N`` block matrix ``x = N^{-1/2} [x_ij]`` with

* ``x_jj = a_j`` circular free Poisson with parameter ``(c - 1) N + j``,
* ``x_ij = b_ij`` circular for ``i < j``,
* ``x_ij = 0`` for ``i > j``,

all entries free.  It is again circular free Poisson with parameter ``c``.
Both a symbolic form (exact, through freecum/opval) and a random-matrix form
(Haar unitary times Wishart root blocks) are provided.
"""
from dataclasses import dataclass, field
from fractions import Fraction
import csv
import itertools
import math
import struct

import numpy as np

from .errors import InvalidInputError
from .exact import to_exact
from .freecum import (
    Letter,
    MomentFunctional,
    circular,
    circular_free_poisson,
    joint_free_functional,
    scalar_moments,
)
from .ncpart import nc_index_partitions
from .opval import matrix_model
from .randmat import as_generator, ginibre, haar_unitary, run_trials, wishart, wishart_rows

__all__ = [
    "BlockSpec",
    "upper_triangular_sqrt",
    "hermitian_psd_sqrt",
    "circular_free_poisson_sample",
    "dh_model_sample",
    "dh_entry_name",
    "dh_entry_cumulants",
    "dh_matrix_functional",
    "dh_trace_moment",
    "computation_lemma_sum",
    "computation_lemma_expected",
    "verify_computation_lemma",
    "LemmaReport",
    "dh_verify",
    "DHReport",
    "write_matrix_binary",
    "read_matrix_binary",
    "write_matrix_csv",
    "read_matrix_csv",
]

_HERM_TOL = 1e-10
_PD_TOL = 1e-10
_SCHUR_TOL = 1e-12


class BlockSpec:
    """Block sizes ``k_1..k_N`` of an orthogonal decomposition of ``C^total``."""

    def __init__(self, sizes):
        sizes = tuple(sizes)
        if not sizes or any(isinstance(k, bool) or not isinstance(k, (int, np.integer))
                            or k <= 0 for k in sizes):
            raise InvalidInputError("block sizes must be positive integers")
        self.sizes = tuple(int(k) for k in sizes)
        self.offsets = tuple(itertools.accumulate((0,) + self.sizes))
        self.total = self.offsets[-1]

    @classmethod
    def uniform(cls, N, m):
        return cls([m] * N)

    @property
    def N(self):
        return len(self.sizes)

    def slice(self, k):
        """0-based slice of block ``k``."""
        return slice(self.offsets[k], self.offsets[k + 1])

    def below_diagonal_norm(self, x):
        """Largest absolute entry strictly below the block diagonal."""
        out = 0.0
        for i in range(self.N):
            for j in range(i):
                blk = x[self.slice(i), self.slice(j)]
                if blk.size:
                    out = max(out, float(np.max(np.abs(blk))))
        return out

    def __repr__(self):
        return f"BlockSpec({list(self.sizes)})"


def _as_hermitian(y, what="matrix"):
    y = np.asarray(y, dtype=complex)
    if y.ndim != 2 or y.shape[0] != y.shape[1]:
        raise InvalidInputError(f"{what} must be square")
    if not np.all(np.isfinite(y)):
        raise InvalidInputError(f"{what} has non-finite entries")
    scale = max(np.linalg.norm(y), 1e-300)
    if np.linalg.norm(y - y.conj().T) > _HERM_TOL * scale:
        raise InvalidInputError(f"{what} is not Hermitian")
    return 0.5 * (y + y.conj().T)


def hermitian_psd_sqrt(y):
    """Hermitian PSD square root of a Hermitian PSD matrix (spectral method).

    Eigenvalues that are negative only by rounding are clipped to zero.
    """
    y = _as_hermitian(y)
    lam, v = np.linalg.eigh(y)
    norm = max(np.max(np.abs(lam)), 0.0) if lam.size else 0.0
    if lam.size and lam[0] < -_PD_TOL * max(norm, 1e-300):
        raise InvalidInputError("matrix is not positive semidefinite")
    r = (v * np.sqrt(np.clip(lam, 0.0, None))) @ v.conj().T
    return 0.5 * (r + r.conj().T)


def upper_triangular_sqrt(y, blocks, return_info=False):
    """Block upper-triangular ``x`` with ``x x* = y``.

    The last diagonal block is ``x_22 = y_22^{1/2}``, the column above it is
    ``x_12 = y_12 x_22^{-1}``, and the leading part recurses on the Schur
    complement ``y_11 - x_12 x_12*``.  Blocks below the diagonal are exactly
    zero.

    Parameters
    ----------
    y : (n, n) array_like
        Hermitian, strictly positive definite.
    blocks : BlockSpec or sequence of int
    return_info : bool
        Also return ``{"schur_min_eigs": [...]}``, the smallest eigenvalue of
        every matrix whose square root was taken (last block first).

    Returns
    -------
    x : ndarray
    info : dict, only with ``return_info``
    """
    if not isinstance(blocks, BlockSpec):
        blocks = BlockSpec(blocks)
    y = _as_hermitian(y)
    if y.shape[0] != blocks.total:
        raise InvalidInputError(f"matrix size {y.shape[0]} does not match blocks {blocks}")
    lam = np.linalg.eigvalsh(y)
    norm = float(np.max(np.abs(lam)))
    if lam[0] <= _PD_TOL * norm:
        raise InvalidInputError("matrix is not (numerically) positive definite")
    x = np.zeros_like(y)
    cur = y
    mins = []
    for k in range(blocks.N - 1, -1, -1):
        s = blocks.slice(k)
        lo = blocks.offsets[k]
        y22 = cur[s, s]
        mn = float(np.linalg.eigvalsh(y22)[0])
        mins.append(mn)
        if mn < -_SCHUR_TOL * norm:
            raise InvalidInputError("negative Schur complement (matrix not positive definite)")
        x22 = hermitian_psd_sqrt(y22)
        x[s, s] = x22
        if lo:
            y12 = cur[:lo, s]
            # x12 = y12 x22^{-1}, solved as x22* x12* = y12*
            x12 = np.linalg.solve(x22.conj().T, y12.conj().T).conj().T
            x[:lo, s] = x12
            nxt = cur[:lo, :lo] - x12 @ x12.conj().T
            cur = 0.5 * (nxt + nxt.conj().T)
    if return_info:
        return x, {"schur_min_eigs": mins}
    return x


# -- random-matrix model --------------------------------------------------------------

def circular_free_poisson_sample(lam, m, rng):
    """``U W^{1/2}`` with ``U`` Haar unitary and ``W`` Wishart(``lam``), both m x m."""
    if lam < 1:
        raise InvalidInputError("circular free Poisson parameter must be >= 1")
    if m < 1:
        raise InvalidInputError("m must be >= 1")
    gen = as_generator(rng)
    u = haar_unitary(m, gen)
    w = wishart(lam, m, gen)
    return u @ hermitian_psd_sqrt(w)


def dh_model_sample(c, N, m, rng):
    """Sample of the ``(N m) x (N m)`` triangular model with parameter ``c``.

    Draw order: ``a_1, ..., a_N``, then ``b_ij`` for ``i < j`` row by row.
    """
    if c < 1:
        raise InvalidInputError("parameter c must be >= 1")
    if N < 1 or m < 1:
        raise InvalidInputError("N and m must be >= 1")
    gen = as_generator(rng)
    x = np.zeros((N * m, N * m), dtype=complex)
    for j in range(N):
        lam = (c - 1) * N + (j + 1)
        x[j * m:(j + 1) * m, j * m:(j + 1) * m] = circular_free_poisson_sample(lam, m, gen)
    for i in range(N):
        for j in range(i + 1, N):
            x[i * m:(i + 1) * m, j * m:(j + 1) * m] = ginibre(m, gen)
    return x / math.sqrt(N)


# -- symbolic model -------------------------------------------------------------------

def dh_entry_name(i, j, N=None):
    """Generator id of entry ``(i, j)`` (1-based)."""
    if N is not None and N >= 10:
        return f"y{i}_{j}"
    return f"y{i}{j}"


def dh_entry_cumulants(c, N):
    """Joint cumulants of the free entries ``y_ij = sqrt(N) x_ij``, ``i <= j``."""
    c = to_exact(c)
    parts = []
    for i in range(1, N + 1):
        for j in range(i, N + 1):
            g = dh_entry_name(i, j, N)
            if i == j:
                parts.append(circular_free_poisson((c - 1) * N + j, g))
            else:
                parts.append(circular(g))
    return joint_free_functional(parts)


def dh_matrix_functional(c, N, gen="y"):
    """``M_N``-valued expectation of ``y = sqrt(N) x`` (unnormalised entries)."""
    kappa = dh_entry_cumulants(c, N)
    phi = MomentFunctional.from_cumulants(kappa)
    entries = {(i, j): dh_entry_name(i, j, N) for i in range(1, N + 1) for j in range(i, N + 1)}
    return matrix_model(N, entries, phi, gen=gen)


def dh_trace_moment(c, N, k, E=None):
    """Exact ``tr((x x*)^k)`` of the symbolic model (normalised trace ``tr``)."""
    if E is None:
        E = dh_matrix_functional(c, N)
    g = next(iter(E.alphabet))
    word = ",".join([g, g + "*"] * k)
    val = E(word)
    tr = sum((val[i, i] for i in range(N)), Fraction(0)) / N
    return tr / Fraction(N) ** k


def _lemma_word(N, a, indices):
    w = []
    for i in indices:
        l = Letter(dh_entry_name(i, a, N))
        w.extend([l.adjoint(), l])
    return tuple(w)


def computation_lemma_sum(c, N, a, indices, kappa=None):
    """Sum of ``kappa_pi[(y_{i1 a})*, y_{i1 a}, ..., (y_{in a})*, y_{in a}]``.

    Runs over noncrossing ``pi`` of ``2n`` points that keep every pair
    ``(2k-1, 2k)`` inside one block.  Entries below the diagonal are zero.
    """
    if not 1 <= a <= N or any(not 1 <= i <= N for i in indices):
        raise InvalidInputError("indices must lie in 1..N")
    if any(i > a for i in indices):
        return Fraction(0)
    if kappa is None:
        kappa = dh_entry_cumulants(c, N)
    w = _lemma_word(N, a, indices)
    n2 = len(w)
    total = Fraction(0)
    for blocks in nc_index_partitions(n2):
        lab = {}
        for bi, b in enumerate(blocks):
            for x in b:
                lab[x] = bi
        if any(lab[2 * k] != lab[2 * k + 1] for k in range(n2 // 2)):
            continue
        prod = Fraction(1)
        for b in blocks:
            prod *= kappa(tuple(w[x] for x in b))
            if prod == 0:
                break
        total += prod
    return total


def computation_lemma_expected(c, N, a, indices):
    """``(c-1)N + a`` if ``max(indices) = a``, 1 if below ``a``, 0 if above."""
    top = max(indices)
    if top == a:
        return to_exact(c) * N - N + a
    return Fraction(1) if top < a else Fraction(0)


@dataclass
class LemmaReport:
    cases: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def passed(self):
        return self.cases > 0 and not self.mismatches

    def to_json(self):
        return {"cases": self.cases, "mismatches": self.mismatches, "passed": self.passed}


def verify_computation_lemma(N_max=3, n_max=3, cs=(1, 2)):
    """Compare the constrained sums with the trichotomy for all small cases."""
    rep = LemmaReport()
    for c in cs:
        for N in range(1, N_max + 1):
            kappa = dh_entry_cumulants(c, N)
            for n in range(1, n_max + 1):
                for a in range(1, N + 1):
                    for idx in itertools.product(range(1, N + 1), repeat=n):
                        got = computation_lemma_sum(c, N, a, idx, kappa)
                        want = computation_lemma_expected(c, N, a, idx)
                        rep.cases += 1
                        if got != want:
                            rep.mismatches.append({"c": str(c), "N": N, "a": a,
                                                   "indices": list(idx),
                                                   "got": str(got), "expected": str(want)})
    return rep


# -- Monte Carlo verification ---------------------------------------------------------

@dataclass
class DHReport:
    c: object
    N: int
    m: int
    trials: int
    seed: int
    moments: list
    lemma: LemmaReport
    effective_params: list
    tolerance_scale: float = 1.0

    @property
    def passed(self):
        return all(r["pass"] for r in self.moments) and self.lemma.passed

    def to_json(self):
        return {
            "c": str(self.c),
            "N": self.N,
            "m": self.m,
            "trials": self.trials,
            "seed": self.seed,
            "tolerance_scale": self.tolerance_scale,
            "effective_diagonal_params": self.effective_params,
            "moments": self.moments,
            "lemma": self.lemma.to_json(),
            "passed": self.passed,
        }


def _trace_powers(h, kmax):
    out = []
    p = np.eye(h.shape[0], dtype=complex)
    for _ in range(kmax):
        p = p @ h
        out.append(float(np.trace(p).real) / h.shape[0])
    return out


def dh_verify(c, N, m, trials, rng=0, kmax=4, threads=1, tolerance_scale=1.0,
              lemma=True, n_sigma=3.0):
    """Monte Carlo check of ``E tr (x x*)^k`` against free Poisson(``c``) moments.

    Parameters
    ----------
    c, N, m : model parameters
    trials : int
    rng : int
        Seed; trial ``k`` draws from ``RngStream(seed, k)``.
    kmax : int
        Highest moment order compared.
    threads : int
        Worker threads (results do not depend on it).
    tolerance_scale : float
        Multiplies the ``n_sigma`` standard-error band.
    lemma : bool
        Also run :func:`verify_computation_lemma` (``N <= 3``, ``n <= 3``).

    Returns
    -------
    DHReport
    """
    if trials < 2:
        raise InvalidInputError("need at least two trials for standard errors")
    seed = int(rng)
    target = scalar_moments([to_exact(c)] * kmax)

    def one(k, gen):
        x = dh_model_sample(c, N, m, gen)
        return _trace_powers(x @ x.conj().T, kmax)

    data = np.array(run_trials(one, seed, trials, threads))
    mean = data.mean(axis=0)
    se = data.std(axis=0, ddof=1) / math.sqrt(trials)
    rows = []
    for k in range(kmax):
        t = float(target[k])
        band = n_sigma * tolerance_scale * se[k]
        rows.append({"k": k + 1, "mean": float(mean[k]), "se": float(se[k]),
                     "target": t, "z": float((mean[k] - t) / se[k]) if se[k] > 0 else 0.0,
                     "pass": bool(abs(mean[k] - t) <= band)})
    if lemma:
        cs = (1, 2) if isinstance(c, float) else tuple(sorted({1, 2, to_exact(c)}))
        lemma_rep = verify_computation_lemma(min(N, 3), 3, cs)
    else:
        lemma_rep = LemmaReport(cases=1)
    eff = [wishart_rows((c - 1) * N + j, m) / m for j in range(1, N + 1)]
    return DHReport(c=c, N=N, m=m, trials=trials, seed=seed, moments=rows, lemma=lemma_rep,
                    effective_params=eff, tolerance_scale=tolerance_scale)


# -- matrix IO ------------------------------------------------------------------------

_HEADER = struct.Struct("<QQ")


def write_matrix_binary(path, a):
    """Little-endian header ``(rows, cols)`` as uint64, then row-major complex128."""
    a = np.ascontiguousarray(np.asarray(a, dtype="<c16"))
    if a.ndim != 2:
        raise InvalidInputError("matrix required")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(*a.shape))
        fh.write(a.tobytes(order="C"))


def read_matrix_binary(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise InvalidInputError("truncated matrix header")
        r, c = _HEADER.unpack(head)
        body = fh.read()
    if len(body) != 16 * r * c:
        raise InvalidInputError("matrix payload size does not match header")
    return np.frombuffer(body, dtype="<c16").reshape(r, c).astype(complex)


def write_matrix_csv(path, a):
    """CSV with columns ``row,col,re,im`` (0-based), 17 significant digits."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise InvalidInputError("matrix required")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "col", "re", "im"])
        w.writerow(["#shape", "", a.shape[0], a.shape[1]])
        for i in range(a.shape[0]):
            for j in range(a.shape[1]):
                w.writerow([i, j, repr(float(a[i, j].real)), repr(float(a[i, j].imag))])


def read_matrix_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2 or rows[0] != ["row", "col", "re", "im"] or rows[1][0] != "#shape":
        raise InvalidInputError("not a matrix CSV")
    out = np.zeros((int(rows[1][2]), int(rows[1][3])), dtype=complex)
    for r in rows[2:]:
        out[int(r[0]), int(r[1])] = complex(float(r[2]), float(r[3]))
    return out
