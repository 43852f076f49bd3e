"""
Seeded random-matrix ensembles and spectral diagnostics.

=============================  ==================================================
``RngStream``                  (seed, stream id) -> independent numpy Generator
``ginibre``                    complex Gaussian, entry variance 1/m
``haar_unitary``               QR of Ginibre with the R-diagonal phase fix
``wishart``                    A* A, A of shape round(lambda m) x m
``biinvariant_sample``         V D with V Haar
``eigenvalues``                dense eigenvalues (LAPACK via scipy)
``singular_values``            descending singular values
``spectral_subspace_projection``  orthogonal projection onto the invariant
                               subspace of eigenvalues with modulus <= s
``empirical_radial_cdf``       step CDF of eigenvalue moduli
``ks_distance``                sup distance to a radial law or another CDF
``freeness_diagnostic_mc``     mixed free cumulants of trace moments
=============================  ==================================================

Trials are reproducible: trial ``k`` always draws from ``RngStream(seed, k)``
whatever the worker count.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import itertools
import math
import warnings

import numpy as np
import scipy.linalg

from .errors import InvalidInputError
from .freecum import Letter, MomentFunctional, format_word, moments_to_cumulant

__all__ = [
    "RngStream",
    "trial_streams",
    "as_generator",
    "run_trials",
    "ginibre",
    "haar_unitary",
    "wishart",
    "wishart_rows",
    "eigenvalues",
    "singular_values",
    "spectral_subspace",
    "spectral_subspace_projection",
    "SpectralTieWarning",
    "EmpiricalRadialCdf",
    "empirical_radial_cdf",
    "ks_distance",
    "freeness_diagnostic_mc",
    "FreenessMCReport",
    "biinvariant_sample",
]

_U64 = 2 ** 64


class RngStream:
    """Independent random stream identified by ``(seed, stream_id)``.

    Built on :class:`numpy.random.SeedSequence` with ``spawn_key=(stream_id,)``,
    so distinct ids give statistically independent PCG64 states.
    """

    def __init__(self, seed, stream_id=0, path=()):
        for v, name in ((seed, "seed"), (stream_id, "stream id")):
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) < _U64:
                raise InvalidInputError(f"{name} must be an integer in [0, 2^64)")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.path = tuple(int(p) for p in path)
        self._seq = np.random.SeedSequence(entropy=self.seed,
                                           spawn_key=(self.stream_id,) + self.path)

    def generator(self):
        return np.random.Generator(np.random.PCG64(self._seq))

    def child(self, sub_id):
        """Deterministic sub-stream (e.g. for bootstrap resampling)."""
        return RngStream(self.seed, self.stream_id, self.path + (int(sub_id),))

    def state_key(self):
        return tuple(int(x) for x in self._seq.generate_state(4, np.uint64))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, path={self.path})"


def trial_streams(seed, trials):
    """One stream per trial (stream id = trial index), collision-checked."""
    streams = [RngStream(seed, k) for k in range(trials)]
    keys = {s.state_key() for s in streams}
    if len(keys) != len(streams):
        raise RuntimeError("RNG substream collision")
    return streams


def as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise InvalidInputError("rng must be a numpy Generator, an RngStream or an int seed")


def run_trials(fn, seed, trials, threads=1):
    """Evaluate ``fn(k, generator)`` for ``k < trials``; results in trial order."""
    streams = trial_streams(seed, trials)
    if threads is None or threads <= 1:
        return [fn(k, s.generator()) for k, s in enumerate(streams)]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        futs = [pool.submit(fn, k, s.generator()) for k, s in enumerate(streams)]
        return [f.result() for f in futs]


# -- ensembles --------------------------------------------------------------------

def _complex_gaussian(shape, scale, gen):
    re = gen.standard_normal(shape)
    im = gen.standard_normal(shape)
    return (re + 1j * im) * (scale / math.sqrt(2.0))


def ginibre(m, rng):
    """m x m matrix of i.i.d. complex Gaussians with variance 1/m."""
    if m < 1:
        raise InvalidInputError("m must be >= 1")
    return _complex_gaussian((m, m), 1.0 / math.sqrt(m), as_generator(rng))


def haar_unitary(m, rng):
    """Haar-distributed unitary: Q R = Ginibre, columns of Q times phase(R_ii)."""
    z = ginibre(m, rng)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    ph = d / np.abs(d)
    return q * ph


def wishart_rows(lam, m):
    """Tall dimension ``round(lam m)`` used by :func:`wishart`."""
    return int(math.floor(lam * m + 0.5))


def wishart(lam, m, rng):
    """``A* A`` with ``A`` of shape ``round(lam m) x m``, entry variance 1/m.

    The effective parameter is ``wishart_rows(lam, m) / m``.
    """
    if lam < 1:
        raise InvalidInputError("Wishart parameter must be >= 1")
    n = wishart_rows(lam, m)
    a = _complex_gaussian((n, m), 1.0 / math.sqrt(m), as_generator(rng))
    w = a.conj().T @ a
    return 0.5 * (w + w.conj().T)


def biinvariant_sample(D, rng):
    """``V D`` with ``V`` Haar unitary of matching size."""
    D = np.asarray(D)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise InvalidInputError("D must be square")
    return haar_unitary(D.shape[0], rng) @ D


# -- spectra ----------------------------------------------------------------------

def _square(a):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError("square matrix required")
    return a


def eigenvalues(a):
    """All eigenvalues with multiplicity (LAPACK ``geev`` through scipy)."""
    return scipy.linalg.eigvals(_square(a))


def singular_values(a):
    """Singular values in descending order."""
    a = np.asarray(a)
    if a.ndim != 2:
        raise InvalidInputError("matrix required")
    return np.linalg.svd(a, compute_uv=False)


class SpectralTieWarning(UserWarning):
    """An eigenvalue modulus lies within the tie tolerance of the cut radius."""


@dataclass
class SpectralSubspace:
    projection: np.ndarray
    basis: np.ndarray
    rank: int
    ties: int
    invariance_residual: float
    eigenvalues: np.ndarray


def spectral_subspace(a, s, tie_tol=1e-12):
    """Invariant subspace for the eigenvalues with ``|lambda| <= s + tie_tol``.

    A sorted complex Schur form ``A = Z T Z*`` places the selected
    eigenvalues first; the leading ``rank`` Schur vectors span the subspace.
    The diagonal of ``T`` is returned as ``eigenvalues``.
    """
    a = _square(a).astype(complex)
    if s < 0:
        raise InvalidInputError("radius must be >= 0")
    cut = s + tie_tol
    t, z, sdim = scipy.linalg.schur(a, output="complex", sort=lambda x: abs(x) <= cut)
    diag = np.abs(np.diagonal(t))
    ties = int(np.sum(np.abs(diag - s) <= tie_tol))
    if ties:
        warnings.warn(f"{ties} eigenvalue(s) within {tie_tol} of the cut radius {s}",
                      SpectralTieWarning, stacklevel=2)
    basis = z[:, :sdim]
    p = basis @ basis.conj().T
    m = a.shape[0]
    resid = np.linalg.norm((np.eye(m) - p) @ a @ p, 2) if sdim else 0.0
    return SpectralSubspace(p, basis, int(sdim), ties, float(resid), np.diagonal(t).copy())


def spectral_subspace_projection(a, s, tie_tol=1e-12):
    """Orthogonal projection onto the spectral subspace ``|lambda| <= s``."""
    return spectral_subspace(a, s, tie_tol).projection


# -- empirical laws ---------------------------------------------------------------

class EmpiricalRadialCdf:
    """Right-continuous step CDF of a finite set of radii."""

    def __init__(self, radii):
        r = np.sort(np.asarray(radii, dtype=float).ravel())
        if r.size == 0:
            raise InvalidInputError("empirical CDF of an empty sample")
        if np.any(r < 0) or not np.all(np.isfinite(r)):
            raise InvalidInputError("radii must be finite and >= 0")
        self.radii = r

    @property
    def n(self):
        return self.radii.size

    def __call__(self, s):
        return np.searchsorted(self.radii, np.asarray(s, dtype=float), side="right") / self.n

    def quantile(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.ceil(t * self.n).astype(int) - 1, 0, self.n - 1)
        return self.radii[idx]


def empirical_radial_cdf(eigs):
    """Step CDF of ``|eigs|``."""
    return EmpiricalRadialCdf(np.abs(np.asarray(eigs)))


def ks_distance(emp, law):
    """Kolmogorov-Smirnov distance between ``emp`` and ``law``.

    ``law`` is another :class:`EmpiricalRadialCdf` (exact two-sample sup) or
    any object with ``cdf`` and ``cdf_left`` (e.g. a brown ``RadialLaw``).
    """
    if isinstance(law, EmpiricalRadialCdf):
        pts = np.union1d(emp.radii, law.radii)
        return float(np.max(np.abs(emp(pts) - law(pts))))
    r = emp.radii
    n = emp.n
    i = np.arange(1, n + 1)
    f = np.asarray(law.cdf(r), dtype=float)
    fl = np.asarray(law.cdf_left(r), dtype=float)
    # right at r_(i) the empirical CDF is i/n, just left of it (i-1)/n; ties
    # collapse into the largest index for each distinct radius
    last = np.r_[r[1:] != r[:-1], True]
    first = np.r_[True, r[1:] != r[:-1]]
    d_plus = np.max((i / n - f)[last])
    d_minus = np.max((fl - (i - 1) / n)[first])
    return float(max(d_plus, d_minus, 0.0))


# -- freeness diagnostic --------------------------------------------------------------

@dataclass
class FreenessMCReport:
    order: int
    m: int
    trials: int
    max_abs: float
    bootstrap_se: float
    bootstrap_ci: tuple
    argmax: str
    per_order: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "order": self.order,
            "m": self.m,
            "trials": self.trials,
            "max_abs_mixed_cumulant": self.max_abs,
            "bootstrap_se": self.bootstrap_se,
            "bootstrap_ci": list(self.bootstrap_ci),
            "argmax": self.argmax,
            "per_order": {str(k): v for k, v in self.per_order.items()},
        }


def _trace_moments(mats, order):
    # normalised traces of all words up to ``order`` over the given letters
    m = mats[0].shape[0]
    out = {}
    prefix = {(): None}
    for n in range(1, order + 1):
        nxt = {}
        for w, p in prefix.items():
            for k, a in enumerate(mats):
                q = a if p is None else p @ a
                key = w + (k,)
                if n < order:
                    nxt[key] = q
                out[key] = np.trace(q) / m
        prefix = nxt
    return out


def _max_mixed(moments, family_of, order):
    names = [f"L{k}" for k in range(len(family_of))]
    table = {",".join(names[k] for k in w): complex(v) for w, v in moments.items()}
    phi = MomentFunctional(names, table=table, exact=False, max_order=order)
    best, arg = 0.0, None
    per = {}
    for n in range(2, order + 1):
        per[n] = 0.0
        for w in itertools.product(range(len(names)), repeat=n):
            if len({family_of[k] for k in w}) < 2:
                continue
            k = moments_to_cumulant(phi, tuple(Letter(names[i]) for i in w))
            a = abs(complex(k))
            per[n] = max(per[n], a)
            if a > best:
                best, arg = a, w
    return best, arg, per


def freeness_diagnostic_mc(samples, order=4, rng=None, n_boot=200, letter_names=None):
    """Largest mixed free cumulant estimated from trace moments across trials.

    Parameters
    ----------
    samples : sequence of trials
        Each trial is a sequence of families; each family is a matrix or a
        sequence of matrices of one common dimension.
    order : int
        Largest word length (number of cumulant arguments).
    rng : Generator, RngStream or int, optional
        Bootstrap randomness (default: stream 0 of seed 0).
    n_boot : int
        Bootstrap resamples of the trials.

    Returns
    -------
    FreenessMCReport
    """
    trials = list(samples)
    if not trials:
        raise InvalidInputError("need at least one trial")
    family_of = None
    per_trial = []
    m = None
    for tr in trials:
        mats, fam = [], []
        for fi, f in enumerate(tr):
            group = [f] if (isinstance(f, np.ndarray) and f.ndim == 2) else list(f)
            for a in group:
                a = np.asarray(a)
                if a.ndim != 2 or a.shape[0] != a.shape[1]:
                    raise InvalidInputError("family members must be square matrices")
                if m is None:
                    m = a.shape[0]
                elif a.shape[0] != m:
                    raise InvalidInputError("inconsistent dimensions across families")
                mats.append(a)
                fam.append(fi)
        if family_of is None:
            family_of = fam
        elif fam != family_of:
            raise InvalidInputError("every trial must have the same family layout")
        if len(set(fam)) < 2:
            raise InvalidInputError("need at least two families")
        per_trial.append(_trace_moments(mats, order))

    keys = list(per_trial[0])
    data = np.array([[pt[k] for k in keys] for pt in per_trial])

    def diag(rows):
        mean = rows.mean(axis=0)
        return _max_mixed(dict(zip(keys, mean)), family_of, order)

    best, arg, per = diag(data)
    if rng is None:
        rng = RngStream(0, 0)
    gen = as_generator(rng)
    boots = []
    T = len(trials)
    for _ in range(n_boot if T > 1 else 0):
        idx = gen.integers(0, T, size=T)
        boots.append(diag(data[idx])[0])
    se = float(np.std(boots, ddof=1)) if len(boots) > 1 else float("nan")
    ci = (float(np.percentile(boots, 2.5)), float(np.percentile(boots, 97.5))) if boots \
        else (float("nan"), float("nan"))
    label = None
    if arg is not None:
        label = format_word(tuple(Letter(f"F{family_of[k]}") for k in arg))
    return FreenessMCReport(order=order, m=int(m), trials=T, max_abs=float(best),
                            bootstrap_se=se, bootstrap_ci=ci, argmax=label, per_order=per)
