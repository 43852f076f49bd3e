"""
Command-line front end.

    freeprob --config run.json [--seed N] [--out DIR] [--threads N] [--tolerance-scale F]

The config names one scenario plus its parameters; unknown keys are
rejected with a JSON-pointer path.  Results go to ``DIR/report.json`` (plus
CSV artifacts); wall-clock timings go to ``DIR/timings.json`` so the report
itself is byte-reproducible.

Exit status: 0 all criteria pass, 1 a criterion failed, 2 config error,
3 runtime error (a partial report is still written).
"""
import argparse
import copy
import csv
import json
import math
import os
import sys
import time

import jsonschema
import numpy as np

from . import acceptance
from .brown import annuli_radii, radial_law, radial_quantile, sample_brown
from .errors import FreeProbError
from .exact import format_scalar, is_exact, to_exact
from .freecum import (
    CumulantFunctional,
    MomentFunctional,
    check_r_diagonal,
    circular,
    circular_free_poisson,
    free_poisson,
    haar_unitary,
    load_functional,
    moments_to_cumulant,
    scalar_moments,
    semicircular,
)
from .ncpart import (
    SetPartition,
    catalan,
    enumerate_noncrossing,
    is_noncrossing,
    kreweras_complement,
    nc_join,
)
from .randmat import (
    EmpiricalRadialCdf,
    RngStream,
    biinvariant_sample,
    eigenvalues,
    ginibre,
    haar_unitary as haar_matrix,
    ks_distance,
    run_trials,
    spectral_subspace,
    wishart,
)
from .transforms import (
    DiscreteMeasure,
    FreePoissonLaw,
    as_s_law,
    free_mult_convolution,
    mean_inverse,
    r_series,
    revert_series,
    s_limit_minus_one,
    s_series,
)
from .trimodel import dh_model_sample, dh_verify, hermitian_psd_sqrt

__all__ = ["main", "run", "validate_config", "ConfigError", "emit_json", "emit_csv", "SCENARIOS"]

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class ConfigError(ValueError):
    def __init__(self, pointer, message):
        super().__init__(f"{pointer}: {message}")
        self.pointer = pointer
        self.message = message


# -- schema ---------------------------------------------------------------------------

_RATIONAL = {"oneOf": [{"type": "integer"},
                       {"type": "string", "pattern": r"^\s*-?\d+(\s*/\s*\d+)?\s*$"}]}
_REAL = {"anyOf": [{"type": "number"}, _RATIONAL]}
_POS_INT = {"type": "integer", "minimum": 1}
_WEIGHTS = {"type": "array", "items": _REAL, "minItems": 1}
_LAW = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["free-poisson", "delta", "measure"]},
        "c": _REAL,
        "atom": _REAL,
        "atoms": {"type": "array", "items": _REAL, "minItems": 1},
        "weights": _WEIGHTS,
    },
    "required": ["kind"],
    "additionalProperties": False,
}
_PARTITION = {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}}

_COMMON = {
    "scenario": {"type": "string"},
    "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
    "threads": _POS_INT,
    "tolerance_scale": {"type": "number", "exclusiveMinimum": 0},
    "out": {"type": "string"},
}

_SCENARIO_PROPS = {
    "nc": ({"n": {"type": "integer", "minimum": 0, "maximum": 14},
            "list": {"type": "boolean"},
            "join": {"type": "array", "items": _PARTITION, "minItems": 2, "maxItems": 2},
            "kreweras": {"type": "object",
                         "properties": {"p": _PARTITION,
                                        "inner": {"type": "array", "items": {"type": "integer"}},
                                        "outer": {"type": "array", "items": {"type": "integer"}}},
                         "required": ["p", "inner", "outer"], "additionalProperties": False}},
           ["n"]),
    "cumulants": ({"functional": {"type": "object"},
                   "words": {"type": "array", "items": {"type": "string"}},
                   "r_diagonal_order": _POS_INT,
                   "expect_r_diagonal": {"type": "boolean"}},
                  ["functional", "words"]),
    "transforms": ({"moments": {"type": "array", "items": _RATIONAL, "minItems": 2},
                    "law": _LAW,
                    "order": {"type": "integer", "minimum": 1, "maximum": 16}},
                   []),
    "brown-predict": ({"xx": {"enum": ["free-poisson", "delta", "measure"]},
                       "c": _REAL, "atom": _REAL,
                       "atoms": {"type": "array", "items": _REAL, "minItems": 1},
                       "weights": _WEIGHTS,
                       "grid": {"type": "integer", "minimum": 2},
                       "annuli": _WEIGHTS,
                       "samples": {"type": "integer", "minimum": 0}},
                      ["xx"]),
    "simulate": ({"ensemble": {"enum": ["ginibre", "haar", "wishart", "biinvariant", "dh"]},
                  "m": _POS_INT, "trials": _POS_INT,
                  "params": {"type": "object",
                             "properties": {"lambda": {"type": "number", "minimum": 1},
                                            "c": {"type": "number", "minimum": 1},
                                            "N": _POS_INT},
                             "additionalProperties": False}},
                 ["ensemble", "m", "trials"]),
    "verify-dh": ({"c": {"type": "number", "minimum": 1}, "N": _POS_INT, "m": _POS_INT,
                   "trials": {"type": "integer", "minimum": 2},
                   "kmax": {"type": "integer", "minimum": 1, "maximum": 8},
                   "lemma": {"type": "boolean"}},
                  ["c", "N", "m", "trials"]),
    "verify-annuli": ({"m": _POS_INT, "trials": _POS_INT,
                       "c": {"type": "number", "minimum": 1},
                       "weights": _WEIGHTS,
                       "f_radii": {"type": "integer", "minimum": 1, "maximum": 50}},
                      ["m", "trials"]),
    "verify-smult": ({"a": _LAW, "b": _LAW,
                      "order": {"type": "integer", "minimum": 1, "maximum": 8}},
                     ["a", "b"]),
    "freeness-mc": ({"ms": {"type": "array", "items": _POS_INT, "minItems": 2},
                     "trials": {"type": "integer", "minimum": 2},
                     "order": {"type": "integer", "minimum": 2, "maximum": 6},
                     "c": {"type": "number", "minimum": 1}},
                    []),
    "acceptance": ({"criteria": {"oneOf": [{"const": "all"},
                                           {"type": "array",
                                            "items": {"type": "integer", "minimum": 1,
                                                      "maximum": 19},
                                            "minItems": 1}]}},
                   []),
}

SCENARIOS = tuple(_SCENARIO_PROPS)


def _schema(name):
    props, req = _SCENARIO_PROPS[name]
    return {"type": "object", "properties": {**_COMMON, **props},
            "required": ["scenario"] + req, "additionalProperties": False}


def _pointer(path):
    return "/" + "/".join(str(p) for p in path) if path else "/"


def validate_config(cfg):
    """Raise :class:`ConfigError` unless ``cfg`` matches its scenario's schema."""
    if not isinstance(cfg, dict):
        raise ConfigError("/", "config must be a JSON object")
    name = cfg.get("scenario")
    if name not in _SCENARIO_PROPS:
        raise ConfigError("/scenario", f"unknown scenario {name!r}; expected one of "
                                       f"{', '.join(SCENARIOS)}")
    schema = _schema(name)
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(cfg),
                    key=lambda e: (list(e.absolute_path), e.validator))
    if errors:
        e = errors[0]
        path = list(e.absolute_path)
        if e.validator == "additionalProperties":
            allowed = set(e.schema.get("properties", {}))
            extra = sorted(k for k in e.instance if k not in allowed)
            raise ConfigError(_pointer(path + extra[:1]), f"unknown key {extra[0]!r}")
        raise ConfigError(_pointer(path), e.message)


# -- output ---------------------------------------------------------------------------

def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(x, (complex, np.complexfloating)):
        return [_clean(x.real), _clean(x.imag)]
    if is_exact(x):
        return format_scalar(x)
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    return x


def emit_json(report, path):
    """Write ``report`` with stable key order (insertion order) and 2-space indent."""
    text = json.dumps(_clean(report), indent=2, ensure_ascii=False) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    return text


def _g12(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".12g")


def emit_csv(header, rows, path):
    """CSV with the given header; numbers with 12 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_g12(v) if isinstance(v, (int, float, np.number)) else v for v in r])


# -- helpers --------------------------------------------------------------------------

def _criterion(passed, value=None, threshold=None):
    out = {"passed": bool(passed)}
    if value is not None:
        out["value"] = value
    if threshold is not None:
        out["threshold"] = threshold
    return out


def _law_from(spec, where):
    kind = spec["kind"]
    try:
        if kind == "free-poisson":
            if "c" not in spec:
                raise ConfigError(where + "/c", "free-poisson needs c")
            c = spec["c"]
            return FreePoissonLaw(to_exact(c) if not isinstance(c, float) else c)
        if kind == "delta":
            if "atom" not in spec:
                raise ConfigError(where + "/atom", "delta needs atom")
            return DiscreteMeasure([spec["atom"]], [1])
        if "atoms" not in spec or "weights" not in spec:
            raise ConfigError(where, "measure needs atoms and weights")
        return DiscreteMeasure(spec["atoms"], spec["weights"])
    except FreeProbError as e:
        raise ConfigError(where, str(e)) from e


def _law_moments(law, K):
    if isinstance(law, FreePoissonLaw):
        return scalar_moments([to_exact(law.c) if not isinstance(law.c, float) else law.c] * K,
                              exact=not isinstance(law.c, float))
    return law.moments(K)


def _scalar_functional(spec, where):
    if "kind" in spec:
        kind = spec["kind"]
        extra = set(spec) - {"kind", "gen", "c", "lambda"}
        if extra:
            raise ConfigError(f"{where}/{sorted(extra)[0]}", "unknown key")
        gen = spec.get("gen", "a")
        table = {
            "haar": lambda: haar_unitary(gen),
            "circular": lambda: MomentFunctional.from_cumulants(circular(gen)),
            "semicircular": lambda: MomentFunctional.from_cumulants(semicircular(gen)),
            "free-poisson": lambda: MomentFunctional.from_cumulants(free_poisson(spec["c"], gen)),
            "circular-free-poisson": lambda: MomentFunctional.from_cumulants(
                circular_free_poisson(spec["lambda"], gen)),
        }
        if kind not in table:
            raise ConfigError(f"{where}/kind", f"unknown functional kind {kind!r}")
        try:
            return table[kind]()
        except KeyError as e:
            raise ConfigError(f"{where}/{e.args[0]}", "missing parameter") from e
    try:
        f = load_functional(spec)
    except FreeProbError as e:
        raise ConfigError(where, str(e)) from e
    if isinstance(f, CumulantFunctional):
        return MomentFunctional.from_cumulants(f)
    return f


# -- scenarios ------------------------------------------------------------------------

def _run_nc(cfg, ctx):
    n = cfg["n"]
    parts = enumerate_noncrossing(n)
    metrics = {"n": n, "count": len(parts)}
    crit = {"catalan_count": _criterion(len(parts) == catalan(n), len(parts), catalan(n))}
    if cfg.get("list"):
        metrics["partitions"] = [p.to_json() for p in parts]
    try:
        if "join" in cfg:
            p, q = (SetPartition(b) for b in cfg["join"])
            metrics["join"] = nc_join(p, q).to_json()
        if "kreweras" in cfg:
            k = cfg["kreweras"]
            p = SetPartition(k["p"], k["inner"])
            sigma = kreweras_complement(p, k["inner"], k["outer"])
            metrics["kreweras"] = sigma.to_json()
            union = SetPartition(list(p.blocks) + list(sigma.blocks))
            crit["kreweras_noncrossing"] = _criterion(is_noncrossing(union))
    except FreeProbError as e:
        raise ConfigError("/join" if "join" in cfg else "/kreweras", str(e)) from e
    return metrics, crit


def _run_cumulants(cfg, ctx):
    phi = _scalar_functional(cfg["functional"], "/functional")
    rows = []
    for i, w in enumerate(cfg["words"]):
        try:
            m = phi(w)
            k = moments_to_cumulant(phi, w)
        except FreeProbError as e:
            raise ConfigError(f"/words/{i}", str(e)) from e
        rows.append({"word": w, "moment": m, "cumulant": k})
    metrics = {"values": rows}
    crit = {}
    if "r_diagonal_order" in cfg:
        rep = check_r_diagonal(phi, cfg["r_diagonal_order"])
        metrics["r_diagonal"] = rep.to_json()
        if "expect_r_diagonal" in cfg:
            crit["r_diagonal"] = _criterion(rep.passed == cfg["expect_r_diagonal"], rep.passed,
                                            cfg["expect_r_diagonal"])
    # inductive cumulants reproduce the moments through the NC sum
    kap = CumulantFunctional.from_moments(phi)
    back = MomentFunctional.from_cumulants(kap)
    ok = all(back(r["word"]) == r["moment"] for r in rows)
    crit["moment_cumulant_round_trip"] = _criterion(ok)
    return metrics, crit


def _run_transforms(cfg, ctx):
    law = None
    K = cfg.get("order", len(cfg["moments"]) - 1 if "moments" in cfg else 8)
    if "moments" in cfg:
        moments = [to_exact(x) for x in cfg["moments"]]
        if len(moments) < K + 1:
            raise ConfigError("/moments", f"order {K} needs {K + 1} moments")
    elif "law" in cfg:
        law = _law_from(cfg["law"], "/law")
        moments = _law_moments(law, K + 1)
    else:
        raise ConfigError("/", "transforms needs 'moments' or 'law'")
    m = moments[:K + 1]
    R = r_series(m[:K])
    metrics = {"moments": m, "R": R.coeffs, "order": K}
    crit = {}
    if m[0] != 0:
        S = s_series(m)
        metrics["S"] = S.coeffs
        lhs = S.shift_up().truncate(K)
        rhs = revert_series(R.shift_up()).truncate(K)
        crit["zS_equals_inverse_of_zR"] = _criterion(
            lhs.coeffs == rhs.coeffs if lhs.exact and rhs.exact
            else max(abs(complex(a) - complex(b)) for a, b in zip(lhs.coeffs, rhs.coeffs)) <= 1e-10)
    if isinstance(law, DiscreteMeasure):
        metrics["mean_inverse"] = mean_inverse(law)
        metrics["S_limit_minus_one"] = s_limit_minus_one(law)
    return metrics, crit


def _brown_source(cfg):
    spec = {"kind": cfg["xx"]}
    for k in ("c", "atom", "atoms", "weights"):
        if k in cfg:
            spec[k] = cfg[k]
    return _law_from(spec, "")


def _run_brown(cfg, ctx):
    law = _brown_source(cfg)
    grid = cfg.get("grid", 101)
    t = np.linspace(0.0, 1.0, grid)
    q = np.asarray(radial_quantile(law, t))
    emit_csv(["t", "radius"], zip(t, q), os.path.join(ctx["out"], "brown_quantile.csv"))
    sl = as_s_law(law)
    metrics = {"inner_radius": float(q[0]), "outer_radius": float(q[-1]),
               "grid": grid, "csv": "brown_quantile.csv"}
    crit = {"nondecreasing": _criterion(bool(np.all(np.diff(q) >= -1e-12)))}
    e1 = abs(q[-1] ** 2 - float(sl.m1))
    crit["outer_squared_equals_m1"] = _criterion(e1 <= 1e-8, e1, 1e-8)
    if math.isfinite(sl.mean_inverse):
        e0 = abs(q[0] ** -2 - sl.mean_inverse) if q[0] > 0 else math.inf
        crit["inner_inverse_squared_equals_mean_inverse"] = _criterion(e0 <= 1e-8, e0, 1e-8)
    if "annuli" in cfg:
        try:
            metrics["annuli_radii"] = annuli_radii(law, [to_exact(w) if not isinstance(w, float)
                                                         else w for w in cfg["annuli"]])
        except FreeProbError as e:
            raise ConfigError("/annuli", str(e)) from e
    if cfg.get("samples"):
        z = sample_brown(radial_law(law), cfg["samples"], RngStream(ctx["seed"], 0))
        emit_csv(["re", "im"], ((v.real, v.imag) for v in z),
                 os.path.join(ctx["out"], "brown_samples.csv"))
        metrics["samples_csv"] = "brown_samples.csv"
    return metrics, crit


def _moment_rows(data, kmax):
    data = np.asarray(data)
    n = data.shape[0]
    se = data.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.full(kmax, math.nan)
    return [{"k": k + 1, "mean": float(data[:, k].mean()), "se": float(se[k])}
            for k in range(kmax)]


def _run_simulate(cfg, ctx):
    ens, m, trials = cfg["ensemble"], cfg["m"], cfg["trials"]
    p = cfg.get("params", {})
    kmax = 4

    def one(k, g):
        if ens == "ginibre":
            x = ginibre(m, g)
        elif ens == "haar":
            x = haar_matrix(m, g)
        elif ens == "wishart":
            x = wishart(p.get("lambda", 2), m, g)
        elif ens == "biinvariant":
            x = biinvariant_sample(hermitian_psd_sqrt(wishart(p.get("lambda", 2), m, g)), g)
        else:
            x = dh_model_sample(p.get("c", 1), p.get("N", 2), m, g)
        h = x @ x.conj().T
        d = h.shape[0]
        pw, tr = np.eye(d), []
        for _ in range(kmax):
            pw = pw @ h
            tr.append(float(np.trace(pw).real) / d)
        return np.abs(eigenvalues(x)), tr

    res = run_trials(one, ctx["seed"], trials, ctx["threads"])
    mods = np.sort(np.concatenate([r[0] for r in res]))
    emp = EmpiricalRadialCdf(mods)
    emit_csv(["radius", "cdf"], zip(mods, emp(mods)),
             os.path.join(ctx["out"], "radial_cdf.csv"))
    metrics = {"ensemble": ens, "m": m, "trials": trials,
               "trace_moments_xxstar": _moment_rows([r[1] for r in res], kmax),
               "min_modulus_mean": float(np.mean([r[0].min() for r in res])),
               "max_modulus_mean": float(np.mean([r[0].max() for r in res])),
               "csv": "radial_cdf.csv"}
    return metrics, {}


def _run_verify_dh(cfg, ctx):
    rep = dh_verify(cfg["c"], cfg["N"], cfg["m"], cfg["trials"], rng=ctx["seed"],
                    kmax=cfg.get("kmax", 4), threads=ctx["threads"],
                    tolerance_scale=ctx["tolerance_scale"], lemma=cfg.get("lemma", True))
    j = rep.to_json()
    crit = {f"moment_{r['k']}": _criterion(r["pass"], r["mean"],
                                           {"target": r["target"],
                                            "band": 3.0 * ctx["tolerance_scale"] * r["se"]})
            for r in j["moments"]}
    crit["computation_lemma"] = _criterion(rep.lemma.passed, rep.lemma.cases)
    return j, crit


def _run_verify_annuli(cfg, ctx):
    m, trials = cfg["m"], cfg["trials"]
    c = cfg.get("c", 2)
    weights = cfg.get("weights", ["1/2", "1/2"])
    try:
        w = [to_exact(x) if not isinstance(x, float) else x for x in weights]
        radii = annuli_radii(FreePoissonLaw(to_exact(c) if float(c).is_integer() else c), w)
    except FreeProbError as e:
        raise ConfigError("/weights", str(e)) from e
    law = radial_law(FreePoissonLaw(c))
    nf = cfg.get("f_radii", 5)
    s_pts = [float(s) for s in law.quantile((np.arange(nf) + 1.0) / (nf + 1.0))]
    s_tol = ctx["tolerance_scale"]

    def one(k, g):
        x = biinvariant_sample(hermitian_psd_sqrt(wishart(c, m, g)), g)
        ranks = []
        mods = None
        for r in radii[1:-1]:
            ss = spectral_subspace(x, r)
            ranks.append(ss.rank)
            mods = np.abs(ss.eigenvalues)
        if mods is None:
            mods = np.abs(eigenvalues(x))
        # phi(p_s): normalised ranks of spectral projections at interior radii
        if k == 0:
            f_ranks = [spectral_subspace(x, s).rank for s in s_pts]
        else:
            f_ranks = None
        return mods, ranks, f_ranks

    res = run_trials(one, ctx["seed"], trials, ctx["threads"])
    mods_all = np.concatenate([r[0] for r in res])
    ks = ks_distance(EmpiricalRadialCdf(mods_all), law)
    inner = float(np.mean([r[0].min() for r in res]))
    outer = float(np.mean([r[0].max() for r in res]))
    cum = np.cumsum([float(x) for x in w])[:-1]
    rank_dev = max((abs(r[1][i] / m - cum[i]) for r in res for i in range(len(cum))),
                   default=0.0)
    strays = float(np.mean((mods_all < radii[0]) | (mods_all > radii[-1])))
    f_pred = [float(law.cdf(s)) for s in s_pts]
    f_emp = [rk / m for rk in res[0][2]]
    f_dev = max(abs(a - b) for a, b in zip(f_pred, f_emp))
    emp = EmpiricalRadialCdf(mods_all)
    emit_csv(["radius", "cdf"], zip(emp.radii, emp(emp.radii)),
             os.path.join(ctx["out"], "radial_cdf.csv"))
    metrics = {"radii": radii, "ks": ks, "inner_radius_mean": inner,
               "outer_radius_mean": outer, "ranks": [r[1] for r in res],
               "max_rank_deviation": rank_dev, "stray_fraction": strays,
               "f_radii": s_pts, "f_predicted": f_pred, "f_rank_normalised": f_emp,
               "csv": "radial_cdf.csv"}
    crit = {
        "ks": _criterion(ks <= 0.05 * s_tol, ks, 0.05 * s_tol),
        "inner_radius": _criterion(abs(inner - radii[0]) <= 0.05 * s_tol, inner,
                                   {"target": radii[0], "tol": 0.05 * s_tol}),
        "outer_radius": _criterion(abs(outer - radii[-1]) <= 0.05 * s_tol, outer,
                                   {"target": radii[-1], "tol": 0.05 * s_tol}),
        "rank": _criterion(rank_dev <= 0.05 * s_tol, rank_dev, 0.05 * s_tol),
        "strays": _criterion(strays <= 0.02 * s_tol, strays, 0.02 * s_tol),
        "phi_p_s": _criterion(f_dev <= 0.05 * s_tol, f_dev, 0.05 * s_tol),
    }
    return metrics, crit


def _run_smult(cfg, ctx):
    K = cfg.get("order", 6)
    a = _law_from(cfg["a"], "/a")
    b = _law_from(cfg["b"], "/b")
    ma, mb = _law_moments(a, K), _law_moments(b, K)
    got = free_mult_convolution(ma, mb, K)
    want = acceptance._oracle_product_moments(ma, mb, K)
    exact = all(is_exact(x) for x in list(got) + list(want))
    ok = got == want if exact else max(abs(float(x) - float(y)) for x, y in zip(got, want)) <= 1e-9
    return ({"order": K, "s_product_moments": got, "oracle_moments": want},
            {"oracle_match": _criterion(ok)})


def _run_freeness(cfg, ctx):
    ms = cfg.get("ms", [64, 256])
    reps = acceptance.freeness_trend(ctx["seed"], ms=tuple(ms), trials=cfg.get("trials", 20),
                                     order=cfg.get("order", 4), threads=ctx["threads"],
                                     c=cfg.get("c", 2))
    vals = [r.max_abs for r in reps]
    return ({"reports": [r.to_json() for r in reps]},
            {"decreasing_trend": _criterion(all(y < x for x, y in zip(vals, vals[1:])), vals)})


def _run_acceptance(cfg, ctx):
    ids = cfg.get("criteria", "all")
    ids = None if ids == "all" else ids
    rc = acceptance.RunConfig(seed=ctx["seed"], threads=ctx["threads"],
                              tolerance_scale=ctx["tolerance_scale"])
    results = acceptance.run_criteria(ids, rc, echo=lambda s: print(s, file=sys.stderr))
    ctx["timings"].update({f"criterion_{r.id}": r.timings.get("seconds") for r in results})
    return ({"criteria": [r.to_json() for r in results]},
            {f"criterion_{r.id}": _criterion(r.passed) for r in results})


_RUNNERS = {
    "nc": _run_nc,
    "cumulants": _run_cumulants,
    "transforms": _run_transforms,
    "brown-predict": _run_brown,
    "simulate": _run_simulate,
    "verify-dh": _run_verify_dh,
    "verify-annuli": _run_verify_annuli,
    "verify-smult": _run_smult,
    "freeness-mc": _run_freeness,
    "acceptance": _run_acceptance,
}


def _resolve_seed(cli_seed, cfg):
    if cli_seed is not None:
        return int(cli_seed)
    if "seed" in cfg:
        return int(cfg["seed"])
    env = os.environ.get("FREEPROB_SEED")
    if env is not None:
        try:
            v = int(env)
        except ValueError as e:
            raise ConfigError("/seed", f"FREEPROB_SEED={env!r} is not an integer") from e
        if not 0 <= v < 2 ** 64:
            raise ConfigError("/seed", "FREEPROB_SEED out of range")
        return v
    return 0


def run(config, out=None, seed=None, threads=None, tolerance_scale=None):
    """Validate and execute one scenario; returns ``(report, exit_code)``.

    ``report.json`` and CSV artifacts are written to ``out`` (default: the
    config's ``out`` key, else ``freeprob-out``).
    """
    cfg = copy.deepcopy(config)
    validate_config(cfg)
    ctx = {
        "seed": _resolve_seed(seed, cfg),
        "threads": int(threads or cfg.get("threads", 1)),
        "tolerance_scale": float(tolerance_scale or cfg.get("tolerance_scale", 1.0)),
        "out": out or cfg.get("out", "freeprob-out"),
        "timings": {},
    }
    os.makedirs(ctx["out"], exist_ok=True)
    inputs = {k: v for k, v in cfg.items() if k not in ("out", "threads")}
    inputs["seed"] = ctx["seed"]
    inputs["tolerance_scale"] = ctx["tolerance_scale"]
    report = {"scenario": cfg["scenario"], "inputs": inputs, "metrics": {}, "criteria": {},
              "passed": False}
    code = EXIT_RUNTIME
    t0 = time.perf_counter()
    try:
        metrics, crit = _RUNNERS[cfg["scenario"]](cfg, ctx)
        report["metrics"] = metrics
        report["criteria"] = crit
        report["passed"] = all(c["passed"] for c in crit.values())
        code = EXIT_PASS if report["passed"] else EXIT_FAIL
    except ConfigError:
        raise
    except Exception as e:  # runtime failure: keep a partial report
        report["error"] = f"{type(e).__name__}: {e}"
    ctx["timings"]["total_seconds"] = time.perf_counter() - t0
    emit_json(report, os.path.join(ctx["out"], "report.json"))
    emit_json(ctx["timings"], os.path.join(ctx["out"], "timings.json"))
    return report, code


def _parser():
    p = argparse.ArgumentParser(prog="freeprob", description=__doc__.split("\n\n")[0].strip())
    p.add_argument("--config", required=True, help="experiment config JSON ('-' for stdin)")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--threads", type=int, default=None, help="worker threads (speed only)")
    p.add_argument("--tolerance-scale", type=float, default=None,
                   help="multiplier for statistical tolerances")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.config == "-":
            cfg = json.load(sys.stdin)
        else:
            with open(args.config) as fh:
                cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("config error at /seed: out of range", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads is not None and args.threads < 1:
        print("config error at /threads: must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report, code = run(cfg, out=args.out, seed=args.seed, threads=args.threads,
                           tolerance_scale=args.tolerance_scale)
    except ConfigError as e:
        print(f"config error at {e.pointer}: {e.message}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    status = {EXIT_PASS: "PASS", EXIT_FAIL: "FAIL"}.get(code, "ERROR")
    print(f"{report['scenario']}: {status}")
    if "error" in report:
        print(report["error"], file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
