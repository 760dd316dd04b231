"""
Experiment runner.

    glasner-lab --config exp.json [--out DIR] [--workers N] [--seed S] [--verbose]

The config names an experiment ``kind`` (classify, search, dilation,
equidistribution, centralizer, probe), a group, points and parameters.  The
run writes ``report.json`` and, where there is a series to plot, CSV files
with columns ``index,value``.

Exit codes: 0 success, 2 invalid config, 3 search exhausted or
inconclusive, 4 hypothesis guard failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .density import (
    DEFAULT_PRECISION,
    MIN_PRECISION,
    DenseReport,
    Exhausted,
    FiniteReport,
    Realization,
    SampleTooSmall,
    dilation_radii,
    covering_radius_oracle,
    dilation_search,
    instantiate_many,
    orbit_density_probe,
    orbit_discrepancy,
    translate_search,
    write_series_csv,
)
from .exact_core import (
    GroupPresentation,
    SymbolicPoint,
    apply_automorphism,
    evaluate_word,
    sl2z,
    to_fraction,
)
from .structure import (
    HypothesisError,
    centralizer_basis,
    classify_pair,
    classify_tuple,
    closure_membership,
    random_independent_points,
)

log = logging.getLogger("glasner_lab")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_EXHAUSTED = 3
EXIT_HYPOTHESIS = 4

KINDS = ("classify", "search", "dilation", "equidistribution", "centralizer", "probe")


class ConfigError(ValueError):
    def __init__(self, where: str, msg: str):
        super().__init__("%s: %s" % (where, msg))
        self.where = where


# ---------------------------------------------------------------------------
# config parsing

def load_config(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("%s:%d:%d" % (path, e.lineno, e.colno), e.msg) from None
    if not isinstance(cfg, dict):
        raise ConfigError(str(path), "top level must be an object")
    return cfg


def _group(cfg: dict, base: Path) -> GroupPresentation:
    g = cfg.get("group", "sl2z")
    try:
        if g == "sl2z":
            return sl2z()
        if isinstance(g, str):
            return GroupPresentation.load(base / g)
        return GroupPresentation.from_json(g)
    except (KeyError, ValueError, TypeError, OSError) as e:
        raise ConfigError("group", str(e)) from None


def _params(cfg: dict) -> dict:
    p = cfg.get("parameters", {})
    if not isinstance(p, dict):
        raise ConfigError("parameters", "must be an object")
    return p


def _num(p: dict, key: str, default=None, lo=None, hi=None, kind=float, open_lo=True):
    if key not in p:
        if default is None:
            raise ConfigError("parameters." + key, "required")
        return default
    try:
        v = kind(p[key])
    except (TypeError, ValueError):
        raise ConfigError("parameters." + key, "expected %s, got %r" % (kind.__name__, p[key])
                          ) from None
    if lo is not None and (v <= lo if open_lo else v < lo):
        raise ConfigError("parameters." + key, "must be %s %r" % (">" if open_lo else ">=", lo))
    if hi is not None and v > hi:
        raise ConfigError("parameters." + key, "must be <= %r" % hi)
    return v


def _symbols(cfg: dict) -> list[str]:
    syms = cfg.get("symbols", [])
    if len(set(syms)) != len(syms):
        dup = sorted({s for s in syms if syms.count(s) > 1})
        raise ConfigError("symbols", "declared more than once: %s" % ", ".join(dup))
    return list(syms)


def _point(spec, i: int, n: int, syms: list[str]) -> SymbolicPoint:
    where = "points[%d]" % i
    r = n * len(syms)
    if isinstance(spec, list):
        spec = {"q": spec}
    try:
        q = [to_fraction(x) for x in spec.get("q", ["0"] * n)]
    except (TypeError, ValueError) as e:
        raise ConfigError(where + ".q", str(e)) from None
    if len(q) != n:
        raise ConfigError(where + ".q", "expected %d entries, got %d" % (n, len(q)))
    C = [[Fraction(0)] * r for _ in range(n)]
    if "C" in spec:
        rows = spec["C"]
        if len(rows) != n or any(len(row) != r for row in rows):
            raise ConfigError(where + ".C", "expected a %dx%d matrix" % (n, r))
        C = [[to_fraction(x) for x in row] for row in rows]
    for name, coeff in spec.get("terms", {}).items():
        if name not in syms:
            raise ConfigError(where + ".terms", "undeclared symbol %r" % name)
        j = syms.index(name)
        c = to_fraction(coeff)
        for a in range(n):
            C[a][j * n + a] += c
    return SymbolicPoint(tuple(q), tuple(tuple(row) for row in C))


def _points(cfg: dict, n: int, seed: int) -> tuple[list[SymbolicPoint], int]:
    """Points and the number of scalar symbols in their context."""
    syms = _symbols(cfg)
    if "random_points" in cfg:
        rp = cfg["random_points"]
        try:
            count, nsym = int(rp["count"]), int(rp["symbols"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("random_points", "needs integer 'count' and 'symbols'") from None
        rng = np.random.default_rng(seed)
        try:
            pts = random_independent_points(count, n, nsym * n, rng,
                                            int(rp.get("max_num", 3)), int(rp.get("max_den", 3)))
        except ValueError as e:
            raise ConfigError("random_points", str(e)) from None
        return pts, nsym * n
    specs = cfg.get("points")
    if not isinstance(specs, list) or not specs:
        raise ConfigError("points", "a nonempty list is required")
    return [_point(s, i, n, syms) for i, s in enumerate(specs)], n * len(syms)


def _realization(cfg: dict, r: int) -> Realization:
    ex = cfg.get("realization")
    if ex is None:
        return Realization(r)
    try:
        return Realization(r, tuple(str(Decimal(str(x))) for x in ex))
    except (ValueError, ArithmeticError) as e:
        raise ConfigError("realization", str(e)) from None


def _precision(p: dict) -> int:
    env = os.environ.get("GLASNER_LAB_PRECISION")
    if env:
        try:
            prec = int(env)
        except ValueError:
            raise ConfigError("GLASNER_LAB_PRECISION", "not an integer: %r" % env) from None
    else:
        prec = _num(p, "precision", DEFAULT_PRECISION, kind=int)
    if prec < MIN_PRECISION:
        raise ConfigError("parameters.precision", "must be >= %d" % MIN_PRECISION)
    return prec


def _circle_values(cfg: dict, prec: int):
    if "sqrt_multiples" in cfg:
        sm = cfg["sqrt_multiples"]
        try:
            rad, count = int(sm["radicand"]), int(sm["count"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("sqrt_multiples", "needs integer 'radicand' and 'count'") from None
        with localcontext() as ctx:
            ctx.prec = prec + len(str(count)) + 5
            s = Decimal(rad).sqrt()
            return [j * s - int(j * s) for j in range(1, count + 1)]
    vals = cfg.get("values")
    if not isinstance(vals, list) or not vals:
        raise ConfigError("values", "a nonempty list of 'num/den' or decimal strings is required")
    out = []
    for i, v in enumerate(vals):
        v = str(v)
        try:
            out.append(Fraction(v) if "/" in v or "." not in v else Decimal(v))
        except (ValueError, ArithmeticError):
            raise ConfigError("values[%d]" % i, "not a number: %r" % v) from None
    return out


# ---------------------------------------------------------------------------
# runners; each returns (status, outputs, verification, series)

def _run_centralizer(cfg, G, args):
    cb = centralizer_basis(G)
    ok = all(_commutes(B, g) for B in cb.basis for g in G.generators)
    return EXIT_OK, cb.to_json(), {"basis_commutes_with_generators": ok}, {}


def _commutes(B, g) -> bool:
    n = g.n
    lg = [[sum(B[i][k] * g.rows[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    gl = [[sum(g.rows[i][k] * B[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    return lg == gl


def _run_classify(cfg, G, args):
    pts, _ = _points(cfg, G.n, args.seed)
    d = classify_pair(*pts, G) if len(pts) == 2 else classify_tuple(pts, G)
    out = {"descriptor": d.to_json()}
    return EXIT_OK, out, {"input_tuple_in_closure": closure_membership(pts, d)}, {}


def _run_search(cfg, G, args):
    p = _params(cfg)
    pts, r = _points(cfg, G.n, args.seed)
    R = _realization(cfg, r)
    eps = _num(p, "eps", lo=0, hi=0.5)
    delta = _num(p, "delta", eps / 4, lo=0, hi=eps / 4 + 1e-12)
    L = _num(p, "L_max", 16, lo=0, kind=int, open_lo=False)
    prec = _precision(p)
    try:
        res = translate_search(pts, G, R, eps, L, delta, prec, workers=args.workers)
    except SampleTooSmall as e:
        raise ConfigError("points", str(e)) from None
    if isinstance(res, Exhausted):
        return EXIT_EXHAUSTED, res.to_json(), {}, {}
    # independent recomputation from the word before emission
    M = evaluate_word(res.word, G)
    S = instantiate_many([apply_automorphism(M, a) for a in pts], R, prec)
    ver = covering_radius_oracle(S, delta / 4)
    checks = {"word_evaluates_to_matrix": M == res.matrix,
              "oracle_grid_spacing": ver.grid_spacing, "oracle_hi": ver.hi,
              "oracle_certifies": ver.hi <= eps}
    if not (checks["word_evaluates_to_matrix"] and checks["oracle_certifies"]):
        raise RuntimeError("certificate failed re-verification; refusing to emit it")
    return EXIT_OK, res.to_json(), checks, {}


def _run_dilation(cfg, G, args):
    p = _params(cfg)
    prec = _precision(p)
    X = _circle_values(cfg, prec)
    eps = _num(p, "eps", lo=0, hi=0.5)
    N = _num(p, "N_max", 10 ** 6, lo=1, kind=int, open_lo=False)
    res = dilation_search(X, eps, N)
    if isinstance(res, Exhausted):
        return EXIT_EXHAUSTED, res.to_json(), {}, {}
    radii = dilation_radii(X, res.n)
    series = [(m, str(v)) for m, v in enumerate(radii, 1)]
    checks = {"rescan_minimal": all(v > eps for v in radii[:-1]),
              "rescan_radius_le_eps": radii[-1] <= eps}
    return EXIT_OK, res.to_json(), checks, {"dilation_covering.csv": series}


def _run_equidistribution(cfg, G, args):
    p = _params(cfg)
    k = _num(p, "k", 4, lo=1, kind=int, open_lo=False)
    qs = p.get("q", [101, 401, 997])
    u = cfg.get("base", [1] + [0] * (G.n - 1))
    rows, closed = [], True
    for q in qs:
        size, disc, ok = orbit_discrepancy(G, u, int(q), k)
        rows.append({"q": int(q), "orbit_size": size, "discrepancy": disc})
        closed &= ok
    discs = [r["discrepancy"] for r in rows]
    out = {"k": k, "base": [str(x) for x in u], "table": rows}
    checks = {"orbits_closed_under_generators": closed,
              "nonincreasing": all(a >= b for a, b in zip(discs, discs[1:]))}
    return EXIT_OK, out, checks, {"discrepancy.csv": [(r["q"], r["discrepancy"]) for r in rows]}


def _run_probe(cfg, G, args):
    p = _params(cfg)
    pts, r = _points(cfg, G.n, args.seed)
    if len(pts) != 1:
        raise ConfigError("points", "probe takes exactly one point")
    eps = _num(p, "eps", lo=0, hi=0.5)
    budget = _num(p, "budget", 10 ** 5, lo=1, kind=int, open_lo=False)
    res = orbit_density_probe(pts[0], G, _realization(cfg, r), eps, budget,
                              precision=_precision(p))
    if isinstance(res, FiniteReport):
        return EXIT_OK, res.to_json(), {"orbit_closed_under_generators": res.closed}, {}
    if isinstance(res, DenseReport):
        return EXIT_OK, res.to_json(), {"oracle_certifies": res.verification.hi <= eps}, {}
    return EXIT_EXHAUSTED, res.to_json(), {}, {}


RUNNERS = {
    "centralizer": _run_centralizer,
    "classify": _run_classify,
    "search": _run_search,
    "dilation": _run_dilation,
    "equidistribution": _run_equidistribution,
    "probe": _run_probe,
}


def run_experiment(cfg: dict, args, base: Path = Path(".")) -> tuple[int, dict, dict]:
    """Run one config; returns (exit status, report, CSV series by file name).

    Raises ConfigError on invalid input.
    """
    kind = cfg.get("kind")
    if kind not in RUNNERS:
        raise ConfigError("kind", "unknown kind %r; expected one of %s" % (kind, ", ".join(KINDS)))
    G = _group(cfg, base)
    t0 = time.perf_counter()
    report = {"config": cfg, "toolkit_version": __version__,
              "run": {"seed": args.seed, "workers": args.workers}}
    try:
        status, out, ver, series = RUNNERS[kind](cfg, G, args)
    except HypothesisError as e:
        status, out, ver, series = EXIT_HYPOTHESIS, {"status": "hypothesis_failed",
                                                     "reason": str(e)}, {}, {}
    report.update(outputs=out, verification=ver, series=sorted(series),
                  wall_time_s=round(time.perf_counter() - t0, 6))
    return status, report, series


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="glasner-lab", description=__doc__.split("\n\n")[0])
    ap.add_argument("--config", required=True, help="experiment JSON file")
    ap.add_argument("--out", default=None, help="output directory (default ./out)")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.workers < 1 or not 0 <= args.seed < 2 ** 64:
        print("error: --workers must be >= 1 and --seed a u64", file=sys.stderr)
        return EXIT_INVALID
    try:
        cfg = load_config(args.config)
        out_dir = Path(args.out or cfg.get("output") or "out")
        status, report, series = run_experiment(cfg, args, Path(args.config).parent)
    except ConfigError as e:
        print("invalid config: %s" % e, file=sys.stderr)
        return EXIT_INVALID
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(_dump(report), encoding="utf-8")
    for name, rows in series.items():
        write_series_csv(out_dir / name, rows)
    log.info("kind=%s status=%d wrote %s", cfg["kind"], status, out_dir / "report.json")
    return status


if __name__ == "__main__":
    sys.exit(main())
