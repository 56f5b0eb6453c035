"""Command-line front end: ``glnlab <group> <action> [options]``.

Results go to standard output as CSV (17 significant digits) or JSON, each
preceded by a header that echoes the run configuration and version.
Diagnostics go to standard error. Exit codes: 0 success, 1 parameter or
usage error, 2 numerical nonconvergence, 3 budget exhaustion.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__, envelopes, geometry, lattice, special, whittaker
from .errors import GLNLabError, ParameterError, SchemaError, exit_code_for
from .jacquet import jacquet_integral_oracle
from .params import LanglandsParams, classify, parse_mu, t_mu

THREADS_ENV = "GLNLAB_THREADS"


@dataclass(frozen=True)
class RunConfig:
    tol: float = 1e-8
    seed: int = 0
    threads: int = 1
    output_format: str = "csv"

    def __post_init__(self):
        if not (isinstance(self.tol, float) and self.tol > 0 and math.isfinite(self.tol)):
            raise ParameterError("tol must be a positive real")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ParameterError("seed must be a 64-bit unsigned integer")
        if not (isinstance(self.threads, int) and self.threads >= 1):
            raise ParameterError("threads must be a positive integer")
        if self.output_format not in ("csv", "json"):
            raise ParameterError("output_format must be csv or json")

    @property
    def quad(self):
        return whittaker.QuadratureConfig(tol=max(self.tol, 1e-12))


def load_config(path=None, overrides=None, environ=None):
    """Defaults, then the environment thread count, then a JSON file, then flags."""
    environ = os.environ if environ is None else environ
    values = {}
    if environ.get(THREADS_ENV):
        try:
            values["threads"] = int(environ[THREADS_ENV])
        except ValueError as exc:
            raise SchemaError(f"{THREADS_ENV} must be an integer") from exc
    if path:
        obj = _read_json(path)
        if not isinstance(obj, dict):
            raise SchemaError("config file must hold a JSON object")
        unknown = set(obj) - {"tol", "seed", "threads", "output_format"}
        if unknown:
            raise SchemaError(f"unknown config keys {sorted(unknown)}")
        values.update(obj)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        if "tol" in values:
            values["tol"] = float(values["tol"])
        for key in ("seed", "threads"):
            if key in values:
                v = values[key]
                if isinstance(v, float) and not v.is_integer():
                    raise ValueError(f"{key} must be an integer")
                values[key] = int(v)
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc)) from exc
    return RunConfig(**values)


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParameterError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc.msg})") from exc


# ---------------------------------------------------------------------------
# output


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    if isinstance(v, (list, tuple, dict, np.ndarray)):
        return json.dumps(_jsonable(v), sort_keys=True, separators=(",", ":"))
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, complex):
        return [_jsonable(v.real), _jsonable(v.imag)]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return v


def render_body(records, fmt):
    """Deterministic result body; ``records`` is a list of flat dicts."""
    if fmt == "json":
        return json.dumps(_jsonable(records), indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if records:
        cols = list(records[0])
        w.writerow(cols)
        for r in records:
            w.writerow([_fmt(r.get(c)) for c in cols])
    return buf.getvalue()


def render(records, cfg):
    conf = asdict(cfg)
    if cfg.output_format == "json":
        doc = {"glnlab": __version__, "config": conf, "result": _jsonable(records)}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    head = f"# glnlab {__version__}\n# config {json.dumps(conf, sort_keys=True)}\n"
    return head + render_body(records, "csv")


def result_body(text):
    """Strip the header from rendered output, leaving the part that must be reproducible."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(stripped)
        return json.dumps(doc["result"], indent=2, sort_keys=True) + "\n"
    return "".join(line for line in text.splitlines(True) if not line.startswith("#"))


def _complex_fields(prefix, z):
    z = complex(z)
    return {f"{prefix}_re": z.real, f"{prefix}_im": z.imag}


# ---------------------------------------------------------------------------
# argument parsing helpers


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _complex_arg(text):
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected RE[,IM], got {text!r}") from exc
    if len(parts) not in (1, 2):
        raise argparse.ArgumentTypeError(f"expected RE[,IM], got {text!r}")
    return complex(parts[0], parts[1] if len(parts) == 2 else 0.0)


def _float_list(text):
    try:
        return [float(p) for p in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from exc


def _int_list(text):
    try:
        return [int(p) for p in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _mu_arg(text):
    try:
        return parse_mu(text)
    except GLNLabError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _check_n(n, mu):
    if n is not None and n != mu.n:
        raise ParameterError(f"--n {n} does not match the {mu.n} entries of --mu")


def _matrix_from(obj, key):
    if isinstance(obj, dict):
        if key not in obj:
            raise SchemaError(f"missing key {key!r}")
        obj = obj[key]
    try:
        m = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{key} must be a numeric matrix") from exc
    if m.ndim != 2:
        raise SchemaError(f"{key} must be a matrix")
    return m


def _siegel_from(path_or_obj):
    obj = _read_json(path_or_obj) if isinstance(path_or_obj, str) else path_or_obj
    return geometry.SiegelPoint.from_json(obj)


def _box_from(obj, m):
    if isinstance(obj, list):
        obj = {"radii": obj}
    if not isinstance(obj, dict) or "radii" not in obj:
        raise SchemaError("box needs a 'radii' list")
    frame = obj.get("frame", np.eye(m).tolist())
    return lattice.Orthotope(frame, obj["radii"])


# ---------------------------------------------------------------------------
# handlers: each returns a list of flat dicts


def cmd_bessel_eval(args, cfg):
    ev = special.bessel_k(args.nu, args.x, args.tol or cfg.tol)
    return [{"nu_re": args.nu.real, "nu_im": args.nu.imag, "x": args.x,
             **_complex_fields("value", ev.value), "log_abs": ev.log_abs,
             "abs_error_estimate": ev.abs_error_estimate}]


def _y_point(values, n, convention):
    if len(values) != n - 1:
        raise ParameterError(f"--y needs {n - 1} entries for n = {n}")
    return geometry.TorusPoint(convention, values)


def cmd_whittaker_eval(args, cfg):
    mu = args.mu
    _check_n(args.n, mu)
    quad = whittaker.QuadratureConfig(tol=max(args.tol or cfg.tol, 1e-12))
    y = _y_point(args.y, mu.n, args.convention)
    if args.kind == "star":
        v = whittaker.whittaker_star(mu, y, quad, args.convention)
    elif args.kind == "completed":
        v = whittaker.completed_whittaker(mu, y, quad)
    else:
        v = whittaker.jacquet_whittaker(mu, np.diag(y.t), quad)
    return [{"kind": args.kind, "convention": args.convention,
             "y": list(y.y), **_complex_fields("value", v.value),
             "log_abs": v.log_abs, "abs_error_estimate": v.abs_error_estimate}]


def cmd_whittaker_oracle(args, cfg):
    mu = args.mu
    _check_n(args.n, mu)
    y = _y_point(args.y, mu.n, args.convention)
    g = np.diag(y.t)
    direct = jacquet_integral_oracle(mu, g)
    rec = whittaker.jacquet_whittaker(mu, g, cfg.quad)
    rel = abs(direct.value - rec.value) / max(abs(rec.value), 1e-300)
    return [{**_complex_fields("integral", direct.value), **_complex_fields("recursion", rec.value),
             "relative_difference": rel, "integral_error_estimate": direct.abs_error_estimate}]


def _mellin_record(mu, s, cfg, normalized, tol=None):
    quad = whittaker.QuadratureConfig(tol=max(tol or cfg.tol, 1e-12))
    lhs = whittaker.stade_mellin_lhs(mu, s, quad, normalized=normalized)
    if normalized:
        rhs = complex(whittaker.normalization_constant(mu.n))
    else:
        rhs = whittaker.stade_mellin_rhs(mu, s)
    return {"n": mu.n, "mu": [[v.real, v.imag] for v in mu], **_complex_fields("s", s),
            **_complex_fields("lhs", lhs), **_complex_fields("rhs", rhs),
            "relative_difference": abs(lhs - rhs) / abs(rhs)}


def cmd_whittaker_mellin(args, cfg):
    _check_n(args.n, args.mu)
    return [_mellin_record(args.mu, args.s, cfg, args.normalized)]


def _report_records(report):
    return [{"key": k, "value": v} for k, v in sorted(report.items())]


def cmd_envelope_scan(args, cfg):
    n, mg, tg = envelopes.grid_from_json(_read_json(args.grid), args.n)
    if args.n is not None and n != args.n:
        raise ParameterError("--n does not match the grid file")
    rep = envelopes.envelope_scan(n, mg, tg, eps=args.eps, cfg=cfg.quad, theorem=args.theorem,
                                  kappa=args.kappa, delta=args.delta,
                                  refine=not args.no_refine, threads=cfg.threads)
    return _finish_report(rep.to_dict(), args, cfg)


def cmd_envelope_kbound(args, cfg):
    rep = envelopes.kbound_scan(args.tau_step, args.tau_max, args.k_lo, args.k_hi, args.eps,
                                refine=not args.no_refine)
    return _finish_report(rep.to_dict(), args, cfg)


def _finish_report(report, args, cfg):
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(render([report], RunConfig(cfg.tol, cfg.seed, cfg.threads, "json")))
    return _report_records(report)


def _matrix_arg(args):
    if args.matrix_file:
        return _matrix_from(_read_json(args.matrix_file), "matrix")
    if args.matrix:
        try:
            return np.array(json.loads(args.matrix), dtype=float)
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise SchemaError("--matrix must be a JSON matrix") from exc
    raise ParameterError("give --matrix or --matrix-file")


def cmd_geom_iwasawa(args, cfg):
    f = geometry.iwasawa(_matrix_arg(args))
    return [{"u": f.u, "t": np.diag(f.t), "k": f.k, "residual": f.residual}]


def cmd_geom_cartan(args, cfg):
    c = geometry.cartan(_matrix_arg(args))
    return [{"alpha": c.alpha, "norm": c.norm}]


def cmd_geom_ycal(args, cfg):
    y = geometry.TorusPoint(args.convention, args.y)
    value, bound, ok = geometry.mathcal_y_lower_bound_check(y)
    return [{"y": list(y.y), "ycal": math.exp(value), "log_ycal": value,
             "log_lower_bound": bound, "bound_holds": ok}]


def _lattice_from(path):
    return lattice.LatticeInstance(_matrix_from(_read_json(path), "basis"))


def cmd_lattice_minima(args, cfg):
    L = _lattice_from(args.basis)
    return [{"index": i + 1, "minimum": v} for i, v in enumerate(L.minima)]


def cmd_lattice_count(args, cfg):
    L = _lattice_from(args.basis)
    K = _box_from(_read_json(args.box), L.m)
    return [{"count": lattice.count_points(L, K)}]


def cmd_lattice_lemma1(args, cfg):
    L = _lattice_from(args.basis)
    K = _box_from(_read_json(args.box), L.m)
    r = lattice.lemma1_check(L, K)
    return [{"count": r.count, "d": r.d, "face_volume": r.face_volume,
             "minima_product": r.minima_product, "ratio": r.ratio, "outcome": r.outcome}]


def cmd_lattice_block(args, cfg):
    z = _siegel_from(args.z)
    if args.S:
        spec = lattice.BlockSpec(args.T, args.m, args.S)
        members = sorted(lattice.enumerate_block(z, spec, args.mu))
        return [{"gamma": [list(r) for r in g]} for g in members] or [{"gamma": None}]
    blocks = lattice.blocks_for(z, args.T, args.m, args.mu)
    bound = lattice.block_bound(z, args.T, args.m)
    return [{"S": list(k), "count": len(blocks[k]), "bound": bound,
             "ratio": len(blocks[k]) / bound} for k in sorted(blocks)]


def cmd_lattice_gamma_ball(args, cfg):
    z = _siegel_from(args.z)
    rep = lattice.count_gamma_ball(z, args.K, args.n)
    return [{"M": list(M), "count": c, "bound": b, "ratio": r} for M, c, b, r in rep.rows()]


def cmd_params_classify(args, cfg):
    mu = args.mu
    c = classify(mu, args.c_gen)
    return [{"n": mu.n, "t_mu": t_mu(mu), "ordered": mu.ordered, "tempered": c.tempered,
             "unitary": c.unitary, "lrs_admissible": c.lrs_admissible, "generic": c.generic,
             "c_gen": c.c_gen}]


# ---------------------------------------------------------------------------
# scan driver


def _spec_get(spec, key, default=None, required=False):
    if key in spec:
        return spec[key]
    if required:
        raise SchemaError(f"scan spec is missing {key!r}")
    return default


def _mu_list(raw):
    """A list of parameter vectors; a single vector of [re, im] pairs is accepted too."""
    try:
        if raw and isinstance(raw[0], list) and raw[0] and not isinstance(raw[0][0], list):
            raw = [raw]
        return [LanglandsParams(m) for m in raw]
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"bad mu list: {exc}") from exc


def _scan_envelope(spec, cfg, theorem):
    n, mg, tg = envelopes.grid_from_json(spec)
    rep = envelopes.envelope_scan(
        n, mg, tg, eps=float(_spec_get(spec, "eps", 0.05)), cfg=cfg.quad, theorem=theorem,
        kappa=_spec_get(spec, "kappa"), delta=_spec_get(spec, "delta"),
        refine=bool(_spec_get(spec, "refine", True)), threads=cfg.threads)
    return rep.to_dict()


def _scan_kbound(spec, cfg):
    rep = envelopes.kbound_scan(
        float(_spec_get(spec, "tau_step", 1.0)), float(_spec_get(spec, "tau_max", 40.0)),
        int(_spec_get(spec, "k_lo", -8)), int(_spec_get(spec, "k_hi", 14)),
        float(_spec_get(spec, "eps", 0.05)), refine=bool(_spec_get(spec, "refine", True)))
    return rep.to_dict()


def _scan_mellin(spec, cfg, normalized):
    mus = _mu_list(_spec_get(spec, "mu", required=True))
    s_vals = _spec_get(spec, "s", [1.0])
    s_vals = [_parse_s(s) for s in (s_vals if isinstance(s_vals, list) else [s_vals])]
    tol = _spec_get(spec, "tol")
    jobs = [(mu, s) for mu in mus for s in s_vals]
    rows = _pool_map(lambda job: _mellin_record(job[0], job[1], cfg, normalized, tol), jobs, cfg)
    return {"rows": rows, "max_relative_difference": max(r["relative_difference"] for r in rows)}


def _parse_s(s):
    if isinstance(s, (int, float)):
        return complex(s)
    if isinstance(s, list) and len(s) == 2:
        return complex(float(s[0]), float(s[1]))
    raise SchemaError(f"bad s value {s!r}")


def _scan_weyl(spec, cfg):
    import itertools

    mus = _mu_list(_spec_get(spec, "mu", required=True))
    ys = _spec_get(spec, "y", required=True)
    conv = _spec_get(spec, "convention", "S")

    def job(mu):
        worst = 0.0
        for y in ys:
            t = geometry.TorusPoint(conv, y)
            base = whittaker.completed_whittaker(mu, t, cfg.quad).value
            for perm in itertools.permutations(mu.entries):
                v = whittaker.completed_whittaker(LanglandsParams(perm), t, cfg.quad).value
                worst = max(worst, abs(v - base) / abs(base))
        return worst

    devs = _pool_map(job, mus, cfg)
    return {"max_relative_deviation": max(devs), "per_mu": devs}


def _scan_oracle(spec, cfg):
    mus = _mu_list(_spec_get(spec, "mu", required=True))
    ys = _spec_get(spec, "y", required=True)
    conv = _spec_get(spec, "convention", "S")
    jobs = [(mu, y) for mu in mus for y in ys]

    def job(item):
        mu, y = item
        g = np.diag(geometry.TorusPoint(conv, y).t)
        direct = jacquet_integral_oracle(mu, g).value
        rec = whittaker.jacquet_whittaker(mu, g, cfg.quad).value
        return {"mu": [[v.real, v.imag] for v in mu], "y": list(y),
                "relative_difference": abs(direct - rec) / abs(rec)}

    rows = _pool_map(job, jobs, cfg)
    return {"rows": rows, "max_relative_difference": max(r["relative_difference"] for r in rows)}


def _scan_lemma1(spec, cfg):
    rep = lattice.lemma1_scan(seed=cfg.seed, samples=int(_spec_get(spec, "samples", 1000)),
                              max_m=int(_spec_get(spec, "max_m", 4)), threads=cfg.threads)
    return rep.to_dict()


def _scan_block(spec, cfg):
    points = [_siegel_from(p) for p in _spec_get(spec, "points", required=True)]
    m_vecs = [tuple(m) for m in _spec_get(spec, "m", required=True)]
    T_values = [float(T) for T in _spec_get(spec, "T", required=True)]
    mu = LanglandsParams(_spec_get(spec, "mu", required=True))
    rows = lattice.block_sweep(points, m_vecs, T_values, mu, threads=cfg.threads)
    out = [{"point": r.point, "m": list(r.m_vec), "T": r.T, "max_count": r.max_count,
            "argmax_S": list(r.argmax_S) if r.argmax_S else None, "bound": r.bound,
            "ratio": r.ratio} for r in rows]
    return {"rows": out, "max_ratio": max(r["ratio"] for r in out)}


def _scan_gamma_ball(spec, cfg):
    z = _siegel_from(_spec_get(spec, "z", required=True))
    Ks = _spec_get(spec, "K", required=True)
    Ks = Ks if isinstance(Ks, list) else [Ks]
    reps = _pool_map(lambda K: lattice.count_gamma_ball(z, float(K)), Ks, cfg)
    rows = []
    for rep in reps:
        for M, c, b, r in rep.rows():
            rows.append({"K": rep.K, "M": list(M), "count": c, "bound": b, "ratio": r})
    return {"rows": rows}


def _scan_ycal(spec, cfg):
    rng = np.random.default_rng(cfg.seed)
    samples = int(_spec_get(spec, "samples", 10000))
    max_n = int(_spec_get(spec, "max_n", 5))
    failures = 0
    for _ in range(samples):
        n = int(rng.integers(2, max_n + 1))
        y = math.sqrt(3) / 2 * np.exp(rng.exponential(1.5, n - 1))
        _, _, ok = geometry.mathcal_y_lower_bound_check(geometry.TorusPoint("G", y))
        failures += not ok
    return {"samples": samples, "failures": failures}


def _scan_entries(spec, cfg):
    rng = np.random.default_rng(cfg.seed)
    samples = int(_spec_get(spec, "samples", 500))
    max_n = int(_spec_get(spec, "max_n", 4))
    worst = 0.0
    for _ in range(samples):
        n = int(rng.integers(2, max_n + 1))
        z = geometry.random_siegel_point(rng, n)
        res = geometry.conjugated_entries(z, geometry.random_unimodular(rng, n))
        worst = max(worst, res.max_difference / max(1.0, float(np.max(np.abs(res.direct)))))
    return {"samples": samples, "max_relative_difference": worst}


def _pool_map(fn, items, cfg):
    items = list(items)
    if cfg.threads > 1 and len(items) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


SCAN_KINDS = {
    "theorem1": lambda s, c: _scan_envelope(s, c, 1),
    "theorem1bis": lambda s, c: _scan_envelope(s, c, "1bis"),
    "kbound": _scan_kbound,
    "normalization": lambda s, c: _scan_mellin(s, c, True),
    "mellin": lambda s, c: _scan_mellin(s, c, False),
    "weyl": _scan_weyl,
    "oracle": _scan_oracle,
    "lemma1": _scan_lemma1,
    "block": _scan_block,
    "gamma-ball": _scan_gamma_ball,
    "ycal": _scan_ycal,
    "entries": _scan_entries,
}


def run_scan(spec, cfg):
    """Execute a scan specification (dict) and return the report dict."""
    if not isinstance(spec, dict):
        raise SchemaError("scan spec must be a JSON object")
    kind = spec.get("kind")
    if kind not in SCAN_KINDS:
        raise SchemaError(f"unknown scan kind {kind!r}; expected one of {sorted(SCAN_KINDS)}")
    try:
        report = SCAN_KINDS[kind](spec, cfg)
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"bad {kind} spec: {exc}") from exc
    return {"kind": kind, **report}


def cmd_scan(args, cfg):
    report = run_scan(_read_json(args.spec), cfg)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(render([report], RunConfig(cfg.tol, cfg.seed, cfg.threads, "json")))
    return [report] if cfg.output_format == "json" else _report_records(report)


# ---------------------------------------------------------------------------
# parser


def build_parser():
    p = _Parser(prog="glnlab", description="Whittaker functions and lattice counts on GL(n).")
    p.add_argument("--version", action="version", version=f"glnlab {__version__}")
    p.add_argument("--config", help="JSON file with tol, seed, threads, output_format")
    p.add_argument("--tol", type=float, dest="root_tol")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help=f"default from ${THREADS_ENV}, else 1")
    p.add_argument("--format", dest="output_format", choices=("csv", "json"))
    groups = p.add_subparsers(dest="group", metavar="GROUP", parser_class=_Parser)
    groups.required = True

    def action(group, name, fn, help_text):
        sp = group.add_parser(name, help=help_text)
        sp.set_defaults(fn=fn)
        return sp

    g = groups.add_parser("bessel", help="K-Bessel function").add_subparsers(
        dest="action", metavar="ACTION", parser_class=_Parser)
    g.required = True
    sp = action(g, "eval", cmd_bessel_eval, "evaluate K_nu(x)")
    sp.add_argument("--nu", type=_complex_arg, required=True, help="RE,IM")
    sp.add_argument("--x", type=float, required=True)
    sp.add_argument("--tol", type=float)

    g = groups.add_parser("whittaker", help="Whittaker functions").add_subparsers(
        dest="action", metavar="ACTION", parser_class=_Parser)
    g.required = True
    sp = action(g, "eval", cmd_whittaker_eval, "evaluate on the torus")
    sp.add_argument("--n", type=int)
    sp.add_argument("--mu", type=_mu_arg, required=True, help="re,im:re,im:...")
    sp.add_argument("--y", type=_float_list, required=True)
    sp.add_argument("--kind", choices=("star", "completed", "jacquet"), default="star")
    sp.add_argument("--convention", choices=geometry.CONVENTIONS, default="S")
    sp.add_argument("--tol", type=float)
    sp = action(g, "oracle", cmd_whittaker_oracle, "direct integral against the recursion")
    sp.add_argument("--n", type=int)
    sp.add_argument("--mu", type=_mu_arg, required=True)
    sp.add_argument("--y", type=_float_list, required=True)
    sp.add_argument("--convention", choices=geometry.CONVENTIONS, default="S")
    sp = action(g, "mellin-check", cmd_whittaker_mellin, "Mellin integral of |W|^2")
    sp.add_argument("--n", type=int)
    sp.add_argument("--mu", type=_mu_arg, required=True)
    sp.add_argument("--s", type=_complex_arg, default=complex(1.0))
    sp.add_argument("--normalized", action="store_true",
                    help="integrate the normalised function and compare with its L^2 mass")

    g = groups.add_parser("envelope", help="envelope ratio scans").add_subparsers(
        dest="action", metavar="ACTION", parser_class=_Parser)
    g.required = True
    sp = action(g, "scan", cmd_envelope_scan, "max ratio of |W| to the envelope on a grid")
    sp.add_argument("--theorem", choices=("1", "1bis"), default="1")
    sp.add_argument("--n", type=int)
    sp.add_argument("--eps", type=float, default=0.05)
    sp.add_argument("--kappa", type=float)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--grid", required=True, help="grid specification JSON")
    sp.add_argument("--no-refine", action="store_true")
    sp.add_argument("--out", help="write the JSON report here")
    sp = action(g, "kbound", cmd_envelope_kbound, "K-Bessel envelope scan")
    sp.add_argument("--tau-step", type=float, default=1.0)
    sp.add_argument("--tau-max", type=float, default=40.0)
    sp.add_argument("--k-lo", type=int, default=-8)
    sp.add_argument("--k-hi", type=int, default=14)
    sp.add_argument("--eps", type=float, default=0.05)
    sp.add_argument("--no-refine", action="store_true")
    sp.add_argument("--out")

    g = groups.add_parser("geom", help="matrix decompositions").add_subparsers(
        dest="action", metavar="ACTION", parser_class=_Parser)
    g.required = True
    for name, fn in (("iwasawa", cmd_geom_iwasawa), ("cartan", cmd_geom_cartan)):
        sp = action(g, name, fn, f"{name} decomposition")
        sp.add_argument("--matrix", help="inline JSON matrix")
        sp.add_argument("--matrix-file", help="JSON file with a 'matrix' key or a bare matrix")
    sp = action(g, "ycal", cmd_geom_ycal, "the height function and its lower bound")
    sp.add_argument("--y", type=_float_list, required=True)
    sp.add_argument("--convention", choices=geometry.CONVENTIONS, default="G")

    g = groups.add_parser("lattice", help="lattice counting").add_subparsers(
        dest="action", metavar="ACTION", parser_class=_Parser)
    g.required = True
    sp = action(g, "minima", cmd_lattice_minima, "successive minima")
    sp.add_argument("--basis", required=True)
    for name, fn in (("count", cmd_lattice_count), ("lemma1", cmd_lattice_lemma1)):
        sp = action(g, name, fn, f"{name} in an orthotope")
        sp.add_argument("--basis", required=True)
        sp.add_argument("--box", required=True)
    sp = action(g, "block", cmd_lattice_block, "rank-3 block enumeration")
    sp.add_argument("--z", required=True)
    sp.add_argument("--T", type=float, required=True)
    sp.add_argument("--m", type=_int_list, required=True)
    sp.add_argument("--mu", type=_mu_arg, required=True)
    sp.add_argument("--S", type=_float_list, help="single dyadic block; default lists all")
    sp = action(g, "gamma-ball", cmd_lattice_gamma_ball, "count gamma in a Cartan ball")
    sp.add_argument("--z", required=True)
    sp.add_argument("--K", type=float, required=True)
    sp.add_argument("--n", type=int)

    g = groups.add_parser("params", help="parameter utilities").add_subparsers(
        dest="action", metavar="ACTION", parser_class=_Parser)
    g.required = True
    sp = action(g, "classify", cmd_params_classify, "classify a parameter vector")
    sp.add_argument("--mu", type=_mu_arg, required=True)
    sp.add_argument("--c-gen", type=float, default=0.1)

    sp = groups.add_parser("scan", help="run a scan specification file")
    sp.set_defaults(fn=cmd_scan)
    sp.add_argument("--spec", required=True)
    sp.add_argument("--out", help="write the JSON report here")
    return p


def main(argv=None, stdout=None, stderr=None, environ=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not hasattr(args, "tol"):
        args.tol = None
    try:
        cfg = load_config(args.config, {"tol": args.root_tol, "seed": args.seed,
                                        "threads": args.threads,
                                        "output_format": args.output_format}, environ)
        records = args.fn(args, cfg)
        stdout.write(render(records, cfg))
    except GLNLabError as exc:
        stderr.write(f"glnlab: {type(exc).__name__}: {exc}\n")
        return exit_code_for(exc)
    except OSError as exc:
        stderr.write(f"glnlab: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
