"""Command-line driver: ``tracegrowth <subcommand> [options]``.

Every subcommand accepts ``--config FILE`` (a JSON object whose keys are the
subcommand's option names); explicit flags override file values and unknown
keys are rejected.  Reports are a JSON object with "meta" and "data" keys, or
CSV rows with the metadata in ``<out>.meta.json``.

Exit codes: 0 success, 1 a checked property failed, 2 usage error,
3 resource cap exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from .errors import (ConvergenceError, PreconditionError, ResourceLimitError,
                     TraceGrowthError, VerificationError)
from .field import Field, format_elem, parse_elem

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3
REQUIRED = object()


class UsageError(Exception):
    pass


def _int_list(s: str) -> list[int]:
    """"1,2,5" or "1..5" (inclusive) or a mix: "1..3,7"."""
    out = []
    for part in str(s).split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _num_list(s: str) -> list[float]:
    return [float(x) for x in str(s).split(",") if x.strip()]


def _json_arg(s):
    return json.loads(s) if isinstance(s, str) else s


# name -> [(flag, dest, converter, default or REQUIRED, help)]
COMMON = [
    ("--out", "out", str, None, "output path (default: stdout)"),
    ("--format", "format", str, "json", "json or csv"),
    ("--seed", "seed", int, 0, "seed for randomized fixture generation"),
]

COMMANDS: dict[str, tuple[str, list]] = {
    "trace-growth": ("trace-set counting function f(n) of a group spec", [
        ("--spec", "spec", str, REQUIRED, "group spec JSON file"),
        ("--L", "L", int, 10, "word-length radius"),
        ("--nmax", "nmax", int, 50, "largest n for f(n)"),
        ("--cap", "cap", int, 10**6, "maximum number of distinct ball elements"),
        ("--tolerance", "tolerance", float, 1e-9, "float-mode dedup tolerance"),
    ]),
    "qrs-verify": ("boundedness and gcd lemmas for QRS(a, 1)", [
        ("--input", "input", str, None, "JSON file {a, F0, F1, horizon, pair:{G0, G1}}"),
        ("--a", "a", str, None, "recurrence coefficient p/q"),
        ("--F0", "F0", str, None, "initial term F_0"),
        ("--F1", "F1", str, None, "initial term F_1"),
        ("--horizon", "horizon", int, 120, "largest index n"),
        ("--G0", "G0", str, None, "second sequence G_0 for the gcd check"),
        ("--G1", "G1", str, None, "second sequence G_1 for the gcd check"),
    ]),
    "zaffine-density": ("densities, intersections and the two-term union bound", [
        ("--spaces", "spaces", _json_arg, REQUIRED, 'JSON list [["x","y"], ...]; y="inf" for a point'),
        ("--lo", "lo", str, "-100", "window lower end"),
        ("--hi", "hi", str, "100", "window upper end"),
    ]),
    "dirichlet": ("S(x, a, m) for primes in a residue class", [
        ("--x", "x", _num_list, "1000,10000,100000", "comma-separated x values"),
        ("--a", "a", _int_list, None, "residues (default: all coprime to m)"),
        ("--m", "m", int, REQUIRED, "modulus"),
        ("--csv", "csv", bool, False, "shorthand for --format csv"),
    ]),
    "family-build": ("Z-affine trace families A(n, l) of a hyperbolic matrix", [
        ("--matrix", "matrix", _json_arg, REQUIRED, 'JSON [["a","b"],["c","d"]]'),
        ("--beta2", "beta2", int, 1, "cusp width N"),
        ("--n", "n", _int_list, "1..3", "powers n, e.g. 1..5"),
        ("--budget", "budget", int, 200, "largest witness value"),
    ]),
    "arith-check": ("Takeuchi, structure and square-free diagnostics", [
        ("--spec", "spec", str, REQUIRED, "group spec JSON file"),
        ("--field", "field", _json_arg, None, 'override field, e.g. {"kind":"quadratic","d":2}'),
        ("--ball-length", "ball_length", int, 6, "word-length radius of the sample"),
        ("--N", "N", int, None, "cusp width for the structure check (default: spec N)"),
        ("--cap", "cap", int, 10**6, "maximum number of distinct ball elements"),
    ]),
    "fricke": ("tail solve, orbit counting and critical exponent estimate", [
        ("--coords", "coords", str, None, "JSON file {g, triples, tail?}"),
        ("--planted", "planted", bool, False, "use a seeded planted genus-3 fixture"),
        ("--rmax", "rmax", float, 10.0, "largest radius"),
        ("--cap", "cap", int, 10**4, "maximum number of enumerated words"),
        ("--scan-cap", "scan_cap", int, 500, "words in the trace collision scan"),
        ("--tolerance", "tolerance", float, 1e-9, "collision tolerance"),
    ]),
}


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    out: str | None = None
    format: str = "json"
    seed: int = 0
    config_path: str | None = None

    def echo(self) -> dict:
        return {"command": self.command, "params": _jsonable(self.params), "out": self.out,
                "format": self.format, "seed": self.seed, "config": self.config_path}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tracegrowth", description="Trace-set growth experiments.")
    p.add_argument("--version", action="version", version=f"tracegrowth {__version__}")
    sub = p.add_subparsers(dest="command", metavar="SUBCOMMAND")
    for name, (help_, opts) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_, description=help_,
                            argument_default=argparse.SUPPRESS)
        sp.add_argument("--config", help="JSON config file; flags override its values")
        for flag, dest, conv, default, h in opts + COMMON:
            if conv is bool:
                sp.add_argument(flag, dest=dest, action="store_true", help=h)
            else:
                dflt = "required" if default is REQUIRED else default
                sp.add_argument(flag, dest=dest, type=conv, help=f"{h} [{dflt}]")
    return p


def _convert(conv, value):
    if conv is bool:
        return bool(value)
    if isinstance(value, str) or conv in (_int_list, _num_list) and not isinstance(value, list):
        return conv(value)
    return value


def parse_config(argv: list[str] | None = None) -> RunConfig:
    """Resolve defaults < config file < explicit flags."""
    ns = build_parser().parse_args(argv)
    if ns.command is None:
        raise UsageError("a subcommand is required")
    opts = COMMANDS[ns.command][1] + COMMON
    table = {dest: (conv, default) for _, dest, conv, default, _ in opts}
    values = {dest: default for dest, (_, default) in table.items()}
    cfg_path = getattr(ns, "config", None)
    if cfg_path:
        try:
            raw = json.loads(Path(cfg_path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config {cfg_path}: {e}") from e
        if not isinstance(raw, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(raw) - set(table))
        if unknown:
            raise UsageError(f"unknown config keys for {ns.command}: {unknown}")
        for k, v in raw.items():
            try:
                values[k] = _convert(table[k][0], v)
            except (TypeError, ValueError) as e:
                raise UsageError(f"bad config value for {k}: {e}") from e
    for dest in table:
        if hasattr(ns, dest):
            values[dest] = getattr(ns, dest)
    for dest, (conv, default) in table.items():
        if values[dest] is REQUIRED:
            raise UsageError(f"{ns.command}: --{dest.replace('_', '-')} is required")
        if default is not REQUIRED and values[dest] is default and isinstance(default, str) \
                and conv is not str:
            values[dest] = conv(default)
    fmt = values.pop("format")
    if values.get("csv"):
        fmt = "csv"
    if fmt not in ("json", "csv"):
        raise UsageError(f"unknown format {fmt!r}")
    out, seed = values.pop("out"), values.pop("seed")
    return RunConfig(ns.command, values, out, fmt, seed, cfg_path)


# ---------------------------------------------------------------------------
# report emission


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (str, int, bool)) or x is None:
        return x
    if hasattr(x, "tolist"):
        return _jsonable(x.tolist())
    if hasattr(x, "item"):
        return _jsonable(x.item())
    return format_elem(x) if hasattr(x, "d") else str(x)


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _fmt_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(_jsonable(v))


def emit_report(data: dict, meta: dict, fmt: str, path: str | None,
                rows: list | None = None, header: list | None = None, stdout=None) -> None:
    """Write a deterministic JSON or CSV report (CSV metadata goes to ``<path>.meta.json``)."""
    stdout = stdout or sys.stdout
    if fmt == "csv" and rows is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt_cell(v) for v in r])
        text, sidecar = buf.getvalue(), _dumps({"meta": meta, "data": data})
    else:
        text, sidecar = _dumps({"meta": meta, "data": data}), None
    if path is None:
        stdout.write(text)
        return
    p = Path(path)
    try:
        p.write_text(text, encoding="utf-8", newline="\n")
        if sidecar is not None:
            Path(str(p) + ".meta.json").write_text(sidecar, encoding="utf-8", newline="\n")
    except OSError as e:
        raise OSError(f"cannot write report to {p}: {e}") from e


def _meta(cfg: RunConfig, mode: str, tolerances: dict) -> dict:
    return {"version": __version__, "config": cfg.echo(), "mode": mode,
            "tolerances": tolerances, "seed": cfg.seed}


# ---------------------------------------------------------------------------
# subcommands; each returns (data, meta, rows, header, ok)


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read {path}: {e}") from e


def _load_spec(path: str):
    from .matgroup import GroupSpec
    return GroupSpec.from_json(_load_json(path))


def run_trace_growth(cfg: RunConfig):
    from .matgroup import (counting_function, enumerate_ball, growth_classify,
                           trace_set, trace_statistics)
    p = cfg.params
    spec = _load_spec(p["spec"])
    ball = enumerate_ball(spec, p["L"], cap=p["cap"], tolerance=p["tolerance"])
    ts = trace_set(ball)
    counts = counting_function(ts, range(p["nmax"] + 1))
    data = {"L": p["L"], "element_count": len(ball), "sphere_sizes": ball.sphere_sizes,
            "counts": [c for _, c in counts]}
    try:
        st = trace_statistics(ts)
        data.update(gap=st.gap, max_bc=st.max_bc, bc_window=st.bc_window)
    except TraceGrowthError:
        data.update(gap=None, max_bc=None, bc_window=None)
    samples = [(n, c) for n, c in counts if n >= 1 and c > 0]
    if len(samples) >= 4:
        fit = growth_classify(samples)
        data["growth"] = {"class": fit.growth_class, "residuals": fit.residuals,
                          "loglog_slope": fit.loglog_slope}
    meta = _meta(cfg, ball.mode, {"dedup": ball.tolerance})
    meta.update(ts.meta())
    return data, meta, counts, ["n", "count"], True


def run_qrs_verify(cfg: RunConfig):
    from .qrs import QrsSeq, verify_boundedness, verify_gcd_bounded
    p = dict(cfg.params)
    if p.get("input"):
        raw = _load_json(p["input"])
        unknown = set(raw) - {"a", "F0", "F1", "horizon", "pair"}
        if unknown:
            raise UsageError(f"unknown keys in qrs input: {sorted(unknown)}")
        for k in ("a", "F0", "F1", "horizon"):
            if k in raw and p.get(k) in (None, 120):
                p[k] = raw[k]
        if raw.get("pair"):
            p.setdefault("G0", None)
            p["G0"] = p["G0"] or raw["pair"].get("G0")
            p["G1"] = p.get("G1") or raw["pair"].get("G1")
    for k in ("a", "F0", "F1"):
        if p.get(k) is None:
            raise UsageError(f"qrs-verify: --{k} is required (flag, config or --input)")
    a, F0, F1 = (Fraction(str(p[k])) for k in ("a", "F0", "F1"))
    N = int(p["horizon"])
    seq = QrsSeq(a, F0, F1)
    rep = verify_boundedness(seq, N)
    data = rep.to_json()
    ok = rep.plateau
    data["max_gcd"] = None
    if p.get("G0") is not None and p.get("G1") is not None:
        G = QrsSeq(a, Fraction(str(p["G0"])), Fraction(str(p["G1"])))
        g = verify_gcd_bounded(seq, G, N)
        data.update(max_gcd=g.max_gcd, max_gcd_half=g.max_gcd_half, gcd_plateau=g.plateau)
        ok = ok and g.plateau
    rows = [(n, str(r), str(u)) for (n, r), (_, u) in zip(rep.den_ratios, rep.num_ratios)]
    return data, _meta(cfg, "exact", {}), rows, ["n", "den_ratio", "num_ratio"], ok


def _parse_real(s):
    s = str(s)
    if s.lower() in ("inf", "infinity"):
        return math.inf
    try:
        return Fraction(s)
    except ValueError:
        return float(s)


def run_zaffine_density(cfg: RunConfig):
    from itertools import combinations

    from .zaffine import (Empty, Point, ZAffine, count_in, density, gcd_lcm_z,
                          intersect, union_lower_bound)
    p = cfg.params
    spaces = p["spaces"]
    if not isinstance(spaces, list) or not all(isinstance(s, list) and len(s) == 2 for s in spaces):
        raise UsageError('spaces must be a JSON list of [x, y] pairs')
    family = [ZAffine(_parse_real(x), _parse_real(y)) for x, y in spaces]
    lo, hi = _parse_real(p["lo"]), _parse_real(p["hi"])
    singles = [{"space": str(A), "density": density(A), "count": count_in(A, lo, hi)}
               for A in family]
    pairs = []
    for (i, A), (j, B) in combinations(enumerate(family), 2):
        I = intersect(A, B)
        desc = ("empty" if isinstance(I, Empty) else
                f"point {I.value}" if isinstance(I, Point) else str(I))
        entry = {"i": i, "j": j, "intersection": desc, "count": count_in(I, lo, hi)}
        if not A.is_point and not B.is_point:
            try:
                g, l = gcd_lcm_z(A.y, B.y)
                entry.update(period_gcd=g, period_lcm=l)
            except TraceGrowthError:
                pass
        pairs.append(entry)
    ub = union_lower_bound(family, lo, hi)
    data = {"window": [lo, hi], "spaces": singles, "pairs": pairs,
            "union": {"exact": ub.exact, "bound": ub.bound, "singles": ub.singles,
                      "pairwise": ub.pairwise}}
    mode = "exact" if all(A.exact for A in family) else "float"
    rows = [(s["space"], s["density"], s["count"]) for s in singles]
    return data, _meta(cfg, mode, {}), rows, ["space", "density", "count"], True


def run_dirichlet(cfg: RunConfig):
    from .zaffine import dirichlet_S
    p = cfg.params
    m = p["m"]
    residues = p["a"] if p["a"] is not None else [a for a in range(m) if math.gcd(a, m) == 1]
    rows = []
    for a in residues:
        for x in p["x"]:
            v = dirichlet_S(x, a, m)
            rows.append((v.x, v.a, v.m, v.n_primes, v.S))
    data = {"values": [dict(zip(("x", "a", "m", "n_primes", "S"), r)) for r in rows],
            "max_abs_S": max(abs(r[4]) for r in rows) if rows else None}
    return data, _meta(cfg, "float", {"summation": "fsum"}), rows, \
        ["x", "a", "m", "n_primes", "S"], True


def _parse_matrix(obj, field: Field | None = None):
    from .matgroup import ExactMat2
    field = field or Field("rational")
    (a, b), (c, d) = obj
    return ExactMat2(*(parse_elem(str(v), field) for v in (a, b, c, d)))


def run_family_build(cfg: RunConfig):
    from .zaffine import build_trace_family
    p = cfg.params
    A = _parse_matrix(p["matrix"])
    rep = build_trace_family(A, p["beta2"], p["n"], p["budget"])
    rows = [(e.n, e.l, e.space.x, e.space.y, e.witness) for e in rep.entries]
    data = {
        "negated": rep.negated, "degenerate": rep.degenerate,
        "decompositions": {n: {"K": d.K, "S": d.S, "T": d.T, "L": d.L}
                           for n, d in rep.decomps.items()},
        "density_sums": rep.density_sums, "e_over_C": rep.e_over_C,
        "entries": [dict(zip(("n", "l", "offset", "period", "witness"), r)) for r in rows],
    }
    return data, _meta(cfg, "exact", {}), rows, ["n", "l", "offset", "period", "witness"], True


def run_arith_check(cfg: RunConfig):
    from .arithmeticity import squarefree_class, structure_check, takeuchi_report
    from .matgroup import GroupSpec, enumerate_ball
    p = cfg.params
    raw = _load_json(p["spec"])
    if p.get("field") is not None:
        raw = dict(raw, field=p["field"])
    spec = GroupSpec.from_json(raw)
    if not spec.field.exact:
        raise UsageError("arith-check needs an exact field")
    ball = enumerate_ball(spec, p["ball_length"], cap=p["cap"])
    traces = list(ball.traces())
    rep = takeuchi_report(traces, spec.field)
    data = {"takeuchi": rep.to_json(), "ball_size": len(ball)}
    ok = True
    N = p["N"] if p["N"] is not None else spec.N
    if spec.field.kind == "rational" and N is not None:
        st = structure_check(ball, N)
        data["structure"] = {"ok": st.ok, "N": st.N, "checked": st.checked,
                             "violator": None if st.violator is None else st.violator.to_json(),
                             "reason": st.reason}
        # integer traces on a canonical-form sample must imply the structure bounds
        if rep.condition1 == "pass" and not st.ok:
            ok = False
    classes = []
    for g in spec.generators:
        try:
            classes.append(squarefree_class(g))
        except TraceGrowthError as e:
            classes.append(f"undefined: {e}")
    data["squarefree_classes"] = classes
    return data, _meta(cfg, "exact", {}), None, None, ok


def run_fricke(cfg: RunConfig):
    from .fricke import (FrickeCoords, embed_generators, estimate_delta, orbit_count,
                         planted_coords, relation_residual, solve_coords,
                         trace_bound_violations, trace_collision_scan)
    p = cfg.params
    if p.get("planted"):
        fc, _ = planted_coords(cfg.seed)
    elif p.get("coords"):
        fc = FrickeCoords.from_json(_load_json(p["coords"]))
    else:
        raise UsageError("fricke: --coords or --planted is required")
    if fc.tail is None:
        fc = solve_coords(fc, seed=cfg.seed)
    mats = embed_generators(fc)
    residual = relation_residual(mats)
    A = mats[: 2 * fc.g - 3]
    oc = orbit_count(A, p["rmax"], cap=p["cap"])
    try:
        est = estimate_delta(oc).to_json()
    except TraceGrowthError as e:
        est = {"delta_hat": None, "ci": None, "error": str(e)}
    coll = trace_collision_scan(A, mats[-1], cap=p["scan_cap"], tolerance=p["tolerance"])
    bad = trace_bound_violations(oc.elements, special=mats[-1])
    data = dict(est)
    data.update(
        residual=residual, tail=fc.tail.to_json(), g=fc.g,
        n_words=oc.n_words, truncated=oc.truncated,
        collisions=[{"word_a": list(c.word_a), "word_b": list(c.word_b),
                     "trace_a": c.trace_a, "trace_b": c.trace_b} for c in coll],
        trace_bound_violations=len(bad),
    )
    rows = list(zip(oc.radii, oc.counts))
    ok = residual <= 1e-9 and not bad
    return data, _meta(cfg, "float", {"solve": 1e-9, "dedup": 1e-9,
                                      "collision": p["tolerance"]}), rows, ["R", "N"], ok


RUNNERS = {
    "trace-growth": run_trace_growth,
    "qrs-verify": run_qrs_verify,
    "zaffine-density": run_zaffine_density,
    "dirichlet": run_dirichlet,
    "family-build": run_family_build,
    "arith-check": run_arith_check,
    "fricke": run_fricke,
}


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
        data, meta, rows, header, ok = RUNNERS[cfg.command](cfg)
        emit_report(data, meta, cfg.format, cfg.out, rows, header)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceLimitError as e:
        print(f"resource cap: {e}", file=sys.stderr)
        return EXIT_CAP
    except (VerificationError, ConvergenceError) as e:
        print(f"verification failed: {e}", file=sys.stderr)
        return EXIT_FAIL
    except (PreconditionError, ValueError, KeyError, TypeError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
