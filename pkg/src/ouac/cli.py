"""Command line: analyze, simulate, diagnose, catalog and verify.

Problem files are YAML (so JSON works too).  Numbers may be written as
integers, decimals or quoted ``"p/q"`` strings; all are read exactly.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import yaml

from . import __version__
from . import polynomial as P
from .diagnostics import diagnose, van1_experiment
from .errors import GeometryError, NumericalFailure, OuacError, ParameterError, ValidationError
from .exactlin import RationalMatrix, Subspace, structure, to_rational
from .exhaustion import build_garland, decide_exhaustion, decide_exhaustion_with_gaussian, heymann_sequence
from .exhaustion.catalog import canonical_case_2d, catalog
from .levymodel import AtomSet, InfiniteRay, MeasureSpec, PolynomialCurve, SubspaceAC
from .simulator import SimConfig, batch_to_csv, conditional_jump_times_check, read_csv, sample_batch
from .streams import Stream, default_seed

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

_BOOL_TAG = "tag:yaml.org,2002:bool"
_NULL_TAG = "tag:yaml.org,2002:null"

# -- problem files ------------------------------------------------------------------


@dataclass
class Problem:
    A: RationalMatrix
    spec: MeasureSpec
    gaussian: Subspace | None = None
    x0: tuple | None = None
    simulation: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.spec.ambient_dim


def _path_str(path: tuple) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


class _Doc:
    """YAML node tree flattened to plain data plus a path -> line table."""

    def __init__(self, text: str):
        try:
            node = yaml.compose(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ValidationError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                                  line=mark.line + 1 if mark else None) from None
        self.lines: dict[tuple, int] = {}
        self.data = self._convert(node, ()) if node is not None else None

    def _convert(self, node, path):
        self.lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            out = {}
            for k, v in node.value:
                key = k.value
                if key in out:
                    raise ValidationError("duplicate key", field=_path_str(path + (key,)), line=k.start_mark.line + 1)
                out[key] = self._convert(v, path + (key,))
            return out
        if isinstance(node, yaml.SequenceNode):
            return [self._convert(v, path + (i,)) for i, v in enumerate(node.value)]
        if node.tag == _BOOL_TAG:
            return node.value.lower() in ("true", "yes", "on", "y")
        if node.tag == _NULL_TAG and node.style is None:
            return None
        return node.value  # numbers stay as their literal text and are parsed exactly

    def line(self, path: tuple) -> int | None:
        while path not in self.lines and path:
            path = path[:-1]
        return self.lines.get(path)

    def error(self, message: str, path: tuple) -> ValidationError:
        return ValidationError(message, field=_path_str(path) or None, line=self.line(path))


def _rational(doc: _Doc, value, path) -> Fraction:
    if isinstance(value, (list, dict)) or value is None:
        raise doc.error("expected a rational number", path)
    try:
        return to_rational(value)
    except ValidationError as exc:
        raise doc.error(str(exc), path) from None


def _vector(doc: _Doc, value, path, n: int) -> tuple:
    if not isinstance(value, list):
        raise doc.error("expected a list of numbers", path)
    if len(value) != n:
        raise doc.error(f"expected {n} entries, got {len(value)}", path)
    return tuple(_rational(doc, x, path + (i,)) for i, x in enumerate(value))


def _vectors(doc: _Doc, value, path, n: int) -> list:
    if not isinstance(value, list):
        raise doc.error("expected a list of vectors", path)
    return [_vector(doc, v, path + (i,), n) for i, v in enumerate(value)]


def _integer(doc: _Doc, value, path, minimum: int) -> int:
    x = _rational(doc, value, path)
    if x.denominator != 1 or x < minimum:
        raise doc.error(f"expected an integer >= {minimum}, got {value}", path)
    return int(x)


def _bool(doc: _Doc, value, path) -> bool:
    if not isinstance(value, bool):
        raise doc.error(f"expected true or false, got {value!r}", path)
    return value


_COMPONENT_KEYS = {
    "atoms": {"kind", "atoms"},
    "ray": {"kind", "direction", "alpha", "scale", "two_sided"},
    "subspace": {"kind", "basis", "alpha", "scale"},
    "curve": {"kind", "coefficients", "beta", "rung_mass"},
}


def _component(doc: _Doc, rec, path, n: int):
    if not isinstance(rec, dict):
        raise doc.error("a measure component must be a mapping", path)
    kind = rec.get("kind")
    if kind not in _COMPONENT_KEYS:
        raise doc.error(f"kind must be one of {sorted(_COMPONENT_KEYS)}, got {kind!r}", path + ("kind",))
    for key in rec:
        if key not in _COMPONENT_KEYS[kind]:
            raise doc.error(f"unknown field for a {kind} component", path + (key,))

    def num(key, default):
        return _rational(doc, rec[key], path + (key,)) if key in rec else default

    try:
        if kind == "atoms":
            atoms = rec.get("atoms")
            if not isinstance(atoms, list):
                raise doc.error("expected a list of {point, mass} records", path + ("atoms",))
            parsed = []
            for i, a in enumerate(atoms):
                ap = path + ("atoms", i)
                if not isinstance(a, dict) or set(a) != {"point", "mass"}:
                    raise doc.error("each atom needs exactly the fields point and mass", ap)
                parsed.append((_vector(doc, a["point"], ap + ("point",), n), _rational(doc, a["mass"], ap + ("mass",))))
            return AtomSet(tuple(parsed))
        if kind == "ray":
            if "direction" not in rec:
                raise doc.error("missing field", path + ("direction",))
            return InfiniteRay(
                _vector(doc, rec["direction"], path + ("direction",), n),
                num("alpha", Fraction(1, 2)),
                num("scale", Fraction(1)),
                _bool(doc, rec["two_sided"], path + ("two_sided",)) if "two_sided" in rec else False,
            )
        if kind == "subspace":
            if "basis" not in rec:
                raise doc.error("missing field", path + ("basis",))
            return SubspaceAC(tuple(_vectors(doc, rec["basis"], path + ("basis",), n)),
                              num("alpha", Fraction(1, 2)), num("scale", Fraction(1)))
        if "coefficients" not in rec:
            raise doc.error("missing field", path + ("coefficients",))
        return PolynomialCurve(tuple(_vectors(doc, rec["coefficients"], path + ("coefficients",), n)),
                               num("beta", Fraction(2)), num("rung_mass", Fraction(1)))
    except ParameterError as exc:
        sub = tuple(exc.field.replace("]", "").replace("[", ".").split(".")) if exc.field else ()
        sub = tuple(int(s) if s.isdigit() else s for s in sub)
        raise doc.error(str(exc), path + sub) from None


_TOP_KEYS = {"n", "A", "B", "gaussian_subspace", "x0", "measure", "simulation"}
_SIM_KEYS = {"eps": "rational", "samples": 1, "seed": 0, "horizon": "rational", "workers": 1}


def parse_problem(text: str) -> Problem:
    """Parse and validate a problem file; errors carry the field path and line."""
    doc = _Doc(text)
    d = doc.data
    if not isinstance(d, dict):
        raise ValidationError("the problem file must be a mapping", line=1)
    for key in d:
        if key not in _TOP_KEYS:
            raise doc.error("unknown top-level field", (key,))
    if "n" not in d:
        raise ValidationError("missing field", field="n", line=1)
    n = _integer(doc, d["n"], ("n",), 1)
    if "A" not in d:
        raise ValidationError("missing field", field="A", line=1)
    rows = d["A"]
    if not isinstance(rows, list) or len(rows) != n:
        raise doc.error(f"A must be a list of {n} rows (n x n)", ("A",))
    A = RationalMatrix([_vector(doc, r, ("A", i), n) for i, r in enumerate(rows)])
    B = None
    if d.get("B") is not None:
        brows = d["B"]
        if not isinstance(brows, list) or len(brows) != n or not brows or not isinstance(brows[0], list):
            raise doc.error(f"B must be a list of {n} rows", ("B",))
        width = len(brows[0])
        B = RationalMatrix([_vector(doc, r, ("B", i), width) for i, r in enumerate(brows)])
    gaussian = None
    if d.get("gaussian_subspace") is not None:
        gaussian = Subspace.span(_vectors(doc, d["gaussian_subspace"], ("gaussian_subspace",), n), n)
    x0 = _vector(doc, d["x0"], ("x0",), n) if d.get("x0") is not None else None
    measure = d.get("measure") or []
    if not isinstance(measure, list):
        raise doc.error("measure must be a list of components", ("measure",))
    comps = tuple(_component(doc, rec, ("measure", i), n) for i, rec in enumerate(measure))
    try:
        spec = MeasureSpec(n, comps, b_matrix=B)
    except ParameterError as exc:
        raise doc.error(str(exc), ("B",)) from None
    sim = {}
    raw = d.get("simulation") or {}
    if not isinstance(raw, dict):
        raise doc.error("simulation must be a mapping", ("simulation",))
    for key, value in raw.items():
        path = ("simulation", key)
        if key not in _SIM_KEYS:
            raise doc.error("unknown simulation field", path)
        kind = _SIM_KEYS[key]
        sim[key] = _rational(doc, value, path) if kind == "rational" else _integer(doc, value, path, kind)
    if "eps" in sim and sim["eps"] <= 0:
        raise doc.error("must be > 0", ("simulation", "eps"))
    if "horizon" in sim and sim["horizon"] < 0:
        raise doc.error("must be >= 0", ("simulation", "horizon"))
    return Problem(A, spec, gaussian, x0, sim)


def load_problem(path) -> Problem:
    return parse_problem(Path(path).read_text())


def _q(x: Fraction) -> str | int:
    x = Fraction(x)
    return int(x) if x.denominator == 1 else str(x)


def _qv(v) -> list:
    return [_q(x) for x in v]


def problem_to_data(p: Problem) -> dict:
    comps = []
    for c in p.spec.components:
        if isinstance(c, AtomSet):
            comps.append({"kind": "atoms", "atoms": [{"point": _qv(pt), "mass": _q(m)} for pt, m in c.atoms]})
        elif isinstance(c, InfiniteRay):
            comps.append({"kind": "ray", "direction": _qv(c.direction), "alpha": _q(c.alpha), "scale": _q(c.scale),
                          "two_sided": c.two_sided})
        elif isinstance(c, SubspaceAC):
            comps.append({"kind": "subspace", "basis": [_qv(b) for b in c.basis], "alpha": _q(c.alpha),
                          "scale": _q(c.scale)})
        else:
            comps.append({"kind": "curve", "coefficients": [_qv(v) for v in c.coefficients], "beta": _q(c.beta),
                          "rung_mass": _q(c.rung_mass)})
    out = {"n": p.n, "A": [_qv(r) for r in p.A.entries]}
    if p.spec.b_matrix is not None:
        out["B"] = [_qv(r) for r in p.spec.b_matrix.entries]
    if p.gaussian is not None:
        out["gaussian_subspace"] = [_qv(b) for b in p.gaussian.basis]
    if p.x0 is not None:
        out["x0"] = _qv(p.x0)
    out["measure"] = comps
    if p.simulation:
        out["simulation"] = {k: _q(v) if isinstance(v, Fraction) else v for k, v in p.simulation.items()}
    return out


def dump_problem(p: Problem) -> str:
    return yaml.safe_dump(problem_to_data(p), sort_keys=False, default_flow_style=None)


# -- reports --------------------------------------------------------------------------


def _poly(p) -> dict:
    return {"coefficients": [_q(c) for c in p], "text": P.to_string(p)}


def structure_block(A: RationalMatrix) -> dict:
    st = structure(A)
    out = {
        "n": A.rows,
        "q": st.q,
        "kappa": st.cyclic_index,
        "minimal_polynomial": _poly(st.minimal_polynomial),
        "characteristic_polynomial": _poly(st.characteristic_polynomial),
        "is_singular": st.is_singular,
    }
    if A.rows == 2 and not st.is_singular:
        out["canonical_case_2d"] = canonical_case_2d(A)
    return out


def verdict_block(v) -> dict:
    return {
        "controllable": v.controllable,
        "exhausts": v.exhausts,
        "tau_zero": v.tau_zero,
        "abs_continuous": v.abs_continuous.value,
        "r": v.r,
        "witness": None if v.witness is None else [_qv(b) for b in v.witness.basis],
        "witness_components": None if v.witness_components is None else list(v.witness_components),
        "obstruction": None if v.obstruction is None else [_qv(u) for u in v.obstruction],
        "escape_mass": None if v.escape_mass is None else _q(v.escape_mass),
        "kappa": v.kappa,
        "m": v.m,
        "q": v.q,
        "gaussian_krylov_span": None if v.gaussian is None else [_qv(b) for b in v.gaussian.basis],
    }


def _float(x):
    return None if x is None or (isinstance(x, float) and not math.isfinite(x)) else x


def diagnostics_block(r) -> dict:
    hp = r.hyperplane_test
    dim = r.nn_dimension
    return {
        "hyperplane_test": {
            "functional": None if hp.functional is None else _qv(hp.functional),
            "offset": hp.offset,
            "tol": hp.tol,
            "fraction": hp.fraction,
            "predicted": hp.predicted,
        },
        "random_functional_max": r.random_functional_max,
        "duplicate_rate": r.duplicate_rate,
        "nn_dimension": None if dim is None else {"estimate": dim.estimate, "ci": [dim.ci_low, dim.ci_high],
                                                  "used": dim.used},
        "sample_count": r.sample_count,
        "verdict_consistency": r.verdict_consistency,
        "narrative": r.narrative,
    }


def _provenance(spec_path, seed=None) -> dict:
    return {
        "tool": "ouac",
        "version": __version__,
        "spec_path": None if spec_path is None else str(spec_path),
        "seed": seed,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def _decide(p: Problem):
    if p.gaussian is not None:
        return decide_exhaustion_with_gaussian(p.A, p.spec, p.gaussian)
    return decide_exhaustion(p.A, p.spec)


def analyze_report(p: Problem, spec_path=None) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "structure": structure_block(p.A),
        "verdict": verdict_block(_decide(p)),
        "provenance": _provenance(spec_path),
    }


# -- commands -------------------------------------------------------------------------


def _emit(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, default=str) + "\n"


def _seed(flag, p: Problem | None) -> int:
    if flag is not None:
        return int(flag)
    if p is not None and "seed" in p.simulation:
        return int(p.simulation["seed"])
    return default_seed(0)


def _sim_config(p: Problem, args) -> SimConfig:
    sim = p.simulation
    eps = args.eps if getattr(args, "eps", None) is not None else float(sim.get("eps", Fraction(1, 1000)))
    samples = args.n if getattr(args, "n", None) is not None else int(sim.get("samples", 1000))
    horizon = args.horizon if getattr(args, "horizon", None) is not None else float(sim.get("horizon", 1))
    workers = args.workers if getattr(args, "workers", None) is not None else int(sim.get("workers", 1))
    try:
        return SimConfig(p.A, p.spec, p.x0, horizon, eps, samples, _seed(args.seed, p), workers)
    except ParameterError as exc:
        raise ValidationError(str(exc), field=exc.field) from None


def cmd_analyze(args) -> int:
    p = load_problem(args.spec)
    _emit(_json(analyze_report(p, args.spec)), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    p = load_problem(args.spec)
    batch = sample_batch(_sim_config(p, args))
    _emit(batch_to_csv(batch), args.out)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    p = load_problem(args.spec)
    batch = read_csv(args.samples)
    if batch.n != p.n:
        raise ValidationError(f"samples have {batch.n} coordinates, problem has n = {p.n}", field="samples")
    v = _decide(p)
    r = diagnose(batch, v, p.A, p.x0)
    report = {
        "schema": SCHEMA_VERSION,
        "structure": structure_block(p.A),
        "verdict": verdict_block(v),
        "diagnostics": diagnostics_block(r),
        "provenance": _provenance(args.spec, batch.seed),
    }
    _emit(_json(report), args.out)
    return EXIT_OK


def format_catalog(dim: int) -> str:
    rows = catalog(dim)
    lines = [f"{'case':<5} {'A':<28} {'kappa':<6} {'battery':<8} infinity set"]
    for case, agree, total in rows:
        a = "[" + "; ".join(" ".join(str(x) for x in r) for r in case.A.entries) + "]"
        lines.append(f"({case.label})  {a:<28} {case.kappa:<6} {str(agree) + '/' + str(total):<8} {case.infinity_set}  [{case.title}]")
    return "\n".join(lines) + "\n"


def cmd_catalog(args) -> int:
    if args.dim not in (2, 3):
        raise ValidationError(f"catalog is available for dimensions 2 and 3, not {args.dim}", field="--dim")
    _emit(format_catalog(args.dim), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    seed = _seed(args.seed, None)
    stream = Stream(seed, (0x7E,))
    if args.suite == "orderstats":
        lines = []
        ok = True
        for q in args.q or (1, 2, 3):
            rep = conditional_jump_times_check(q, args.rate, args.trials, stream.child(q))
            ok &= rep.passed
            lines.append({"q": q, "trials": rep.trials,
                          "marginals": [{"j": l.j, "ks": l.ks_statistic, "p_value": l.p_value,
                                         "critical_1pct": l.critical_1pct, "passed": l.passed} for l in rep.lines]})
        result = {"suite": "orderstats", "rate": args.rate, "results": lines, "passed": ok}
    else:
        if args.spec is None:
            raise ValidationError(f"suite {args.suite} needs a problem file", field="spec")
        p = load_problem(args.spec)
        if args.suite == "van1":
            seq = heymann_sequence(p.A, p.spec.support_span(), seed=seed)
            rep = van1_experiment(p.A, seq, args.trials, stream)
            result = {"suite": "van1", "sequence": [_qv(b) for b in seq], "trials": rep.trials,
                      "failures": rep.failures, "worst_margin": _float(rep.worst_margin),
                      "worst_times": [list(t) for t in rep.worst_times], "passed": rep.passed}
        else:
            g = build_garland(p.A, p.spec, args.mass, stream)
            result = {
                "suite": "garland",
                "mass_bound": g.mass_bound,
                "cones": [{"axis": _qv(c.axis), "half_width": c.half_width, "inner_radius": c.inner_radius,
                           "mass": "inf" if math.isinf(c.mass) else c.mass, "exact": c.exact,
                           "component": c.component_id} for c in g.cones],
                "krylov_margin": g.krylov_margin,
                "krylov_perturbation": g.krylov_perturbation,
                "independence_margin": g.independence_margin,
                "independence_perturbation": g.independence_perturbation,
                "safety_factor": g.safety_factor,
                "disjoint": g.disjoint(),
                "passed": True,
            }
    report = {"schema": SCHEMA_VERSION, "verify": result, "provenance": _provenance(args.spec, seed)}
    _emit(_json(report), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ouac", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"ouac {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="structure and exhaustion verdict for a problem file")
    a.add_argument("spec")
    a.add_argument("--out", help="report path (default: stdout)")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="sample endpoints to CSV")
    s.add_argument("spec")
    s.add_argument("--n", type=int, help="number of samples")
    s.add_argument("--seed", type=int)
    s.add_argument("--eps", type=float, help="small-jump truncation level")
    s.add_argument("--horizon", type=float)
    s.add_argument("--workers", type=int)
    s.add_argument("--out", help="CSV path (default: stdout)")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("diagnose", help="check a sample CSV against the verdict")
    d.add_argument("spec")
    d.add_argument("samples")
    d.add_argument("--out")
    d.set_defaults(func=cmd_diagnose)

    c = sub.add_parser("catalog", help="canonical forms in dimension 2 or 3")
    c.add_argument("--dim", type=int, required=True)
    c.add_argument("--out")
    c.set_defaults(func=cmd_catalog)

    v = sub.add_parser("verify", help="randomized verification suites")
    v.add_argument("spec", nargs="?")
    v.add_argument("--suite", choices=("van1", "garland", "orderstats"), required=True)
    v.add_argument("--trials", type=int, default=10_000)
    v.add_argument("--seed", type=int)
    v.add_argument("--mass", type=float, default=10.0, help="garland mass bound M")
    v.add_argument("--rate", type=float, default=1.0, help="Poisson rate for orderstats")
    v.add_argument("--q", type=int, action="append", help="order for orderstats (repeatable)")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ParameterError) as exc:
        print(f"ouac: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalFailure, GeometryError) as exc:
        print(f"ouac: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"ouac: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OuacError as exc:
        print(f"ouac: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:  # malformed CSV and similar input problems
        print(f"ouac: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
