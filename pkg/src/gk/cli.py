"""Command line front end: ``gk run``, ``gk expand-i``, ``gk check-*``, ``gk validate``.

Exit status: 0 all checks pass, 1 some check failed, 2 bad input.
Reports are canonical JSON (sorted keys, no timestamps); timing goes to a
``<output>.meta.json`` sidecar.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from .algebra import AlgebraError, StructAlgebra, check_algebra
from .bundle import BaseVariety, BundleSpace, GeometryError, build_bundle, canonical_class
from .dmodule import check_annihilation, equivariant_i, nonequivariant_limit
from .geometries import load_base
from .hypergeometric import (
    MissingBaseJ,
    base_j_projective,
    check_asymptotics,
    check_homogeneity,
    extremal_no_fiber,
    i_series,
    pure_fiber_bundle,
    pure_fiber_identity,
)
from .novikov import Box, CurveClass, NovikovError, class_degree
from .qhsp import change_of_variables_check, check_collapse, collapse_negative_control
from .report import Report
from .toric import FanError, check_toric_agreement, lift_for_bundle

SCHEMA_VERSION = 1
DEFAULT_COEFF_CAP = 20000
CHECKS = ("grading", "asymptotics", "pure-fiber", "no-fiber", "dmodule", "toric", "qhsp", "expand-i")
EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def coeff_cap() -> int:
    raw = os.environ.get("GK_COEFF_CAP")
    if raw is None:
        return DEFAULT_COEFF_CAP
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"GK_COEFF_CAP must be an integer, got {raw!r}") from None


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, default=str) + "\n"


# ---------------------------------------------------------------------------
# geometry loading with the algebra validated before anything is built


def _algebra_report(alg: StructAlgebra, label: str) -> Report:
    rep = Report("algebra", anchor="commutative, associative, unital, graded structure constants", box="")
    ar = check_algebra(alg)
    for msg in ar.failures:
        rep.fail({"algebra": label, "reason": msg})
    rep.data.setdefault("dims", {})[label] = alg.dim
    return rep


def load_geometry(spec: str) -> tuple[BaseVariety | None, Report]:
    """Returns (base, algebra report). base is None when the base algebra is broken."""
    path = Path(spec)
    if spec.endswith(".json") or path.is_file():
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError:
            raise InputError(f"geometry file {spec!r} not found") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"{spec}: invalid JSON at line {exc.lineno} column {exc.colno}") from None
        try:
            raw = StructAlgebra.from_json(data, validate=False)
        except KeyError as exc:
            raise InputError(f"{spec}: missing field {exc.args[0]!r}") from None
        except (AlgebraError, ValueError, TypeError) as exc:
            raise InputError(f"{spec}: {exc}") from None
        rep = _algebra_report(raw, "base")
        if not rep.ok:
            return None, rep
        try:
            return BaseVariety.from_json(data), rep
        except (GeometryError, AlgebraError, KeyError, TypeError) as exc:
            raise InputError(f"{spec}: {exc}") from None
    try:
        base = load_base(spec)
    except GeometryError as exc:
        raise InputError(str(exc)) from None
    return base, _algebra_report(base.algebra, "base")


def validate_bundle(b: BundleSpace, rep: Report) -> None:
    """Algebra laws on H*P(V), the defining relation, and the pullback being a ring map."""
    for msg in check_algebra(b.algebra).failures:
        rep.fail({"algebra": "bundle", "reason": msg})
    rel = b.z
    for i in range(1, b.n + 1):
        rel = rel * b.divisor(i)
    if b.relation and not rel.is_zero():
        rep.fail({"algebra": "bundle", "reason": "z prod (z - c1(L_i)) is not zero"})
    base = b.base.algebra
    for i in range(base.dim):
        for j in range(base.dim):
            x, y = base.basis_element(i), base.basis_element(j)
            if b.pullback(x * y) != b.pullback(x) * b.pullback(y):
                rep.fail({"algebra": "bundle", "reason": f"pullback not multiplicative at ({base.labels[i]},{base.labels[j]})"})
    rep.data["dims"]["bundle"] = b.algebra.dim


# ---------------------------------------------------------------------------
# the individual checks


@dataclass
class Context:
    base: BaseVariety
    bundle: BundleSpace
    box: Box
    _i: object = field(default=None, repr=False)

    def series(self):
        if self._i is None:
            self._i = i_series(self.bundle, self.box)
        return self._i


def _precondition(name: str, box: Box, reason: str) -> Report:
    rep = Report(name, anchor="precondition", box=str(box))
    rep.fail({"precondition": reason})
    return rep


def run_grading(ctx: Context) -> Report:
    rep = check_homogeneity(ctx.series(), ctx.bundle.grading)
    if ctx.base.base_j is not None and ctx.base.k:
        base_rep = ctx.base.base_j.check(ctx.base.grading, Box(0, ctx.box.d_max))
        rep.merge(base_rep)
    return rep


def run_asymptotics(ctx: Context) -> Report:
    _, rep = check_asymptotics(ctx.series(), ctx.bundle.grading)
    return rep


def run_pure_fiber(ctx: Context) -> Report:
    if ctx.base.k == 0:
        return pure_fiber_identity(ctx.bundle.n, ctx.box.nu_max)
    return pure_fiber_bundle(ctx.bundle, ctx.box)


def run_no_fiber(ctx: Context) -> Report:
    g = ctx.bundle.grading
    negative = [i for i, row in enumerate(g.v_pairings) if any(x < 0 for x in row)]
    if negative:
        return _precondition("no-fiber", ctx.box, f"L_{negative[0]} is not nef (pairings {list(g.v_pairings[negative[0]])})")
    rep = Report("no-fiber", anchor="T_{0,beta} = prod_i prod_{m=0}^{v_i - 1} (z - c1(L_i) - m hbar)", box=str(ctx.box))
    for c in Box(0, ctx.box.d_max).classes():
        if not ctx.base.is_effective(c.d):
            continue
        _, r = extremal_no_fiber(ctx.bundle, c.d)
        rep.merge(r)
    rep.data["ample"] = all(all(x > 0 for x in row) for row in g.v_pairings[1:])
    return rep


def run_dmodule(ctx: Context) -> Report:
    n, N = ctx.bundle.n, ctx.box.nu_max
    s = equivariant_i(n, N)
    rep = check_annihilation(n, N, series=s)
    limit = nonequivariant_limit(s)
    J = base_j_projective(n)
    for nu in range(N + 1):
        got = limit.coefficient((nu,)).map_coefficients(lambda e: J.algebra.element(list(e.coords)), J.algebra)
        if got != J.coefficient((nu,)):
            rep.fail({"nu": nu, "reason": "lambda -> 0 limit differs from J_{P^n}"})
    rep.merge(pure_fiber_bundle(ctx.bundle, Box(N, ctx.box.d_max)))
    return rep


def run_toric(ctx: Context) -> Report:
    if ctx.base.fan is None or ctx.base.ray_classes is None:
        return _precondition("toric", ctx.box, "base carries no fan")
    try:
        lf = lift_for_bundle(ctx.bundle)
    except FanError as exc:
        return _precondition("toric", ctx.box, str(exc))
    return check_toric_agreement(ctx.bundle, lf, ctx.box)


def run_qhsp(ctx: Context) -> Report:
    b, box = ctx.bundle, ctx.box
    collapse = check_collapse(b, box)
    change = change_of_variables_check(b, box)
    control = collapse_negative_control(b, box)
    rep = Report("qhsp", anchor=collapse.anchor + "; " + change.anchor, box=str(box))
    rep.merge(collapse)
    rep.merge(change)
    if control.ok:
        rep.fail({"reason": "negative control (relation disabled) did not fail"})
    rep.data.update({"collapse": collapse.status, "change_of_variables": change.status,
                     "negative_control": control.status})
    return rep


def expansion(ctx: Context) -> list[dict]:
    g = ctx.bundle.grading
    items = sorted(ctx.series().items(), key=lambda kv: (class_degree(kv[0], g), kv[0].key()))
    return [{"class": str(c), "coefficient": v.to_json()} for c, v in items]


def run_expand(ctx: Context) -> Report:
    rep = Report("expand-i", anchor="I_{P(V)} = sum q1^nu q2^beta T_{nu,beta} pi^* J_beta", box=str(ctx.box))
    rep.data["coefficients"] = expansion(ctx)
    return rep


RUNNERS: dict[str, Callable[[Context], Report]] = {
    "grading": run_grading,
    "asymptotics": run_asymptotics,
    "pure-fiber": run_pure_fiber,
    "no-fiber": run_no_fiber,
    "dmodule": run_dmodule,
    "toric": run_toric,
    "qhsp": run_qhsp,
    "expand-i": run_expand,
}


# ---------------------------------------------------------------------------
# jobs


@dataclass
class JobSpec:
    geometry: str
    checks: list[str]
    box: object
    output_path: str | None = None
    output_format: str = "json"
    base_dir: Path = Path(".")

    @classmethod
    def from_json(cls, data, base_dir: Path = Path(".")) -> JobSpec:
        if not isinstance(data, dict):
            raise InputError("job: expected a JSON object")
        schema = data.get("schema", SCHEMA_VERSION)
        if schema != SCHEMA_VERSION:
            raise InputError(f"job.schema: unsupported version {schema!r} (expected {SCHEMA_VERSION})")
        for key in ("geometry", "checks", "box"):
            if key not in data:
                raise InputError(f"job: missing field {key!r}")
        checks = data["checks"]
        if checks == "all":
            checks = list(CHECKS)
        if not isinstance(checks, list) or not checks:
            raise InputError("job.checks: expected a nonempty list")
        for c in checks:
            if c not in CHECKS:
                raise InputError(f"job.checks: unknown check {c!r}")
        out = data.get("output") or {}
        fmt = out.get("format", "json")
        if fmt not in ("json", "text"):
            raise InputError(f"job.output.format: expected 'json' or 'text', got {fmt!r}")
        geometry = data["geometry"]
        if not isinstance(geometry, str):
            raise InputError("job.geometry: expected a builtin name or a file path")
        if geometry.endswith(".json") and not Path(geometry).is_absolute():
            geometry = str(base_dir / geometry)
        path = out.get("path")
        if path is not None and not Path(path).is_absolute():
            path = str(base_dir / path)
        return cls(geometry, sorted(set(checks)), data["box"], path, fmt, base_dir)


def build_context(geometry: str, box_spec) -> tuple[Context | None, Report]:
    base, alg_rep = load_geometry(geometry)
    if base is None:
        return None, alg_rep
    try:
        box = Box.parse(box_spec, base.k)
    except (NovikovError, ValueError, TypeError) as exc:
        raise InputError(f"box: {exc}") from None
    cap = coeff_cap()
    if box.size() > cap:
        raise InputError(f"box {box} retains {box.size()} coefficients, over the cap of {cap} (GK_COEFF_CAP)")
    try:
        b = build_bundle(base)
    except GeometryError as exc:
        raise InputError(str(exc)) from None
    validate_bundle(b, alg_rep)
    alg_rep.box = str(box)
    return Context(base, b, box), alg_rep


def run_job(spec: JobSpec) -> tuple[int, dict, dict]:
    """Returns (exit status, canonical report bundle, timing metadata)."""
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    ctx, alg_rep = build_context(spec.geometry, spec.box)
    timings["construction"] = time.perf_counter() - t0
    reports = [alg_rep]
    if ctx is not None:
        for name in spec.checks:
            t = time.perf_counter()
            try:
                rep = RUNNERS[name](ctx)
            except (MissingBaseJ, GeometryError) as exc:
                rep = _precondition(name, ctx.box, str(exc))
            timings[name] = time.perf_counter() - t
            rep.box = str(ctx.box)
            reports.append(rep)
    else:
        for name in spec.checks:
            reports.append(_precondition(name, Box(0), "base algebra failed validation"))
    reports.sort(key=lambda r: r.check)
    ok = all(r.ok for r in reports)
    bundle = {
        "schema": SCHEMA_VERSION,
        "geometry": spec.geometry if not spec.geometry.endswith(".json") else Path(spec.geometry).name,
        "box": str(ctx.box) if ctx else None,
        "status": "pass" if ok else "fail",
        "reports": [r.to_json() for r in reports],
    }
    return (EXIT_PASS if ok else EXIT_FAIL), bundle, timings


def render_text(bundle: dict) -> str:
    lines = [f"geometry {bundle['geometry']}  box {bundle['box']}  status {bundle['status']}"]
    for r in bundle["reports"]:
        lines.append(f"{r['status'].upper():4}  {r['check']:<12} {r['box']:<10} {r['anchor']}")
        for f in r["failures"][:10]:
            lines.append(f"      - {json.dumps(f, sort_keys=True, default=str)}")
        if len(r["failures"]) > 10:
            lines.append(f"      ... {len(r['failures']) - 10} more")
    return "\n".join(lines) + "\n"


def _emit(bundle: dict, fmt: str, path: str | None, meta: dict | None = None) -> None:
    text = canonical_json(bundle) if fmt == "json" else render_text(bundle)
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).write_text(text)
    if meta is not None:
        Path(path + ".meta.json").write_text(canonical_json(meta))


# ---------------------------------------------------------------------------
# commands


def cmd_run(args) -> int:
    jobfile = Path(args.jobfile)
    try:
        data = json.loads(jobfile.read_text())
    except FileNotFoundError:
        raise InputError(f"job file {args.jobfile!r} not found") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.jobfile}: invalid JSON at line {exc.lineno} column {exc.colno}") from None
    spec = JobSpec.from_json(data, base_dir=jobfile.parent)
    if args.output:
        spec.output_path = args.output
    started = datetime.now(timezone.utc).isoformat()
    status, bundle, timings = run_job(spec)
    meta = {"job": str(jobfile), "started": started,
            "wall_clock_seconds": {k: round(v, 6) for k, v in timings.items()}}
    _emit(bundle, spec.output_format, spec.output_path, meta)
    if spec.output_path:
        print(f"{bundle['status']}: wrote {spec.output_path}")
    return status


def cmd_expand(args) -> int:
    ctx, rep = build_context(args.geometry, args.order)
    if ctx is None:
        sys.stdout.write(canonical_json(rep.to_json()))
        return EXIT_FAIL
    sys.stdout.write(canonical_json(expansion(ctx)))
    return EXIT_PASS


def _single(args, runner) -> int:
    ctx, rep = build_context(args.bundle, args.order)
    reports = [rep]
    if ctx is not None:
        reports.append(runner(ctx))
    ok = all(r.ok for r in reports)
    bundle = {"schema": SCHEMA_VERSION, "geometry": args.bundle, "box": str(ctx.box) if ctx else None,
              "status": "pass" if ok else "fail", "reports": [r.to_json() for r in sorted(reports, key=lambda r: r.check)]}
    _emit(bundle, args.format, None)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_check_toric(args) -> int:
    return _single(args, run_toric)


def cmd_check_qhsp(args) -> int:
    return _single(args, run_qhsp)


def cmd_check_dmodule(args) -> int:
    if args.n < 0 or args.order < 0:
        raise InputError("--n and --order must be nonnegative")
    if args.order + 1 > coeff_cap():
        raise InputError(f"order {args.order} exceeds the coefficient cap (GK_COEFF_CAP)")
    s = equivariant_i(args.n, args.order, args.lambda_degree)
    rep = check_annihilation(args.n, args.order, series=s)
    if s.ring.K >= args.n:
        limit = nonequivariant_limit(s)
        J = base_j_projective(args.n)
        for nu in range(args.order + 1):
            got = limit.coefficient((nu,)).map_coefficients(lambda e: J.algebra.element(list(e.coords)), J.algebra)
            if got != J.coefficient((nu,)):
                rep.fail({"nu": nu, "reason": "lambda -> 0 limit differs from J_{P^n}"})
    bundle = {"schema": SCHEMA_VERSION, "geometry": f"P{args.n}", "box": rep.box, "status": rep.status,
              "reports": [rep.to_json()]}
    _emit(bundle, args.format, None)
    return EXIT_PASS if rep.ok else EXIT_FAIL


def cmd_validate(args) -> int:
    base, rep = load_geometry(args.geometry)
    if base is not None:
        try:
            b = build_bundle(base)
        except GeometryError as exc:
            rep.fail({"algebra": "bundle", "reason": str(exc)})
        else:
            validate_bundle(b, rep)
            rep.data["canonical_class"] = canonical_class(b).to_json()
            rep.data["pairings"] = [list(r) for r in base.grading.v_pairings]
    bundle = {"schema": SCHEMA_VERSION, "geometry": args.geometry, "box": None,
              "status": rep.status, "reports": [rep.to_json()]}
    _emit(bundle, args.format, None)
    return EXIT_PASS if rep.ok else EXIT_FAIL


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gk", description="Exact checks on twisted hypergeometric series of projective bundles.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a job file")
    r.add_argument("jobfile")
    r.add_argument("--output", help="override output.path")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("expand-i", help="print the coefficients of I over a box")
    e.add_argument("--geometry", required=True, help="builtin name or geometry JSON file")
    e.add_argument("--order", required=True, help="box, e.g. 3 or 3,3")
    e.set_defaults(func=cmd_expand)

    d = sub.add_parser("check-dmodule", help="annihilation of the equivariant series of P^n")
    d.add_argument("--n", type=int, required=True)
    d.add_argument("--order", type=int, required=True)
    d.add_argument("--lambda-degree", type=int, default=None)
    d.add_argument("--format", choices=("json", "text"), default="json")
    d.set_defaults(func=cmd_check_dmodule)

    v = sub.add_parser("validate", help="validate a geometry file or builtin")
    v.add_argument("geometry")
    v.add_argument("--format", choices=("json", "text"), default="json")
    v.set_defaults(func=cmd_validate)

    for name, func in (("check-toric", cmd_check_toric), ("check-qhsp", cmd_check_qhsp)):
        c = sub.add_parser(name)
        c.add_argument("--bundle", required=True, help="builtin name or geometry JSON file")
        c.add_argument("--order", required=True)
        c.add_argument("--format", choices=("json", "text"), default="json")
        c.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"gk: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
