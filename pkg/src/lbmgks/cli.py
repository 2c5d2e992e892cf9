"""Command-line entry point: ``lbmgks {analyze,simulate,scan,compare,catalog}``.

Exit codes: 0 success, 1 analysis error, 2 ``--expect`` mismatch, 3 config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .asymptotics import (
    CatalogMiss,
    ResonanceError,
    contour_radius,
    reconstruct,
    residue_catalog,
)
from .cauchy import VN_TOL, characteristic_coeffs, stability_verdict, von_neumann_scan
from .gks import AnalysisError, ModeReport, Verdict, VerdictValue, strong_stability_verdict
from .scheme import (
    BC_DESCRIPTIONS,
    SCHEMES,
    BoundarySource,
    BoundarySpec,
    ConfigError,
    Weight,
    SchemeSpec,
    boundary_condition,
    catalog_entries,
    fraction_str,
    load_config,
    make_scheme,
    scheme_to_dict,
    to_fraction,
    with_params,
)
from .simulate import SimConfig, SimulationError, run

REPORT_VERSION = 1
EXIT_OK, EXIT_ANALYSIS, EXIT_EXPECT, EXIT_CONFIG = 0, 1, 2, 3

log = logging.getLogger("lbmgks")


class ExpectationError(Exception):
    pass


# ------------------------------------------------------------ configuration


def parse_overrides(items: Sequence[str] | None) -> dict[str, Fraction | float]:
    out: dict[str, Fraction | float] = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key = key.strip()
        out[key] = float(value) if key in ("lam", "lambda") else to_fraction(value.strip())
    return out


def _looks_like_path(ref: str) -> bool:
    return ref.endswith(".json") or "/" in ref or Path(ref).is_file()


def resolve_scheme(ref: str, overrides: dict) -> tuple[SchemeSpec, BoundarySpec | None]:
    """Catalog id or JSON path; overrides apply after loading."""
    if _looks_like_path(ref):
        spec, bc = load_config(ref)
    else:
        spec, bc = make_scheme(ref), None
    try:
        spec = with_params(spec, **overrides)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return spec, bc


def resolve_bc(ref: str | None, spec: SchemeSpec, embedded: BoundarySpec | None,
               source: BoundarySource | None = None) -> BoundarySpec:
    if ref is None:
        if embedded is None:
            raise ConfigError("no boundary condition given (use --bc)")
        bc = embedded
    elif _looks_like_path(ref):
        bc = _load_bc(ref)
        bc.validate(spec)
    else:
        bc = boundary_condition(ref, spec)
    return bc.with_source(source) if source is not None else bc


def _load_bc(path: str) -> BoundarySpec:
    """Boundary block from either a full scheme config or a bare boundary file."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    b = data.get("boundary", data)
    if not isinstance(b, dict) or "weights" not in b:
        raise ConfigError(f"{path} holds no boundary description")
    try:
        weights = tuple(Weight(int(w["i"]), int(w["l"]), int(w["j"]), int(w["h"]), to_fraction(w["value"]))
                        for w in b["weights"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed boundary weight: {exc}") from exc
    return BoundarySpec(weights, str(b.get("name", "custom")), BoundarySource(b.get("source", "dirac")))


# ------------------------------------------------------------ reports


def _cplx(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _mode_dict(m: ModeReport) -> dict:
    return {
        "z": _cplx(m.z_star),
        "kappa": _cplx(m.kappa_star),
        "boxes": m.boxes,
        "shared_eigenvalue": m.is_shared_eigenvalue,
        "eigenvector_continuous": m.eigvec_continuous,
        "kl": {"kind": m.kl.kind.value, "order": m.kl.order,
               "coefficient": None if m.kl.coefficient is None else _cplx(m.kl.coefficient)},
        "pole_orders": list(m.pole_orders),
        "effective_orders": None if m.effective_orders() is None else list(m.effective_orders()),
        "spatial": m.spatial,
        "temporal": m.temporal,
        "exact_route": m.exact_route,
        "notes": list(m.notes),
    }


def build_report(spec: SchemeSpec, bc: BoundarySpec, verdict: Verdict) -> dict:
    cs = characteristic_coeffs(spec)
    shared = []
    if verdict.shared is not None:
        for c in verdict.shared.couples:
            shared.append({
                "z": _cplx(c.z), "kappa": _cplx(c.kappa), "kind": c.kind.value,
                "z_exact": c.z_exact, "kappa_exact": c.kappa_exact,
                "residual_bulk": c.residual_bulk, "residual_boundary": c.residual_boundary,
                "on_circle": c.on_circle,
            })
    resolvent = None
    if verdict.resolvent is not None:
        r = verdict.resolvent
        resolvent = {"ok": r.ok, "bound": r.bound if math.isfinite(r.bound) else None,
                     "certified": r.certified, "status": "numerically verified, not certified"}
    return {
        "report_version": REPORT_VERSION,
        "scheme": scheme_to_dict(spec, bc),
        "characteristic": {
            "r_bar": cs.r_bar,
            "p_bar": cs.p_bar,
            "d": {str(ell): [fraction_str(c) for c in coeffs] for ell, coeffs in cs.d.items()},
        },
        "shared_eigenvalues": shared,
        "common_factor": None if verdict.shared is None or verdict.shared.common_factor is None
        else str(verdict.shared.common_factor.as_expr()),
        "modes": [_mode_dict(m) for m in verdict.modes],
        "verdict": {
            "value": verdict.value.value,
            "per_component_stable": list(verdict.per_component_stable),
            "driving_modes": [_mode_dict(m) for m in verdict.driving_modes],
            "resolvent_check": resolvent,
            "notes": list(verdict.notes),
        },
    }


def analyze(spec: SchemeSpec, bc: BoundarySpec) -> tuple[Verdict, dict]:
    vn = stability_verdict(spec)
    if not vn.von_neumann:
        raise AnalysisError("the bulk scheme is not von Neumann stable; boundary analysis does not apply")
    verdict = strong_stability_verdict(spec, bc)
    return verdict, build_report(spec, bc, verdict)


def _summary(spec: SchemeSpec, bc: BoundarySpec, verdict: Verdict) -> str:
    lines = [f"scheme {spec.name}  C={fraction_str(spec.courant)}  s={[fraction_str(s) for s in spec.relaxation]}",
             f"boundary {bc.name}",
             f"verdict {verdict.value.value}"]
    for m in verdict.modes:
        z = complex(m.z_star)
        lines.append(f"  mode z={z.real:+.6f}{z.imag:+.6f}i  {m.boxes}  KL {m.kl}  poles {m.pole_orders}")
    for note in verdict.notes:
        lines.append(f"  note: {note}")
    return "\n".join(lines)


def _write(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# ------------------------------------------------------------ commands


def cmd_analyze(args) -> int:
    expected = None
    if args.expect is not None:
        expected = args.expect.strip().upper()
        if expected not in {v.value for v in VerdictValue}:
            raise ConfigError(f"unknown verdict {args.expect!r}; expected one of "
                              + ", ".join(v.value for v in VerdictValue))
    spec, embedded = resolve_scheme(args.scheme, parse_overrides(args.set))
    bc = resolve_bc(args.bc, spec, embedded)
    verdict, report = analyze(spec, bc)
    print(_summary(spec, bc, verdict))
    if args.out:
        _write(json.dumps(report, indent=2, ensure_ascii=False) + "\n", args.out)
    if expected is not None:
        if expected != verdict.value.value:
            print(f"expectation failed: expected {expected}, got {verdict.value.value}", file=sys.stderr)
            return EXIT_EXPECT
    return EXIT_OK


def _source(args, steps: int) -> BoundarySource:
    kind = {"alt": "alternating"}.get(args.source, args.source)
    if kind == "file":
        if not args.source_file:
            raise ConfigError("--source file requires --source-file")
        try:
            values = [float(x) for x in Path(args.source_file).read_text().split()]
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read source samples: {exc}") from exc
        return BoundarySource("sampled", tuple(values))
    return BoundarySource(kind)


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def cmd_simulate(args) -> int:
    spec, embedded = resolve_scheme(args.scheme, parse_overrides(args.set))
    cfg_probe = SimConfig(points=args.points, final_time=args.final_time, steps=args.steps)
    source = _source(args, cfg_probe.n_steps)
    bc = resolve_bc(args.bc, spec, embedded, source)
    cfg = SimConfig(points=args.points, final_time=args.final_time, steps=args.steps, source=source,
                    record_every=args.dump)
    traj = run(spec, bc, cfg)
    header = ["n", "j"] + [f"m_{k + 1}" for k in range(spec.q)]
    rows = []
    for t, snap in zip(traj.times, traj.moments):
        for j, m in enumerate(snap):
            rows.append([int(t), j] + [repr(float(x)) for x in m])
    _write(_csv_text(header, rows), args.out)
    summary = {
        "steps": traj.steps_done,
        "overflow": traj.overflow,
        "dx": traj.dx,
        "dt": traj.dt,
        "linf_max": np.nanmax(traj.linf, axis=0).tolist(),
        "l2_max": np.nanmax(traj.l2, axis=0).tolist(),
        "l2_final": traj.l2[-1].tolist(),
        "warnings": traj.warnings,
    }
    text = json.dumps(summary, indent=2) + "\n"
    if args.summary:
        Path(args.summary).write_text(text)
    elif args.out not in (None, "-"):
        sys.stdout.write(text)
    return EXIT_OK


def parse_axis(text: str) -> tuple[str, list[Fraction]]:
    """``name=start:stop:count`` with rational endpoints, inclusive."""
    name, sep, rng = text.partition("=")
    parts = rng.split(":")
    if not sep or len(parts) != 3:
        raise ConfigError(f"--grid expects name=start:stop:count, got {text!r}")
    start, stop = to_fraction(parts[0]), to_fraction(parts[1])
    try:
        count = int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"bad count in {text!r}") from exc
    if count < 1:
        raise ConfigError("grid count must be positive")
    if count == 1:
        return name.strip(), [start]
    return name.strip(), [start + (stop - start) * k / (count - 1) for k in range(count)]


def _scan_point(task) -> list:
    scheme_ref, base_overrides, names, values, bc_ref, n_theta = task
    overrides = dict(base_overrides)
    overrides.update(dict(zip(names, values)))
    row = [fraction_str(v) for v in values]
    try:
        spec, embedded = resolve_scheme(scheme_ref, overrides)
    except ConfigError as exc:
        return row + ["invalid", str(exc)]
    stable = von_neumann_scan(spec, n_theta).stable
    row.append("stable" if stable else "unstable")
    if bc_ref is not None:
        if not stable:
            row.append("")
        else:
            try:
                row.append(strong_stability_verdict(spec, resolve_bc(bc_ref, spec, embedded)).value.value)
            except (AnalysisError, ConfigError) as exc:
                row.append(f"error: {exc}")
    return row


def scan_grid(scheme_ref: str, axes: list[tuple[str, list[Fraction]]], base: dict, bc_ref: str | None = None,
              workers: int = 1, n_theta: int = 512) -> tuple[list[str], list[list]]:
    names = [a[0] for a in axes]
    grids = np.meshgrid(*[np.arange(len(a[1])) for a in axes], indexing="ij")
    tasks = []
    for idx in zip(*[g.ravel() for g in grids]):
        values = tuple(axes[k][1][i] for k, i in enumerate(idx))
        tasks.append((scheme_ref, base, names, values, bc_ref, n_theta))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_scan_point, tasks, chunksize=8))
    else:
        rows = [_scan_point(t) for t in tasks]
    header = names + ["von_neumann"] + (["verdict"] if bc_ref is not None else [])
    return header, rows


def _theta_scan(spec: SchemeSpec, n_theta: int) -> tuple[list[str], list[list]]:
    res = von_neumann_scan(spec, n_theta)
    rows = [[repr(float(t)), repr(float(r)), "stable" if r <= 1 + VN_TOL else "unstable"]
            for t, r in zip(res.thetas, res.radii)]
    return ["theta", "spectral_radius", "verdict"], rows


def region_map(header: list[str], rows: list[list], n_axes: int) -> dict:
    """JSON-friendly region summary of a grid scan."""
    cols = header[n_axes:]
    return {
        "axes": header[:n_axes],
        "columns": cols,
        "points": [{"at": row[:n_axes], **dict(zip(cols, row[n_axes:]))} for row in rows],
    }


def cmd_scan(args) -> int:
    if args.n_theta < 64:
        raise ConfigError("--n-theta must be at least 64")
    if args.workers < 1:
        raise ConfigError("--workers must be positive")
    base = parse_overrides(args.set)
    spec, _ = resolve_scheme(args.scheme, base)
    if not args.grid:
        header, rows = _theta_scan(spec, args.n_theta)
        _write(_csv_text(header, rows), args.out)
        return EXIT_OK
    axes = [parse_axis(a) for a in args.grid]
    header, rows = scan_grid(args.scheme, axes, base, args.bc, args.workers, args.n_theta)
    _write(_csv_text(header, rows), args.out)
    if args.region:
        Path(args.region).write_text(json.dumps(region_map(header, rows, len(axes)), indent=1) + "\n")
    return EXIT_OK


def cmd_compare(args) -> int:
    overrides = parse_overrides(args.set)
    spec, embedded = resolve_scheme(args.scheme, overrides)
    bc = resolve_bc(args.bc, spec, embedded)
    js = list(range(min(args.depth, args.points - 1) + 1))
    radius = args.radius or contour_radius(spec, bc)
    rec = reconstruct(spec, bc, args.steps, js, radius, args.quadrature)
    traj = run(spec, bc, SimConfig(points=args.points, steps=args.steps))
    predictor = None
    params = {"s2": spec.relaxation[1], "courant": spec.courant}
    try:
        predictor, _ = residue_catalog(spec.name, bc.name, params)
    except CatalogMiss:
        pass
    header = ["n", "j", "component", "sim", "reconstruction", "residue_prediction", "rel_err"]
    rows = []
    worst = 0.0
    for n in range(args.steps + 1):
        snap = traj.moments[n]
        for j in js:
            pred = predictor(n, j) if predictor else None
            for k in range(spec.q):
                s, r = float(snap[j, k]), float(rec[n, j, k])
                rel = abs(s - r) / max(abs(s), 1e-300) if s != 0 else abs(r)
                worst = max(worst, abs(s - r))
                p = "" if pred is None or pred[k] is None else repr(float(pred[k]))
                rows.append([n, j, k + 1, repr(s), repr(r), p, repr(rel)])
    _write(_csv_text(header, rows), args.out)
    if args.out not in (None, "-"):
        print(json.dumps({"radius": radius, "quadrature": args.quadrature, "max_abs_gap": worst}))
    return EXIT_OK


def cmd_catalog(args) -> int:
    if args.action == "list":
        print("schemes:")
        for name, (_, desc) in SCHEMES.items():
            print(f"  {name:10s} {desc}")
        for name, bcs in catalog_entries().items():
            print(f"boundary conditions for {name}:")
            for bc in bcs:
                print(f"  {bc:28s} {BC_DESCRIPTIONS.get(bc, '')}")
        return EXIT_OK
    if not args.scheme:
        raise ConfigError("catalog export needs --scheme")
    spec, embedded = resolve_scheme(args.scheme, parse_overrides(args.set))
    bc = resolve_bc(args.bc, spec, embedded) if (args.bc or embedded) else None
    _write(json.dumps(scheme_to_dict(spec, bc), indent=2) + "\n", args.out)
    return EXIT_OK


# ------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lbmgks", description="Boundary stability of 1D lattice Boltzmann schemes.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, bc=True):
        sp.add_argument("--scheme", required=True, help="catalog id or JSON config path")
        if bc:
            sp.add_argument("--bc", help="catalog boundary id (e.g. extrapolation:2) or JSON path")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="parameter override, p/q allowed")

    a = sub.add_parser("analyze", help="strong-stability verdict and JSON report")
    common(a)
    a.add_argument("--expect", help="expected verdict; exit 2 on mismatch")
    a.add_argument("--out", help="JSON report path ('-' for stdout)")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="half-line simulation, CSV output")
    common(s)
    s.add_argument("--points", type=int, default=100)
    s.add_argument("--final-time", type=float, default=1.0)
    s.add_argument("--steps", type=int)
    s.add_argument("--source", choices=["dirac", "constant", "alt", "file", "zero"], default="dirac")
    s.add_argument("--source-file")
    s.add_argument("--dump", type=int, default=1, metavar="K", help="write every K-th step")
    s.add_argument("--out", help="CSV path (default stdout)")
    s.add_argument("--summary", help="JSON norms summary path")
    s.set_defaults(func=cmd_simulate)

    g = sub.add_parser("scan", help="parameter sweep of von Neumann stability and verdicts")
    common(g)
    g.add_argument("--grid", action="append", default=[], metavar="NAME=START:STOP:COUNT",
                   help="parameter axis; without any, scan theta for the given scheme")
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--n-theta", type=int, default=512)
    g.add_argument("--out")
    g.add_argument("--region", help="JSON region map path (grid scans)")
    g.set_defaults(func=cmd_scan)

    c = sub.add_parser("compare", help="simulator vs contour reconstruction vs residue formula")
    common(c)
    c.add_argument("--points", type=int, default=240)
    c.add_argument("--steps", type=int, default=100)
    c.add_argument("--depth", type=int, default=30)
    c.add_argument("--radius", type=float)
    c.add_argument("--quadrature", type=int, default=2048)
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)

    k = sub.add_parser("catalog", help="list or export built-in schemes and boundary conditions")
    k.add_argument("action", choices=["list", "export"])
    k.add_argument("--scheme")
    k.add_argument("--bc")
    k.add_argument("--set", action="append", metavar="KEY=VALUE")
    k.add_argument("--out")
    k.set_defaults(func=cmd_catalog)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AnalysisError, SimulationError, ResonanceError) as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
