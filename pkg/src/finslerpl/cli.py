"""Command-line surface: validation, distances, shortening, scans and reports.

Exit codes separate outcomes from failures: 0 means the computation succeeded
and the verdict (if any) is positive; 1 means the computation succeeded but
the verdict is negative (a non-saddle cone, an ambiguity found, a
non-convergent run) -- the JSON report still describes it; 2 means the input
could not be processed at all.

All JSON is written with sorted keys and full float precision, so identical
inputs, seed and configuration produce byte-identical output regardless of
the parallelism degree.  Curve data goes to CSV (header row, UTF-8, LF);
report directories also receive matplotlib renderings of the same curves.
"""

from __future__ import annotations

import json
import os
import sys

import click
import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .complex import Complex, Point  # noqa: E402
from .config import RunConfig  # noqa: E402
from .errors import FinslerError, InputError, NonConvergenceError  # noqa: E402
from .gallery import (  # noqa: E402
    BUILDERS, geodesic_fan, measure_asymptotics, measure_convexity_failure,
)
from .oracle import Region, build_graph, oracle_distance, uniqueness_scan  # noqa: E402
from .paths import VertexPath, local_distance  # noqa: E402
from .saddle import SaddleConeSurface, is_saddle_cone  # noqa: E402
from .shortening import shorten_to_geodesic  # noqa: E402

SCHEMA = "finsler-pl/1"


def _dump(obj: dict, out: str | None, name: str) -> None:
    """Write a JSON document to out/name (or stdout when no directory given)."""
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _write_text(text: str, out: str, name: str) -> None:
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, name), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _parse_point(spec: str) -> Point:
    try:
        face, coords = spec.split(":")
        x = [float(v) for v in coords.split(",")]
        return Point.of(int(face), x)
    except (ValueError, IndexError) as e:
        raise InputError(f"point must look like FACE:x0,x1 -- got {spec!r}") from e


def _load_complex(path: str) -> Complex:
    try:
        return Complex.load(path)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as e:
        raise InputError(f"cannot load complex from {path}: {e}") from e


def _region(cx: Complex, box: tuple[float, ...] | None) -> Region:
    if box:
        k = len(box) // 2
        return Region.box(cx, box[:k], box[k:])
    return Region.from_vertices(cx, pad=0.5)


def _run_config(seed: int | None, parallelism: int | None) -> RunConfig:
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if parallelism is not None:
        overrides["parallelism"] = parallelism
    return RunConfig.from_env(**overrides)


def _fail(e: Exception) -> None:
    click.echo(f"error: {e}", err=True)
    sys.exit(2)


@click.group()
def main() -> None:
    """Polyhedral Finsler spaces: geodesics, scans and counterexample reports."""


@main.command()
@click.option("--complex", "complex_path", required=True, type=click.Path())
@click.option("--out", type=click.Path(), default=None, help="Report directory.")
def validate(complex_path: str, out: str | None) -> None:
    """Validate a complex: gluing bijections, isometry, norm conditioning."""
    try:
        cx = _load_complex(complex_path)
        report = cx.validate()
    except FinslerError as e:
        _fail(e)
    _dump({"schema": SCHEMA, "kind": "validation", **report.to_json()},
          out, "validation.json")
    sys.exit(0 if report.valid else 1)


@main.command()
@click.option("--complex", "complex_path", required=True, type=click.Path())
@click.option("--from", "src", required=True, help="Point as FACE:x0,x1.")
@click.option("--to", "dst", required=True, help="Point as FACE:x0,x1.")
@click.option("--check-oracle", is_flag=True, default=False)
@click.option("--h", type=float, default=0.01, show_default=True)
@click.option("--region", type=float, nargs=4, default=None,
              help="Oracle window: lo0 lo1 hi0 hi1 (chart coordinates).")
@click.option("--out", type=click.Path(), default=None)
@click.option("--figures/--no-figures", default=True)
def distance(complex_path, src, dst, check_oracle, h, region, out, figures):
    """Shortest-path distance between two points (optionally oracle-checked)."""
    try:
        cx = _load_complex(complex_path)
        a, b = _parse_point(src), _parse_point(dst)
        d, path = local_distance(cx, a, b)
        doc = {"schema": SCHEMA, "kind": "distance", "from": src, "to": dst,
               "distance": d, "path": path.to_json()}
        verdict_ok = True
        if check_oracle:
            graph = build_graph(cx, _region(cx, region), h)
            upper = oracle_distance(graph, a, b)
            gap = upper - d
            doc["oracle"] = {"h": h, "distance": upper, "gap": gap,
                             "nodes": len(graph.nodes)}
            verdict_ok = gap >= -1e-9 and upper - d <= max(0.01 * max(d, 1e-12), 5 * h)
            doc["oracle"]["agrees"] = verdict_ok
    except FinslerError as e:
        _fail(e)
    _dump(doc, out, "distance.json")
    if out is not None:
        _write_text(path.to_csv(), out, "path.csv")
        if figures:
            _plot_path(path, os.path.join(out, "path.png"))
    sys.exit(0 if verdict_ok else 1)


@main.command()
@click.option("--complex", "complex_path", required=True, type=click.Path())
@click.option("--path", "path_file", required=True, type=click.Path(),
              help="Broken line as JSON (VertexPath format).")
@click.option("--tol", type=float, default=1e-9, show_default=True)
@click.option("--max-iter", type=int, default=100000, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@click.option("--figures/--no-figures", default=True)
def shorten(complex_path, path_file, tol, max_iter, out, figures):
    """Drive a broken line to a geodesic by midpoint shortening."""
    try:
        cx = _load_complex(complex_path)
        with open(path_file) as fh:
            start = VertexPath.from_json(cx, json.load(fh))
    except (FinslerError, OSError, ValueError, KeyError) as e:
        _fail(e)
    code = 0
    try:
        result = shorten_to_geodesic(cx, start, tol=tol, max_iter=max_iter)
        doc = {"schema": SCHEMA, "kind": "shortening", "converged": True,
               **result.to_json()}
        final = result.path
    except NonConvergenceError as e:
        doc = {"schema": SCHEMA, "kind": "shortening", "converged": False,
               "displacement_tail": list(e.trajectory_tail)}
        final = start
        code = 1
    except FinslerError as e:
        _fail(e)
    _dump(doc, out, "shortening.json")
    if out is not None:
        _write_text(final.to_csv(), out, "geodesic.csv")
        if figures:
            _plot_path(final, os.path.join(out, "geodesic.png"))
    sys.exit(code)


@main.command()
@click.option("--complex", "complex_path", required=True, type=click.Path())
@click.option("--radius", type=float, required=True)
@click.option("--pairs", type=int, required=True)
@click.option("--seed", type=int, default=None)
@click.option("--parallelism", type=int, default=None)
@click.option("--region", type=float, nargs=4, default=None)
@click.option("--out", type=click.Path(), default=None)
def scan(complex_path, radius, pairs, seed, parallelism, region, out):
    """Sample point pairs and flag any with non-unique shortest paths."""
    run = _run_config(seed, parallelism)
    try:
        cx = _load_complex(complex_path)
        report = uniqueness_scan(cx, _region(cx, region), radius, pairs,
                                 seed=run.seed, parallelism=run.parallelism)
    except FinslerError as e:
        _fail(e)
    _dump(report.to_json(), out, "scan.json")
    sys.exit(1 if report.n_ambiguous > 0 else 0)


@main.command()
@click.option("--complex", "complex_path", required=True, type=click.Path())
@click.option("--from", "src", required=True)
@click.option("--to", "dst", required=True)
@click.option("--h", type=float, default=0.01, show_default=True)
@click.option("--region", type=float, nargs=4, default=None)
@click.option("--parallelism", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
def oracle(complex_path, src, dst, h, region, parallelism, out):
    """Brute-force upper-bound distance on a lattice graph."""
    run = _run_config(None, parallelism)
    try:
        cx = _load_complex(complex_path)
        a, b = _parse_point(src), _parse_point(dst)
        graph = build_graph(cx, _region(cx, region), h,
                            parallelism=run.parallelism)
        d = oracle_distance(graph, a, b)
    except FinslerError as e:
        _fail(e)
    _dump({"schema": SCHEMA, "kind": "oracle", "h": h, "distance": d,
           "nodes": len(graph.nodes), "from": src, "to": dst},
          out, "oracle.json")
    sys.exit(0)


@main.command()
@click.option("--surface", "surface_path", required=True, type=click.Path())
@click.option("--out", type=click.Path(), default=None)
def saddle(surface_path, out):
    """Certify a cone surface as saddle (or produce a separating functional)."""
    try:
        with open(surface_path) as fh:
            surf = SaddleConeSurface.from_json(json.load(fh))
        cert = is_saddle_cone(surf)
    except (FinslerError, OSError, ValueError, KeyError) as e:
        _fail(e)
    _dump({"schema": SCHEMA, "kind": "saddle", **cert.to_json()},
          out, "saddle.json")
    sys.exit(0 if cert.saddle else 1)


def _coerce(value: str):
    try:
        f = float(value)
        return int(f) if f == int(f) and "." not in value and "e" not in value else f
    except ValueError:
        return value


@main.command()
@click.argument("name")
@click.option("--param", "params", multiple=True, help="KEY=VALUE builder arguments.")
@click.option("--out", type=click.Path(), required=True)
@click.option("--seed", type=int, default=None)
@click.option("--parallelism", type=int, default=None)
@click.option("--figures/--no-figures", default=True)
def gallery(name, params, out, seed, parallelism, figures):
    """Build a named example space and run its standard measurement."""
    run = _run_config(seed, parallelism)
    if name not in BUILDERS:
        _fail(InputError(f"unknown gallery instance {name!r}; "
                         f"choose from {sorted(BUILDERS)}"))
    kwargs = {}
    for p in params:
        if "=" not in p:
            _fail(InputError(f"--param must be KEY=VALUE, got {p!r}"))
        k, v = p.split("=", 1)
        kwargs[k] = _coerce(v)
    try:
        instance = BUILDERS[name](**kwargs)
    except (FinslerError, TypeError) as e:
        _fail(e)
    _dump(instance.to_json(), out, "instance.json")
    _dump(instance.complex.to_json(), out, "complex.json")

    try:
        if name == "half-planes":
            rep = measure_convexity_failure(instance, seed=run.seed, run=run)
            _dump(rep.to_json(), out, "convexity.json")
            _write_text(rep.curve_csv(), out, "convexity_curves.csv")
            if figures:
                _plot_convexity(rep, os.path.join(out, "convexity.png"))
        elif name == "belt":
            rep = measure_asymptotics(instance, run=run)
            _dump(rep.to_json(), out, "asymptotics.json")
            _write_text(rep.curve_csv(), out, "deviations.csv")
            if figures:
                _plot_asymptotics(rep, os.path.join(out, "deviations.png"))
        elif name == "russian-flag":
            rep = geodesic_fan(instance, run=run)
            _dump(rep.to_json(), out, "fan.json")
            _write_text(rep.curve_csv(), out, "fan.csv")
            if figures:
                _plot_fan(rep, os.path.join(out, "fan.png"))
    except FinslerError as e:
        _fail(e)
    sys.exit(0)


@main.command()
@click.option("--complex", "complex_path", required=True, type=click.Path())
@click.option("--out", type=click.Path(), required=True)
@click.option("--figures/--no-figures", default=True)
def export(complex_path, out, figures):
    """Round-trip a complex to the report directory with a chart rendering."""
    try:
        cx = _load_complex(complex_path)
    except FinslerError as e:
        _fail(e)
    _dump(cx.to_json(), out, "complex.json")
    rows = ["face,vertex,x0,x1"]
    for fid in sorted(cx.faces):
        verts = cx.faces[fid].vertices
        if verts is None:
            continue
        for i, v in enumerate(np.asarray(verts)):
            rows.append(f"{fid},{i},{v[0]!r},{v[1]!r}")
    _write_text("\n".join(rows) + "\n", out, "faces.csv")
    if figures:
        _plot_complex(cx, os.path.join(out, "complex.png"))
    sys.exit(0)


# ---------------------------------------------------------------------------
# figures


def _plot_complex(cx: Complex, path: str, overlay: VertexPath | None = None):
    fig, ax = plt.subplots(figsize=(6, 6))
    for fid in sorted(cx.faces):
        face = cx.faces[fid]
        if face.vertices is None:
            continue
        verts = np.asarray(face.vertices)
        ax.fill(verts[:, 0], verts[:, 1], alpha=0.25)
        c = verts.mean(axis=0)
        ax.annotate(str(fid), c, ha="center", va="center", fontsize=8)
    if overlay is not None and overlay.points[0].x.shape[0] == 2:
        xs = np.array([p.x for p in overlay.points])
        ax.plot(xs[:, 0], xs[:, 1], "k.-", lw=1.5)
    ax.set_aspect("equal")
    ax.set_title("faces in chart coordinates")
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _plot_path(path_obj: VertexPath, path: str):
    fig, ax = plt.subplots(figsize=(6, 6))
    xs = np.array([p.x for p in path_obj.points])
    if xs.shape[1] == 2:
        ax.plot(xs[:, 0], xs[:, 1], "o-")
        for p in path_obj.points:
            ax.annotate(str(p.face), p.x, fontsize=7,
                        textcoords="offset points", xytext=(4, 4))
        ax.set_aspect("equal")
    ax.set_title(f"broken line, length {path_obj.length():.6g}")
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _plot_convexity(rep, path: str):
    fig, ax = plt.subplots(figsize=(7, 5))
    for c in rep.curves:
        ax.plot(c["t"], c["distance"], ".-", label=f"x0={c['x0']:g}")
    ax.set_xlabel("t (position on the vertical line x=0)")
    ax.set_ylabel("distance from (x0, 0)")
    ax.legend()
    ax.set_title("distance restricted to the vertical line: kink at t=0")
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _plot_asymptotics(rep, path: str):
    fig, ax = plt.subplots(figsize=(7, 5))
    for eps, devs in zip(rep.offsets, rep.deviations):
        if max(devs) <= 0:
            continue
        ax.semilogy(range(len(devs)), devs, "o-", label=f"offset {eps:g}")
    ax.set_xlabel("period")
    ax.set_ylabel("horizontal deviation from x=0")
    if ax.lines:
        ax.legend()
    ax.set_title(f"belt contraction, factor {rep.factor:g}")
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _plot_fan(rep, path: str):
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.plot(rep.offsets, rep.lengths, "o-")
    ax.axvline(-rep.half_width, ls="--", c="gray")
    ax.axvline(rep.half_width, ls="--", c="gray")
    ax.set_xlabel("horizontal offset of the vertical middle segment")
    ax.set_ylabel("length of the broken geodesic")
    ax.set_title("geodesic fan: non-constant length across the family")
    fig.savefig(path, dpi=120)
    plt.close(fig)


if __name__ == "__main__":
    main()
