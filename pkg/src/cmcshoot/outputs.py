"""CSV, JSON and SVG writers (and readers for round trips)."""

from __future__ import annotations

import csv
import json
import math
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np

from . import dynamics as dyn
from .assembly import GeneratingCurve
from .errors import SingularCoordinateError
from .geometry import Family, FamilyKind, mean_curvature

TRAJECTORY_COLUMNS = ("s", "r", "theta", "alpha", "H_residual")
CURVE_COLUMNS = ("s", "r", "theta", "alpha")


def fmt(x: float) -> str:
    """Full-precision decimal that survives a float round trip."""
    return "%.17g" % x


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def h_residual(params: dyn.Params, state) -> float:
    try:
        return abs(mean_curvature(params.family, state, dyn.rhs_alpha(params, state)) - params.lam)
    except SingularCoordinateError:
        return math.nan


def write_trajectory_csv(path, shot) -> int:
    """Accepted steps of a shot; returns the row count."""
    traj = shot.trajectory
    rows = [(s, *y, h_residual(shot.params, y)) for s, y in zip(traj.s, traj.y)]
    _write_rows(path, TRAJECTORY_COLUMNS, rows)
    return len(rows)


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in row] for row in body]) if body else np.empty((0, len(header)))
    return header, data


def curve_metadata(curve: GeneratingCurve) -> dict:
    return {
        "family": curve.family.kind.value,
        "n": curve.family.n,
        "lambda": curve.lam,
        "closed": curve.closed,
        "length": curve.length,
        "copies": curve.copies,
        "closure_gap": curve.closure_gap,
        "seam_defects": list(curve.seam_defects),
        "seam_gaps": list(curve.seam_gaps),
        "r0_star": curve.r0_star,
        "exit_residuals": dict(sorted(curve.exit_residuals.items())),
    }


def write_curve(csv_path, json_path, curve: GeneratingCurve, certificate) -> None:
    _write_rows(csv_path, CURVE_COLUMNS, zip(curve.s, curve.r, curve.theta, curve.alpha))
    doc = certificate.to_dict()
    doc["curve"] = curve_metadata(curve)
    write_json(json_path, doc)


def read_curve(csv_path, json_path) -> GeneratingCurve:
    """Inverse of :func:`write_curve`."""
    header, data = read_csv(csv_path)
    if tuple(header) != CURVE_COLUMNS:
        raise ValueError(f"unexpected curve columns {header}")
    meta = read_json(json_path)["curve"]
    return GeneratingCurve(
        family=Family(FamilyKind(meta["family"]), meta["n"]),
        lam=meta["lambda"],
        s=data[:, 0],
        r=data[:, 1],
        theta=data[:, 2],
        alpha=data[:, 3],
        closed=meta["closed"],
        length=meta["length"],
        copies=meta["copies"],
        closure_gap=meta["closure_gap"],
        seam_defects=meta["seam_defects"],
        seam_gaps=meta["seam_gaps"],
        r0_star=meta["r0_star"],
        exit_residuals=meta["exit_residuals"],
    )


# -- svg -----------------------------------------------------------------------

SVG_NS = "http://www.w3.org/2000/svg"
_W, _H, _PAD = 480.0, 320.0, 30.0


def _mirror_polylines(family: Family) -> list[list[tuple[float, float]]]:
    """Mirror sets in the (r, theta) chart."""
    lines = [[(0.0, dyn.QUARTER_PI), (family.r_max, dyn.QUARTER_PI)]]
    if family.is_s2n:
        lines.append([(dyn.HALF_PI, 0.0), (dyn.HALF_PI, dyn.HALF_PI)])
    else:
        rs = np.linspace(dyn.QUARTER_PI, dyn.HALF_PI - 1e-3, 200)
        lines.append([(float(r), float(math.acos(min(1.0, 1.0 / math.tan(r))))) for r in rs])
    return lines


def svg_document(family: Family, paths, start: tuple[float, float] | None,
                 title: str = "") -> str:
    """The (r, theta) chart as a rectangle with dashed mirrors and one path per piece."""
    sx = (_W - 2 * _PAD) / family.r_max
    sy = (_H - 2 * _PAD) / dyn.HALF_PI

    def xy(r, th):
        return _PAD + r * sx, _H - _PAD - th * sy

    def d_attr(points):
        parts = []
        for k, (r, th) in enumerate(points):
            x, y = xy(r, th)
            parts.append(f"{'M' if k == 0 else 'L'}{x:.3f},{y:.3f}")
        return " ".join(parts)

    ET.register_namespace("", SVG_NS)
    root = ET.Element(f"{{{SVG_NS}}}svg", width=f"{_W:g}", height=f"{_H:g}",
                      viewBox=f"0 0 {_W:g} {_H:g}")
    if title:
        ET.SubElement(root, f"{{{SVG_NS}}}title").text = title
    x0, y0 = xy(0.0, dyn.HALF_PI)
    ET.SubElement(root, f"{{{SVG_NS}}}rect", x=f"{x0:.3f}", y=f"{y0:.3f}",
                  width=f"{family.r_max * sx:.3f}", height=f"{dyn.HALF_PI * sy:.3f}",
                  fill="none", stroke="black")
    for line in _mirror_polylines(family):
        pts = " ".join("%.3f,%.3f" % xy(r, th) for r, th in line)
        ET.SubElement(root, f"{{{SVG_NS}}}polyline", points=pts, fill="none",
                      stroke="gray", **{"stroke-dasharray": "4 3"})
    for k, piece in enumerate(paths):
        ET.SubElement(root, f"{{{SVG_NS}}}path", d=d_attr(piece), fill="none",
                      stroke="steelblue", id=f"piece-{k}")
    if start is not None:
        cx, cy = xy(*start)
        ET.SubElement(root, f"{{{SVG_NS}}}circle", cx=f"{cx:.3f}", cy=f"{cy:.3f}", r="3",
                      fill="crimson")
    return ET.tostring(root, encoding="unicode") + "\n"


def curve_pieces(curve: GeneratingCurve) -> list[list[tuple[float, float]]]:
    """Split the samples back into the individual arc copies."""
    m = (len(curve) - 1) // curve.copies
    return [list(zip(curve.r[k * m:(k + 1) * m + 1], curve.theta[k * m:(k + 1) * m + 1]))
            for k in range(curve.copies)]


def write_curve_svg(path, curve: GeneratingCurve) -> None:
    start = (curve.r0_star, dyn.QUARTER_PI) if curve.r0_star is not None else None
    title = f"{curve.family} lambda={curve.lam:g}"
    Path(path).write_text(svg_document(curve.family, curve_pieces(curve), start, title))


def write_shot_svg(path, shot) -> None:
    traj = shot.trajectory
    piece = list(zip(traj.y[:, 0], traj.y[:, 1]))
    title = f"{shot.params.family} lambda={shot.params.lam:g} r0={shot.r0:g}"
    Path(path).write_text(svg_document(shot.params.family, [piece],
                                       (shot.r0, dyn.QUARTER_PI), title))
