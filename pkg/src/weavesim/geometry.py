"""Analytic plain-weave unit-cell geometry.

The unit cell spans x,z in [0, 2a] and y in [-t, t], with a = w*(1+g).
Two warp tows run along z (centered at x = a/2 and 3a/2) and two weft tows
run along x (centered at z = a/2 and 3a/2). Parallel tows are phase shifted
by a; crossing tows therefore interleave without interpenetration (warp
occupies y in [0, t] where weft occupies y in [-t, 0] and vice versa).

A tow is the set of points with |y - path(run)| <= h(cross), where h is the
sinusoid/plateau half-thickness profile and path is the piecewise sinusoidal
centerline with period 2a.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

__all__ = [
    "WeaveParams",
    "UnitCellBox",
    "Phase",
    "half_thickness_profile",
    "centerline_path",
    "centerline_slope",
    "tow_surface",
    "phase_at_point",
    "classify_points",
    "fiber_tangent_at_point",
    "waviness",
    "cross_section_area",
    "analytic_fiber_volume_fraction",
    "weave_volume_fraction",
    "v_max_area_density",
    "tow_mesh",
    "mesh_area",
    "mesh_volume",
    "export_stl",
]


@dataclass(frozen=True)
class WeaveParams:
    """Geometric parameters of the plain weave.

    w: tow width [cm]; t: tow thickness [cm]; u: undulation fraction of w;
    g: gap fraction of w; v_f_w: filament packing ratio inside a yarn.
    """

    w: float
    t: float
    u: float
    g: float
    v_f_w: float = 0.7

    def __post_init__(self):
        if not (self.w > 0 and self.t > 0):
            raise ValueError(f"tow dimensions must be positive: w={self.w}, t={self.t}")
        if not (0 < self.u <= 1):
            raise ValueError(f"undulation must be in (0, 1]: u={self.u}")
        if self.g < 0:
            raise ValueError(f"gap must be non-negative: g={self.g}")
        if not (0 < self.v_f_w < 1):
            raise ValueError(f"fiber packing must be in (0, 1): v_f_w={self.v_f_w}")

    @property
    def a(self) -> float:
        """Half cell width, a = w*(1+g)."""
        return self.w * (1.0 + self.g)

    @property
    def lu(self) -> float:
        """Undulation length, L_u = u*w."""
        return self.u * self.w


@dataclass(frozen=True)
class UnitCellBox:
    lx: float
    ly: float
    lz: float

    def __post_init__(self):
        if min(self.lx, self.ly, self.lz) <= 0:
            raise ValueError("box dimensions must be positive")
        if self.lx != self.lz:
            raise ValueError("in-plane dimensions must match (Lx == Lz)")

    @classmethod
    def from_params(cls, p: WeaveParams) -> "UnitCellBox":
        return cls(lx=2.0 * p.a, ly=2.0 * p.t, lz=2.0 * p.a)

    @property
    def volume(self) -> float:
        return self.lx * self.ly * self.lz


class Phase(IntEnum):
    MATRIX = 0
    WARP = 1
    WEFT = 2


def half_thickness_profile(x, p: WeaveParams):
    """Half thickness h(x) of the tow cross-section for x in [0, w].

    (t/2)*sin(pi*x/L_u) on the leading taper, t/2 on the plateau, and the
    mirrored sinusoid on the trailing taper; h(0) = h(w) = 0.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > p.w):
        raise ValueError("cross-section coordinate outside [0, w]")
    lu = p.lu
    half_t = 0.5 * p.t
    lead = half_t * np.sin(np.pi * np.minimum(x, 0.5 * lu) / lu)
    trail = -half_t * np.sin(np.pi * (np.maximum(x, p.w - 0.5 * lu) - p.w) / lu)
    out = np.where(x <= 0.5 * lu, lead, np.where(x <= p.w - 0.5 * lu, half_t, trail))
    return out if out.ndim else float(out)


def centerline_path(z, p: WeaveParams):
    """Centerline elevation of a tow at run coordinate z; periodic with period 2a.

    Rises to +t/2, plateaus, descends through zero at z = a to -t/2, and
    closes back to zero at z = 2a.
    """
    a, lu, half_t = p.a, p.lu, 0.5 * p.t
    z = np.asarray(z, dtype=float) % (2.0 * a)
    conds = [
        z <= 0.5 * lu,
        z <= a - 0.5 * lu,
        z <= a + 0.5 * lu,
        z <= 2.0 * a - 0.5 * lu,
    ]
    vals = [
        half_t * np.sin(np.pi * z / lu),
        np.full_like(z, half_t),
        -half_t * np.sin(np.pi * (z - a) / lu),
        np.full_like(z, -half_t),
        half_t * np.sin(np.pi * (z - 2.0 * a) / lu),
    ]
    out = np.select(conds, vals[:-1], default=vals[-1])
    return out if out.ndim else float(out)


def centerline_slope(z, p: WeaveParams):
    """Analytic derivative d(path)/dz of centerline_path."""
    a, lu = p.a, p.lu
    amp = 0.5 * p.t * np.pi / lu
    z = np.asarray(z, dtype=float) % (2.0 * a)
    conds = [
        z <= 0.5 * lu,
        z <= a - 0.5 * lu,
        z <= a + 0.5 * lu,
        z <= 2.0 * a - 0.5 * lu,
    ]
    vals = [
        amp * np.cos(np.pi * z / lu),
        np.zeros_like(z),
        -amp * np.cos(np.pi * (z - a) / lu),
        np.zeros_like(z),
        amp * np.cos(np.pi * (z - 2.0 * a) / lu),
    ]
    out = np.select(conds, vals[:-1], default=vals[-1])
    return out if out.ndim else float(out)


def tow_surface(x, z, p: WeaveParams):
    """Upper and lower tow surfaces y = path(z) +/- h(x)."""
    h = half_thickness_profile(x, p)
    yc = centerline_path(z, p)
    return yc + h, yc - h


# Tow layout: (family, center of the cross axis, path phase). Warp tows run
# along z with cross axis x; weft tows run along x with cross axis z. The
# phases realize the checkerboard: warp 0 peaks where weft 0 dips.
def _tow_table(p: WeaveParams):
    a = p.a
    return (
        (Phase.WARP, 0, 0.5 * a, 0.0),
        (Phase.WARP, 1, 1.5 * a, a),
        (Phase.WEFT, 0, 0.5 * a, a),
        (Phase.WEFT, 1, 1.5 * a, 0.0),
    )


def classify_points(x, y, z, p: WeaveParams):
    """Vectorized phase classification with fiber tangents.

    x, z are wrapped periodically into [0, 2a); y must lie in [-t, t].
    Returns (phase, tangent) where phase is an int array of Phase values and
    tangent an (..., 3) array of unit vectors (zero rows for matrix points).
    Points exactly on a tow surface classify as tow; warp wins any warp/weft
    tie (a measure-zero set).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(y) > p.t * (1.0 + 1e-12)):
        raise ValueError("point outside unit cell in y")
    span = 2.0 * p.a
    x = x % span
    z = z % span

    phase = np.zeros(np.broadcast(x, y, z).shape, dtype=np.int8)
    tangent = np.zeros(phase.shape + (3,), dtype=float)

    for family, _, center, phase_shift in _tow_table(p):
        cross = x if family == Phase.WARP else z
        run = z if family == Phase.WARP else x
        local = cross - (center - 0.5 * p.w)
        inside_strip = (local >= 0.0) & (local <= p.w)
        if not np.any(inside_strip):
            continue
        h = np.zeros_like(phase, dtype=float)
        h[inside_strip] = half_thickness_profile(local[inside_strip], p)
        yc = centerline_path(run + phase_shift, p)
        member = inside_strip & (np.abs(y - yc) <= h) & (phase == Phase.MATRIX)
        if not np.any(member):
            continue
        phase[member] = family
        slope = centerline_slope(run[member] + phase_shift, p)
        norm = np.sqrt(1.0 + slope**2)
        if family == Phase.WARP:
            tangent[member, 1] = slope / norm
            tangent[member, 2] = 1.0 / norm
        else:
            tangent[member, 0] = 1.0 / norm
            tangent[member, 1] = slope / norm
    return phase, tangent


def phase_at_point(pt, p: WeaveParams) -> Phase:
    """Classify a single 3-vector point as WARP, WEFT, or MATRIX."""
    pt = np.asarray(pt, dtype=float)
    phase, _ = classify_points(pt[0], pt[1], pt[2], p)
    return Phase(int(phase))


def fiber_tangent_at_point(pt, p: WeaveParams) -> np.ndarray:
    """Unit fiber tangent at a tow point; raises if the point is matrix."""
    pt = np.asarray(pt, dtype=float)
    phase, tangent = classify_points(pt[0], pt[1], pt[2], p)
    if int(phase) == Phase.MATRIX:
        raise ValueError("fiber tangent requested at a matrix point")
    return np.asarray(tangent, dtype=float).reshape(3)


def waviness(p: WeaveParams) -> float:
    """Average slope of the undulating yarn segment, 2t/(w*u)."""
    return 2.0 * p.t / (p.w * p.u)


def cross_section_area(p: WeaveParams) -> float:
    """Tow cross-section area A_w = w*t*(1 - u*(1 - 2/pi))."""
    return p.w * p.t * (1.0 - p.u * (1.0 - 2.0 / np.pi))


def analytic_fiber_volume_fraction(p: WeaveParams) -> float:
    """Unit-cell fiber volume fraction v_f = v_f_w*(1 - u*(1 - 2/pi))/(1+g)."""
    return p.v_f_w * (1.0 - p.u * (1.0 - 2.0 / np.pi)) / (1.0 + p.g)


def weave_volume_fraction(p: WeaveParams) -> float:
    """Volume fraction of the unit cell occupied by tows (fibers + intra-yarn matrix)."""
    return (1.0 - p.u * (1.0 - 2.0 / np.pi)) / (1.0 + p.g)


def v_max_area_density(p: WeaveParams) -> float:
    """Area density of the yarn cross-section in its bounding rectangle, A_w/(w*t)."""
    return 1.0 - p.u * (1.0 - 2.0 / np.pi)


# ---------------------------------------------------------------------------
# Tessellation and STL export
# ---------------------------------------------------------------------------

def tow_mesh(p: WeaveParams, family: Phase, index: int, resolution: int):
    """Closed triangle mesh (vertices, faces) of one tow, outward oriented.

    The surface is swept on a (run x cross) grid: upper and lower sheets are
    welded along the cross edges where h -> 0, and the two run-end lens
    cross-sections are closed with triangle fans.
    """
    if resolution < 8:
        raise ValueError("tessellation resolution must be >= 8")
    table = {(f, i): (c, ph) for f, i, c, ph in _tow_table(p)}
    center, phase_shift = table[(Phase(family), index)]
    nr = nc = int(resolution)
    run = np.linspace(0.0, 2.0 * p.a, nr + 1)
    cross = np.linspace(0.0, p.w, nc + 1)
    h = half_thickness_profile(cross, p)
    yc = centerline_path(run + phase_shift, p)

    # vertex grid: id 0..(nr+1)*(nc+1)-1 upper sheet, interior lower columns after
    n_up = (nr + 1) * (nc + 1)
    upper_id = np.arange(n_up).reshape(nr + 1, nc + 1)
    lower_id = np.empty_like(upper_id)
    lower_id[:, 0] = upper_id[:, 0]
    lower_id[:, nc] = upper_id[:, nc]
    inner = np.arange((nr + 1) * (nc - 1)).reshape(nr + 1, nc - 1) + n_up
    lower_id[:, 1:nc] = inner

    n_vert = n_up + (nr + 1) * (nc - 1) + 2
    verts = np.empty((n_vert, 3))
    rr, cc = np.meshgrid(run, cross, indexing="ij")
    y_up = yc[:, None] + h[None, :]
    y_lo = yc[:, None] - h[None, :]
    if family == Phase.WARP:
        xs_up = center - 0.5 * p.w + cc
        zs_up = rr
    else:
        xs_up = rr
        zs_up = center - 0.5 * p.w + cc
    verts[upper_id.ravel()] = np.stack([xs_up.ravel(), y_up.ravel(), zs_up.ravel()], axis=1)
    verts[inner.ravel()] = np.stack(
        [xs_up[:, 1:nc].ravel(), y_lo[:, 1:nc].ravel(), zs_up[:, 1:nc].ravel()], axis=1
    )
    cap0 = n_vert - 2
    cap1 = n_vert - 1
    mid = center
    if family == Phase.WARP:
        verts[cap0] = (mid, yc[0], 0.0)
        verts[cap1] = (mid, yc[nr], 2.0 * p.a)
    else:
        verts[cap0] = (0.0, yc[0], mid)
        verts[cap1] = (2.0 * p.a, yc[nr], mid)

    faces = []

    def quads(ids, flip):
        q00 = ids[:-1, :-1].ravel()
        q10 = ids[1:, :-1].ravel()
        q11 = ids[1:, 1:].ravel()
        q01 = ids[:-1, 1:].ravel()
        if flip:
            t1 = np.stack([q00, q11, q10], axis=1)
            t2 = np.stack([q00, q01, q11], axis=1)
        else:
            t1 = np.stack([q00, q10, q11], axis=1)
            t2 = np.stack([q00, q11, q01], axis=1)
        faces.append(t1)
        faces.append(t2)

    # orientation chosen so that normals point outward (+y for the upper sheet)
    up_flip = family == Phase.WEFT
    quads(upper_id, flip=up_flip)
    quads(lower_id, flip=not up_flip)

    # end caps: boundary loop = upper row (cross 0..w) + lower row (w..0)
    loop_lo = [upper_id[0, j] for j in range(nc + 1)]
    loop_lo += [lower_id[0, j] for j in range(nc - 1, 0, -1)]
    loop_hi = [upper_id[nr, j] for j in range(nc + 1)]
    loop_hi += [lower_id[nr, j] for j in range(nc - 1, 0, -1)]

    def fan(center_id, loop, flip):
        loop = np.asarray(loop)
        nxt = np.roll(loop, -1)
        if flip:
            tri = np.stack([np.full_like(loop, center_id), nxt, loop], axis=1)
        else:
            tri = np.stack([np.full_like(loop, center_id), loop, nxt], axis=1)
        faces.append(tri)

    fan(cap0, loop_lo, flip=up_flip)
    fan(cap1, loop_hi, flip=not up_flip)

    return verts, np.concatenate(faces, axis=0)


def _face_cross(verts, faces):
    e1 = verts[faces[:, 1]] - verts[faces[:, 0]]
    e2 = verts[faces[:, 2]] - verts[faces[:, 0]]
    return np.cross(e1, e2)


def mesh_area(verts, faces) -> float:
    return float(0.5 * np.linalg.norm(_face_cross(verts, faces), axis=1).sum())


def mesh_volume(verts, faces) -> float:
    """Signed volume via the divergence theorem (positive when outward oriented)."""
    v0 = verts[faces[:, 0]]
    return float(np.einsum("ij,ij->i", v0, _face_cross(verts, faces)).sum() / 6.0)


def export_stl(p: WeaveParams, resolution: int, out_dir) -> list[Path]:
    """Write one binary STL per tow into out_dir; returns the file paths.

    Raises if any facet is degenerate or the mesh is not outward oriented.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for family, index, _, _ in _tow_table(p):
        verts, faces = tow_mesh(p, family, index, resolution)
        cross = _face_cross(verts, faces)
        areas = 0.5 * np.linalg.norm(cross, axis=1)
        if np.any(areas <= 0.0):
            raise RuntimeError(f"{int((areas <= 0).sum())} degenerate facets in tow mesh")
        if mesh_volume(verts, faces) <= 0.0:
            raise RuntimeError("tow mesh is not outward oriented")
        normals = cross / (2.0 * areas[:, None])
        name = "warp" if family == Phase.WARP else "weft"
        path = out_dir / f"tow_{name}_{index}.stl"
        _write_binary_stl(path, verts, faces, normals)
        paths.append(path)
    return paths


def _write_binary_stl(path, verts, faces, normals):
    rec = np.zeros(
        len(faces),
        dtype=[("normal", "<f4", (3,)), ("verts", "<f4", (3, 3)), ("attr", "<u2")],
    )
    rec["normal"] = normals
    rec["verts"] = verts[faces]
    with open(path, "wb") as fh:
        fh.write(b"weavesim tow surface".ljust(80, b" "))
        fh.write(struct.pack("<I", len(faces)))
        fh.write(rec.tobytes())
