import numpy as np
import pytest
from scipy.integrate import quad

from weavesim import geometry as G
from weavesim.geometry import Phase, UnitCellBox, WeaveParams

P = WeaveParams(w=0.1, t=0.02, u=0.5, g=0.35, v_f_w=0.7)
NOMINAL = WeaveParams(w=0.125, t=0.03, u=0.65, g=0.35, v_f_w=0.7)


class TestParams:
    def test_derived(self):
        assert P.a == pytest.approx(0.1 * 1.35)
        assert P.lu == pytest.approx(0.05)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(w=-0.1, t=0.02, u=0.5, g=0.1),
            dict(w=0.1, t=0.0, u=0.5, g=0.1),
            dict(w=0.1, t=0.02, u=0.0, g=0.1),
            dict(w=0.1, t=0.02, u=1.2, g=0.1),
            dict(w=0.1, t=0.02, u=0.5, g=-0.1),
            dict(w=0.1, t=0.02, u=0.5, g=0.1, v_f_w=1.0),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            WeaveParams(**kwargs)

    def test_box(self):
        box = UnitCellBox.from_params(P)
        assert box.lx == box.lz == pytest.approx(2 * P.a)
        assert box.ly == pytest.approx(2 * P.t)


class TestHalfThickness:
    def test_plateau_midpoint(self):
        assert G.half_thickness_profile(P.w / 2, P) == pytest.approx(P.t / 2)

    def test_edge_taper(self):
        assert G.half_thickness_profile(0.0, P) == 0.0
        assert G.half_thickness_profile(P.w, P) == pytest.approx(0.0, abs=1e-18)

    def test_first_branch_value(self):
        # frozen: 0.01*sin(pi/4)
        got = G.half_thickness_profile(P.lu / 4, P)
        assert got == pytest.approx(0.0070710678118654745, rel=1e-12)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            G.half_thickness_profile(-1e-9, P)
        with pytest.raises(ValueError):
            G.half_thickness_profile(P.w + 1e-9, P)

    def test_nonnegative_bounded_continuous(self):
        x = np.linspace(0, P.w, 20001)
        h = G.half_thickness_profile(x, P)
        assert np.all(h >= 0)
        assert h.max() == pytest.approx(P.t / 2)
        assert np.abs(np.diff(h)).max() < 2 * (P.t / 2) * np.pi / P.lu * (x[1] - x[0])

    def test_full_undulation_limit(self):
        p1 = WeaveParams(w=0.1, t=0.02, u=1.0, g=0.0)
        x = np.linspace(0, 0.1, 101)
        assert G.half_thickness_profile(x, p1) == pytest.approx(0.01 * np.sin(np.pi * x / 0.1))


class TestCenterline:
    def test_peak(self):
        assert G.centerline_path(P.lu / 2, P) == pytest.approx(P.t / 2)

    def test_zero_crossing_at_a(self):
        assert G.centerline_path(P.a, P) == pytest.approx(0.0, abs=1e-15)
        assert G.centerline_slope(P.a, P) == pytest.approx(-(P.t / 2) * np.pi / P.lu)

    def test_periodicity(self):
        z = np.linspace(-3 * P.a, 3 * P.a, 777)
        assert G.centerline_path(z, P) == pytest.approx(G.centerline_path(z + 2 * P.a, P))

    def test_bounds_and_continuity(self):
        z = np.linspace(0, 2 * P.a, 50001)
        f = G.centerline_path(z, P)
        assert f.max() == pytest.approx(P.t / 2)
        assert f.min() == pytest.approx(-P.t / 2)
        dz = z[1] - z[0]
        assert np.abs(np.diff(f)).max() <= (P.t / 2) * (np.pi / P.lu) * dz * 1.01

    def test_branch_junctions_continuous(self):
        eps = 1e-12
        for zj in [P.lu / 2, P.a - P.lu / 2, P.a + P.lu / 2, 2 * P.a - P.lu / 2]:
            lo = G.centerline_path(zj - eps, P)
            hi = G.centerline_path(zj + eps, P)
            assert lo == pytest.approx(hi, abs=1e-9)


class TestTowSurface:
    def test_edge_collapse(self):
        up, lo = G.tow_surface(0.0, 0.123 * P.a, P)
        assert up == pytest.approx(lo)

    def test_peak_plus_plateau(self):
        up, lo = G.tow_surface(P.w / 2, P.lu / 2, P)
        assert up == pytest.approx(P.t)
        assert lo == pytest.approx(0.0, abs=1e-15)

    def test_symmetric_at_zero_crossing(self):
        up, lo = G.tow_surface(P.w / 2, P.a, P)
        assert up == pytest.approx(P.t / 2)
        assert lo == pytest.approx(-P.t / 2)


class TestPhaseClassification:
    def test_matrix_far_from_tows(self):
        # directly over a gap corner: no tow at any height
        x = P.a - 1e-6
        assert G.phase_at_point([x, 0.99 * P.t, x], P) == Phase.MATRIX

    def test_warp_interior(self):
        pt = [P.a / 2, G.centerline_path(0.3 * P.a, P), 0.3 * P.a]
        assert G.phase_at_point(pt, P) == Phase.WARP

    def test_weft_interior(self):
        pt = [0.3 * P.a, G.centerline_path(0.3 * P.a + P.a, P), P.a / 2]
        assert G.phase_at_point(pt, P) == Phase.WEFT

    def test_y_out_of_box(self):
        with pytest.raises(ValueError):
            G.phase_at_point([0.1, 2 * P.t, 0.1], P)

    def test_interiors_disjoint_dense_grid(self):
        # strict-interior membership computed per tow family must never overlap
        n = 120
        xs = np.linspace(0, 2 * P.a, n, endpoint=False) + P.a / n
        ys = np.linspace(-P.t, P.t, 60, endpoint=False) + P.t / 60
        zs = xs.copy()
        X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
        both = 0
        for p in (P, NOMINAL, WeaveParams(w=0.1, t=0.02, u=1.0, g=0.0)):
            in_warp = np.zeros(X.shape, bool)
            in_weft = np.zeros(X.shape, bool)
            for family, _, center, shift in G._tow_table(p):
                cross = X if family == Phase.WARP else Z
                run = Z if family == Phase.WARP else X
                local = cross - (center - p.w / 2)
                strip = (local > 0) & (local < p.w)
                h = np.zeros_like(X)
                h[strip] = G.half_thickness_profile(local[strip], p)
                yc = G.centerline_path(run + shift, p)
                member = strip & (np.abs(Y - yc) < h)
                if family == Phase.WARP:
                    in_warp |= member
                else:
                    in_weft |= member
            both += int((in_warp & in_weft).sum())
        assert both == 0

    def test_monte_carlo_volume_fraction(self):
        # oracle: MC estimate of warp+weft volume vs 4 tows * A_w * 2a
        rng = np.random.default_rng(42)
        n = 1_000_000
        x = rng.uniform(0, 2 * P.a, n)
        y = rng.uniform(-P.t, P.t, n)
        z = rng.uniform(0, 2 * P.a, n)
        phase, _ = G.classify_points(x, y, z, P)
        frac = np.mean(phase != Phase.MATRIX)
        expected = G.weave_volume_fraction(P)
        assert frac == pytest.approx(expected, rel=5e-3)


class TestFiberTangent:
    def test_plateau_axis_aligned(self):
        zpl = P.a / 2  # plateau of warp 0 path
        pt = [P.a / 2, P.t / 2, zpl]
        tan = G.fiber_tangent_at_point(pt, P)
        assert tan == pytest.approx([0, 0, 1])

    def test_inflection_slope(self):
        pt = [P.a / 2, 0.0, P.a]
        tan = G.fiber_tangent_at_point(pt, P)
        slope = -(P.t / 2) * np.pi / P.lu
        expected = np.array([0, slope, 1]) / np.hypot(1, slope)
        assert tan == pytest.approx(expected)

    def test_unit_norm(self):
        rng = np.random.default_rng(3)
        found = 0
        while found < 50:
            pt = [rng.uniform(0, 2 * P.a), rng.uniform(-P.t, P.t), rng.uniform(0, 2 * P.a)]
            if G.phase_at_point(pt, P) != Phase.MATRIX:
                assert np.linalg.norm(G.fiber_tangent_at_point(pt, P)) == pytest.approx(1.0, abs=1e-12)
                found += 1

    def test_matrix_point_raises(self):
        x = P.a - 1e-6
        with pytest.raises(ValueError):
            G.fiber_tangent_at_point([x, 0.99 * P.t, x], P)


class TestScalars:
    def test_waviness(self):
        assert G.waviness(P) == pytest.approx(0.8)
        assert G.waviness(WeaveParams(w=0.2, t=0.01, u=1.0, g=0.0)) == pytest.approx(0.1)
        doubled = WeaveParams(w=P.w, t=2 * P.t, u=P.u, g=P.g)
        assert G.waviness(doubled) == pytest.approx(2 * G.waviness(P))

    def test_cross_section_limits(self):
        tiny_u = WeaveParams(w=0.1, t=0.02, u=1e-9, g=0.0)
        assert G.cross_section_area(tiny_u) == pytest.approx(0.002, rel=1e-8)
        full = WeaveParams(w=0.1, t=0.02, u=1.0, g=0.0)
        assert G.cross_section_area(full) == pytest.approx(0.002 * 2 / np.pi, rel=1e-12)

    def test_cross_section_quadrature_oracle(self):
        for p in (P, NOMINAL):
            val, err = quad(lambda x: 2 * G.half_thickness_profile(x, p), 0, p.w,
                            points=[p.lu / 2, p.w - p.lu / 2], limit=200)
            assert G.cross_section_area(p) == pytest.approx(val, rel=1e-8)

    def test_fiber_volume_fraction(self):
        dense = WeaveParams(w=0.1, t=0.02, u=1e-12, g=0.0, v_f_w=0.9)
        assert G.analytic_fiber_volume_fraction(dense) == pytest.approx(0.9, rel=1e-9)
        p = WeaveParams(w=0.1, t=0.02, u=0.65, g=0.35, v_f_w=0.7)
        assert G.analytic_fiber_volume_fraction(p) == pytest.approx(0.7 * 0.7638031 / 1.35, rel=1e-6)

    def test_vf_monotone_in_g_and_u(self):
        base = G.analytic_fiber_volume_fraction(P)
        assert G.analytic_fiber_volume_fraction(WeaveParams(w=P.w, t=P.t, u=P.u, g=P.g + 0.1, v_f_w=P.v_f_w)) < base
        assert G.analytic_fiber_volume_fraction(WeaveParams(w=P.w, t=P.t, u=P.u + 0.1, g=P.g, v_f_w=P.v_f_w)) < base

    def test_weave_volume_fraction(self):
        p = WeaveParams(w=0.1, t=0.02, u=0.65, g=0.35)
        assert G.weave_volume_fraction(p) == pytest.approx(0.56578, rel=1e-4)
        assert G.weave_volume_fraction(WeaveParams(w=0.1, t=0.02, u=1e-12, g=0.0)) == pytest.approx(1.0)
        assert G.analytic_fiber_volume_fraction(p) / p.v_f_w == pytest.approx(G.weave_volume_fraction(p))

    def test_v_max(self):
        assert G.v_max_area_density(WeaveParams(w=0.1, t=0.02, u=1.0, g=0.0)) == pytest.approx(2 / np.pi, rel=1e-12)
        assert G.v_max_area_density(WeaveParams(w=0.1, t=0.02, u=0.3, g=0.0)) == pytest.approx(0.8910, abs=5e-5)
        # endpoints bracket the quoted [0.64, 0.89] window
        lo = G.v_max_area_density(WeaveParams(w=0.1, t=0.02, u=1.0, g=0.0))
        hi = G.v_max_area_density(WeaveParams(w=0.1, t=0.02, u=0.3, g=0.0))
        assert lo < 0.64 < 0.89 < hi + 0.002


class TestTessellation:
    def test_euler_characteristic(self):
        V, F = G.tow_mesh(P, Phase.WARP, 0, 16)
        edges = set()
        for tri in F:
            for i in range(3):
                e = (min(tri[i], tri[(i + 1) % 3]), max(tri[i], tri[(i + 1) % 3]))
                edges.add(e)
        chi = len(V) - len(edges) + len(F)
        assert chi == 2

    def test_volume_oracle(self):
        # swept-solid volume is exactly A_w * 2a; mesh converges to it
        exact = G.cross_section_area(P) * 2 * P.a
        for fam, idx in [(Phase.WARP, 0), (Phase.WEFT, 1)]:
            V, F = G.tow_mesh(P, fam, idx, 128)
            assert G.mesh_volume(V, F) == pytest.approx(exact, rel=0.01)

    def test_outward_orientation(self):
        for fam in (Phase.WARP, Phase.WEFT):
            V, F = G.tow_mesh(P, fam, 0, 24)
            assert G.mesh_volume(V, F) > 0
            # closed-surface identity: area-weighted normals sum to zero
            cr = np.cross(V[F[:, 1]] - V[F[:, 0]], V[F[:, 2]] - V[F[:, 0]])
            assert np.abs(cr.sum(axis=0)).max() < 1e-12

    def test_resolution_validation(self):
        with pytest.raises(ValueError):
            G.tow_mesh(P, Phase.WARP, 0, 4)


class TestStlExport:
    def test_files_and_layout(self, tmp_path):
        paths = G.export_stl(P, 16, tmp_path)
        names = sorted(p.name for p in paths)
        assert names == ["tow_warp_0.stl", "tow_warp_1.stl", "tow_weft_0.stl", "tow_weft_1.stl"]
        raw = paths[0].read_bytes()
        assert len(raw) >= 84
        n_facets = int.from_bytes(raw[80:84], "little")
        assert len(raw) == 84 + 50 * n_facets

    def test_roundtrip_volume(self, tmp_path):
        paths = G.export_stl(P, 64, tmp_path)
        raw = paths[0].read_bytes()
        n = int.from_bytes(raw[80:84], "little")
        rec = np.frombuffer(raw[84:], dtype=[("n", "<f4", (3,)), ("v", "<f4", (3, 3)), ("a", "<u2")])
        assert len(rec) == n
        tri = rec["v"].astype(float)
        vol = np.einsum("ij,ij->i", tri[:, 0], np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])).sum() / 6
        assert vol == pytest.approx(G.cross_section_area(P) * 2 * P.a, rel=0.01)

    def test_stored_normals_match_winding(self, tmp_path):
        paths = G.export_stl(P, 16, tmp_path)
        raw = paths[2].read_bytes()
        rec = np.frombuffer(raw[84:], dtype=[("n", "<f4", (3,)), ("v", "<f4", (3, 3)), ("a", "<u2")])
        tri = rec["v"].astype(float)
        cr = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        cr /= np.linalg.norm(cr, axis=1)[:, None]
        assert np.abs(cr - rec["n"]).max() < 1e-5


class TestTouchingAtZeroGap:
    def test_adjacent_footprints_touch_without_overlap(self):
        p = WeaveParams(w=0.1, t=0.02, u=0.5, g=0.0)
        # warp strips [0, w] and [w, 2w] share only the x = w plane
        edges = [(c - p.w / 2, c + p.w / 2) for f, i, c, s in G._tow_table(p) if f == Phase.WARP]
        (lo0, hi0), (lo1, hi1) = sorted(edges)
        assert hi0 == pytest.approx(lo1)
        assert hi0 - lo0 == pytest.approx(p.w)
