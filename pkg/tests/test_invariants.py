import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import icosphere
from npweyl import (
    GeometryError,
    InadmissibleInversionError,
    Inversion,
    MobiusMap,
    Rotation,
    Scaling,
    Translation,
    apply_mobius,
    build_quadrature,
    clifford_torus,
    ellipsoid,
    gauss_bonnet_check,
    geometry_report,
    mesh_quadrature,
    predicted_weyl_constant,
    sphere,
    torus,
    willmore_energy,
)
from npweyl.errors import InvalidCurvatureError
from npweyl.invariants import random_mobius

SQRT_3PI_8 = math.sqrt(3 * math.pi) / 8


class TestWillmore:
    def test_unit_sphere(self):
        assert willmore_energy(build_quadrature(sphere(), 64, 128)) == pytest.approx(4 * math.pi, abs=1e-10)

    def test_clifford_torus(self):
        assert willmore_energy(build_quadrature(clifford_torus(), 64, 64)) == pytest.approx(2 * math.pi**2, abs=1e-10)

    def test_scale_invariance(self):
        assert willmore_energy(build_quadrature(sphere(2.0), 64, 128)) == pytest.approx(4 * math.pi, abs=1e-10)

    def test_torus_of_revolution(self):
        # closed form W = pi^2 a^2 / sqrt(a^2 - 1) with a = R / r
        for R, r in [(2.0, 1.0), (3.0, 0.5), (1.2, 1.0)]:
            a = R / r
            W = willmore_energy(build_quadrature(torus(R, r), 96, 96))
            assert W == pytest.approx(math.pi**2 * a**2 / math.sqrt(a**2 - 1), rel=1e-10)
            assert W >= 2 * math.pi**2

    def test_ellipsoid_exceeds_sphere(self):
        assert willmore_energy(build_quadrature(ellipsoid(1.0, 1.3, 1.7), 64, 128)) > 4 * math.pi


class TestGaussBonnet:
    def test_sphere(self):
        integral, residual = gauss_bonnet_check(build_quadrature(sphere(), 64, 128))
        assert integral == pytest.approx(4 * math.pi, abs=1e-10)
        assert residual < 1e-10

    @pytest.mark.parametrize("R,r", [(2.0, 1.0), (3.0, 0.5), (1.1, 1.0)])
    def test_torus(self, R, r):
        integral, residual = gauss_bonnet_check(build_quadrature(torus(R, r), 64, 64))
        assert abs(integral) < 1e-10 and residual < 1e-10

    def test_genus2_mesh(self):
        from conftest import genus2_mesh

        integral, _ = gauss_bonnet_check(mesh_quadrature(*genus2_mesh()))
        assert integral == pytest.approx(-4 * math.pi, rel=0.05)

    @pytest.mark.parametrize(
        "chart", [sphere(), ellipsoid(1.0, 1.3, 1.7), torus(2.0, 1.0), torus(1.2, 1.0), clifford_torus()]
    )
    def test_refinement(self, chart):
        res = [gauss_bonnet_check(build_quadrature(chart, n, 2 * n))[1] for n in (4, 8, 16)]
        for coarse, fine in zip(res, res[1:]):
            assert fine <= coarse / 4 or fine < 1e-12

    def test_empty_quadrature(self):
        q = build_quadrature(sphere(), 4, 4)
        forms = type(q.forms)(*(getattr(q.forms, k)[:0] for k in "EFGLMN"))
        empty = type(q)(q.x[:0], q.n[:0], q.w[:0], forms, q.H[:0], q.K[:0], 2, "empty")
        with pytest.raises(GeometryError):
            gauss_bonnet_check(empty)
        with pytest.raises(GeometryError):
            willmore_energy(empty)


class TestPredictedConstant:
    def test_sphere(self):
        assert predicted_weyl_constant(4 * math.pi, 2) == 0.25

    def test_clifford(self):
        assert predicted_weyl_constant(2 * math.pi**2, 0) == pytest.approx(SQRT_3PI_8, abs=1e-15)
        assert SQRT_3PI_8 == pytest.approx(0.3838, abs=1e-4)

    def test_langevin_rosenberg(self):
        assert predicted_weyl_constant(8 * math.pi, 0) == pytest.approx(math.sqrt(3) / 4, abs=1e-15)

    def test_negative_radicand(self):
        with pytest.raises(InvalidCurvatureError):
            predicted_weyl_constant(1.0, 2)

    @given(W=st.floats(4 * math.pi, 1e4))
    def test_sphere_topology_lower_bound(self, W):
        assert predicted_weyl_constant(W, 2) >= 0.25

    @given(W=st.floats(0, 1e4), chi=st.integers(-20, 2))
    def test_non_negative(self, W, chi):
        if 3 * W - 2 * math.pi * chi >= 0:
            assert predicted_weyl_constant(W, chi) >= 0


class TestMobius:
    def test_translation_exact(self):
        q = build_quadrature(torus(2.0, 1.0), 32, 32)
        moved = apply_mobius(q, MobiusMap((Translation((1.5, -2.0, 0.25)),)))
        np.testing.assert_array_equal(moved.H, q.H)
        np.testing.assert_array_equal(moved.K, q.K)
        np.testing.assert_array_equal(moved.w, q.w)
        assert willmore_energy(moved) == willmore_energy(q)
        assert moved.euler_characteristic == q.euler_characteristic

    def test_scaling(self):
        q = build_quadrature(sphere(), 32, 64)
        big = apply_mobius(q, MobiusMap((Scaling(3.0),)))
        assert big.area == pytest.approx(9 * q.area, rel=1e-13)
        np.testing.assert_allclose(big.H, q.H / 3, rtol=1e-13)
        assert willmore_energy(big) == pytest.approx(willmore_energy(q), abs=1e-10)

    def test_inversion_of_unit_sphere(self):
        # image of the unit sphere under inversion in the unit sphere about (3, 0, 0):
        # the axis points x = 1 and x = -1 map to 2.5 and 2.75, so the image has
        # center 2.625 and radius 0.125
        q = build_quadrature(sphere(), 32, 64)
        image = apply_mobius(q, MobiusMap((Inversion((3.0, 0.0, 0.0), 1.0),)))
        radius, center = 0.125, np.array([2.625, 0.0, 0.0])
        np.testing.assert_allclose(np.linalg.norm(image.x - center, axis=1), radius, rtol=1e-13)
        np.testing.assert_allclose(image.n, (image.x - center) / radius, atol=1e-10)
        np.testing.assert_allclose(image.H, 1 / radius, rtol=1e-9)
        np.testing.assert_allclose(image.K, 1 / radius**2, rtol=1e-9)
        assert image.area == pytest.approx(4 * math.pi * radius**2, rel=1e-10)
        assert willmore_energy(image) == pytest.approx(4 * math.pi, rel=1e-10)

    def test_chart_and_point_maps_agree(self, rng):
        m = MobiusMap((Inversion((0.5, 3.0, -1.0), 2.0), Scaling(0.7), Translation((1.0, 2.0, 3.0))))
        chart = torus(2.0, 1.0)
        image = apply_mobius(chart, m)
        s, t = rng.uniform(0, 2 * math.pi, (2, 30))
        np.testing.assert_allclose(image.position(s, t), m(chart.position(s, t)), atol=1e-14)
        # chain-rule derivatives against finite differences of the mapped positions
        h = 1e-5
        fd_s = (m(chart.position(s + h, t)) - m(chart.position(s - h, t))) / (2 * h)
        np.testing.assert_allclose(image.first_derivs(s, t)[0], fd_s, atol=1e-8)
        fd_ss = (m(chart.position(s + h, t)) - 2 * m(chart.position(s, t)) + m(chart.position(s - h, t))) / h**2
        np.testing.assert_allclose(image.second_derivs(s, t)[0], fd_ss, atol=1e-4)

    def test_center_on_surface(self):
        with pytest.raises(InadmissibleInversionError):
            apply_mobius(sphere(), MobiusMap((Inversion((1.0, 0.0, 0.0)),)))
        with pytest.raises(InadmissibleInversionError):
            apply_mobius(torus(2.0, 1.0), MobiusMap((Inversion((0.0, 3.0, 0.0)),)))

    def test_center_on_mesh_vertex(self):
        v, f = icosphere(1)
        q = mesh_quadrature(v, f)
        with pytest.raises(InadmissibleInversionError):
            apply_mobius(q, MobiusMap((Inversion(tuple(v[3])),)))

    def test_mesh_topology_survives(self):
        q = mesh_quadrature(*icosphere(2))
        image = apply_mobius(q, MobiusMap((Inversion((3.0, 0.0, 0.0)),)))
        assert image.euler_characteristic == 2
        assert np.all(image.H > 0)

    def test_improper_rotation_keeps_outward_normals(self):
        q = build_quadrature(ellipsoid(1.0, 1.3, 1.7), 16, 32)
        mirror = MobiusMap((Rotation(((-1, 0, 0), (0, 1, 0), (0, 0, 1))),))
        image = apply_mobius(q, mirror)
        np.testing.assert_allclose(image.H, q.H, atol=1e-12)
        assert np.sum(image.w * np.einsum("ij,ij->i", image.x, image.n)) > 0

    def test_parse_and_describe(self):
        m = MobiusMap.parse("translate:1,2,3; scale:2 ;invert:0,0,5,1.5")
        assert m.primitives == (Translation((1.0, 2.0, 3.0)), Scaling(2.0), Inversion((0.0, 0.0, 5.0), 1.5))
        assert MobiusMap.parse(m.describe()) == m
        r = MobiusMap.parse("rotate:0,-1,0,1,0,0,0,0,1")
        np.testing.assert_allclose(r([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0])

    @pytest.mark.parametrize("bad", ["shear:1", "scale:1,2", "translate:a,b,c", "scale:-1", "invert:0,0,0,0"])
    def test_parse_errors(self, bad):
        with pytest.raises(ValueError):
            MobiusMap.parse(bad)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), shape=st.sampled_from(["sphere", "torus"]))
def test_mobius_invariance_of_w_and_c(seed, shape):
    chart = sphere() if shape == "sphere" else torus(2.0, 1.0)
    q = build_quadrature(chart, 64, 64)
    m = random_mobius(np.random.default_rng(seed), q)
    image = apply_mobius(q, m)
    before, after = geometry_report(q), geometry_report(image)
    assert after.euler_characteristic == before.euler_characteristic
    assert abs(after.willmore_energy - before.willmore_energy) / before.willmore_energy < 1e-5
    assert abs(after.predicted_weyl_constant - before.predicted_weyl_constant) < 1e-5 * before.predicted_weyl_constant


class TestReport:
    def test_sphere(self):
        r = geometry_report(build_quadrature(sphere(), 64, 128))
        assert r.willmore_energy == pytest.approx(4 * math.pi, abs=1e-10)
        assert r.euler_characteristic == 2
        assert r.predicted_weyl_constant == pytest.approx(0.25, abs=1e-12)
        assert r.signed_densities is None and r.weyl_density is None

    def test_clifford(self):
        r = geometry_report(build_quadrature(clifford_torus(), 64, 64), signed=True)
        assert r.willmore_energy == pytest.approx(2 * math.pi**2, abs=1e-10)
        assert r.predicted_weyl_constant == pytest.approx(SQRT_3PI_8, abs=1e-10)
        c_plus, c_minus = r.signed_densities
        assert c_plus**2 + c_minus**2 == pytest.approx(r.predicted_weyl_constant**2, rel=1e-10)

    def test_ellipsoid_111_matches_sphere(self):
        a = geometry_report(build_quadrature(ellipsoid(1, 1, 1), 32, 64)).to_dict()
        b = geometry_report(build_quadrature(sphere(), 32, 64)).to_dict()
        for key in a:
            if key != "label":
                assert a[key] == pytest.approx(b[key], abs=1e-13)

    def test_non_negative_fields(self):
        for chart in (sphere(), torus(2.0, 1.0), ellipsoid(1.0, 1.3, 1.7)):
            r = geometry_report(build_quadrature(chart, 16, 32), signed=True)
            assert r.willmore_energy >= 0 and r.predicted_weyl_constant >= 0
            assert min(r.signed_densities) >= 0

    def test_json_and_table(self, tmp_path):
        r = geometry_report(build_quadrature(torus(2.0, 1.0), 8, 8), signed=True, include_density=True)
        path = tmp_path / "geometry.json"
        r.write_json(path)
        doc = json.loads(path.read_text())
        assert set(doc) == {
            "label", "n_nodes", "area", "W", "gauss_bonnet_integral", "chi",
            "gauss_bonnet_residual", "C", "C_plus", "C_minus", "weyl_density",
        }
        assert len(doc["weyl_density"]) == 64
        keys = [line.split("=")[0] for line in r.table().splitlines()]
        assert keys == [
            "label", "n_nodes", "area", "W", "chi", "gauss_bonnet_integral",
            "gauss_bonnet_residual", "C", "C_plus", "C_minus",
        ]
