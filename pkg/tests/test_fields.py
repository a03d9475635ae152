import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from quasi_ch import fields as fd
from quasi_ch.fields import ODD, Grid

GRIDS = [Grid.uniform(16, 1.0), Grid.uniform((12, 9), (1.0, 0.5))]


def random_grid_and_fields(draw_shape=(st.integers(8, 20), st.integers(8, 14))):
    @st.composite
    def build(draw):
        dim = draw(st.sampled_from([1, 2]))
        n = tuple(draw(s) for s in draw_shape[:dim])
        length = tuple(draw(st.floats(0.5, 3.0)) for _ in n)
        grid = Grid.uniform(n if dim > 1 else n[0], length if dim > 1 else length[0])
        elems = st.floats(-10, 10, allow_nan=False)
        a = draw(arrays(float, grid.shape, elements=st.floats(0, 5, allow_nan=False)))
        f = draw(arrays(float, grid.shape, elements=elems))
        g = draw(arrays(float, grid.shape, elements=elems))
        return grid, a, f, g

    return build()


def observed_order(err_coarse, err_fine):
    return math.log2(err_coarse / err_fine)


class TestGrid:
    def test_geometry(self):
        g = Grid.uniform((8, 10), (2.0, 1.0))
        assert g.dim == 2 and g.shape == (8, 10) and g.size == 80
        assert g.length == pytest.approx((2.0, 1.0))
        assert g.cell_volume == pytest.approx(0.25 * 0.1)
        x = g.centers()[0]
        assert x[0] == pytest.approx(0.125) and x[-1] == pytest.approx(1.875)
        assert g.integrate(g.scalar(1.0)) == pytest.approx(2.0)

    @pytest.mark.parametrize("n", [7, (8, 4), (8, 8, 8)])
    def test_rejects_bad_shapes(self, n):
        with pytest.raises(ValueError):
            Grid.uniform(n, 1.0)

    def test_rejects_non_finite_fields(self):
        g = GRIDS[0]
        with pytest.raises(ValueError):
            fd.check_scalar(g, np.full(g.shape, np.nan))
        with pytest.raises(ValueError):
            fd.check_vector(g, np.zeros((2, *g.shape)))


class TestGradient:
    @pytest.mark.parametrize("grid", GRIDS)
    def test_constant(self, grid):
        assert np.all(fd.gradient(grid.scalar(3.7), grid) == 0.0)

    def test_cos_converges_second_order(self):
        errs = []
        for n in (128, 256):
            g = Grid.uniform(n, 2.0)
            x = g.centers()[0]
            k = math.pi / 2.0
            errs.append(np.max(np.abs(fd.gradient(np.cos(k * x), g)[0] + k * np.sin(k * x))))
        assert observed_order(*errs) >= 1.9

    def test_2d_no_y_dependence(self):
        g = GRIDS[1]
        X, _ = g.mesh()
        grad = fd.gradient(np.cos(math.pi * X), g)
        assert np.all(grad[1] == 0.0)

    def test_neumann_face_derivative_is_zero(self):
        # mirror ghost: the one-sided face difference at the wall vanishes
        g = GRIDS[0]
        f = np.random.default_rng(0).random(g.shape)
        padded = fd._pad(f, 0, fd.EVEN)
        assert padded[0] - padded[1] == 0.0 and padded[-1] - padded[-2] == 0.0


class TestFluxForm:
    @pytest.mark.parametrize("grid", GRIDS)
    def test_constant_f_gives_zero(self, grid):
        a = np.random.default_rng(1).random(grid.shape)
        assert np.all(fd.divergence_flux(a, grid.scalar(2.0), grid) == 0.0)
        assert np.all(fd.laplacian(grid.scalar(-5.0), grid) == 0.0)

    def test_laplacian_cos_converges_second_order(self):
        errs = []
        for n in (128, 256):
            g = Grid.uniform(n, 1.0)
            x = g.centers()[0]
            errs.append(np.max(np.abs(fd.laplacian(np.cos(math.pi * x), g) + math.pi**2 * np.cos(math.pi * x))))
        assert observed_order(*errs) >= 1.9

    @settings(max_examples=60, deadline=None)
    @given(random_grid_and_fields())
    def test_conservation_telescopes(self, data):
        grid, a, f, _ = data
        for mean in fd.FACE_MEANS:
            out = fd.divergence_flux(a, f, grid, mean)
            scale = grid.integrate(np.abs(out)) + 1e-300
            assert abs(grid.integrate(out)) <= 1e-13 * scale

    @settings(max_examples=60, deadline=None)
    @given(random_grid_and_fields())
    def test_laplacian_self_adjoint(self, data):
        grid, _, f, g = data
        lhs = grid.integrate(fd.laplacian(f, grid) * g)
        rhs = grid.integrate(f * fd.laplacian(g, grid))
        scale = grid.integrate(np.abs(fd.laplacian(f, grid) * g)) + grid.integrate(np.abs(f * fd.laplacian(g, grid)))
        assert abs(lhs - rhs) <= 1e-12 * (scale + 1e-300)

    @settings(max_examples=60, deadline=None)
    @given(random_grid_and_fields())
    def test_dissipation_identity(self, data):
        grid, a, f, _ = data
        for mean in fd.FACE_MEANS:
            d = fd.flux_dissipation(a, f, grid, mean)
            assert np.all(d >= 0)
            total = grid.integrate(d)
            assert total == pytest.approx(-grid.integrate(f * fd.divergence_flux(a, f, grid, mean)), rel=1e-11, abs=1e-11)

    @pytest.mark.parametrize("grid", GRIDS)
    @pytest.mark.parametrize("mean", fd.FACE_MEANS)
    def test_flux_matrix_matches_operator(self, grid, mean):
        rng = np.random.default_rng(2)
        a, f = rng.random(grid.shape), rng.normal(size=grid.shape)
        got = (fd.flux_matrix(a, grid, mean) @ f.ravel()).reshape(grid.shape)
        assert np.allclose(got, fd.divergence_flux(a, f, grid, mean), rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("grid", GRIDS)
    def test_laplacian_matrix_matches_operator(self, grid):
        f = np.random.default_rng(3).normal(size=grid.shape)
        got = (fd.laplacian_matrix(grid) @ f.ravel()).reshape(grid.shape)
        assert np.allclose(got, fd.laplacian(f, grid), rtol=1e-12, atol=1e-10)

    def test_geometric_face_mean_blocks_degenerate_neighbours(self):
        g = GRIDS[0]
        a = np.ones(g.shape)
        a[5] = 0.0
        faces = fd.face_coefficient(a, g, 0, "geometric")
        assert faces[4] == 0.0 and faces[5] == 0.0 and faces[0] == 1.0
        with pytest.raises(ValueError):
            fd.face_coefficient(a, g, 0, "harmonic")


class TestVelocityOperators:
    def test_divergence_telescopes_and_matches_matrix(self):
        for grid in GRIDS:
            v = np.random.default_rng(4).normal(size=(grid.dim, *grid.shape))
            div = fd.divergence(v, grid)
            assert abs(grid.integrate(div)) < 1e-12 * grid.integrate(np.abs(div))
            got = fd.divergence_matrix(grid) @ v.reshape(grid.dim, -1).ravel()
            assert np.allclose(got, div.ravel(), rtol=1e-12, atol=1e-12)

    def test_symmetric_gradient_of_linear_field(self):
        g = Grid.uniform(32, 1.0)
        alpha = 0.7
        v = alpha * g.centers()[0][None]
        D = fd.symmetric_gradient(v, g)
        assert D.shape == (1, 32)
        assert np.allclose(D[0, 1:-1], alpha, rtol=1e-12)

    def test_symmetric_gradient_2d_entries(self):
        g = Grid.uniform((16, 16), (1.0, 1.0))
        X, Y = g.mesh()
        v = np.stack([Y, np.zeros_like(X)])  # simple shear
        D = fd.symmetric_gradient(v, g)
        assert D.shape == (3, 16, 16)
        interior = (slice(1, -1), slice(1, -1))
        assert np.allclose(D[0][interior], 0.0) and np.allclose(D[1][interior], 0.0)
        assert np.allclose(D[2][interior], 0.5)
        full = fd.full_symmetric_gradient(v, g)
        assert np.array_equal(full[0, 1], full[1, 0])

    @pytest.mark.parametrize("scheme", ["upwind", "centered"])
    def test_advect_zero_velocity(self, scheme):
        g = GRIDS[1]
        f = np.random.default_rng(5).random(g.shape)
        assert np.all(fd.advect(f, g.vector(), g, scheme) == 0.0)

    def test_upwind_advection_of_linear_profile(self):
        g = Grid.uniform(20, 1.0)
        x = g.centers()[0]
        for speed in (1.5, -1.5):
            v = np.full((1, 20), speed)
            out = fd.advect(2.0 * x, v, g, "upwind")
            assert np.allclose(out[1:-1], 2.0 * speed)
        with pytest.raises(ValueError):
            fd.advect(x, v, g, "lax")

    def test_conservative_transport_is_conservative(self):
        for grid in GRIDS:
            rng = np.random.default_rng(6)
            m, v = rng.normal(size=grid.shape), rng.normal(size=(grid.dim, *grid.shape))
            for scheme in ("upwind", "centered"):
                out = fd.conservative_transport(m, v, grid, scheme)
                assert abs(grid.integrate(out)) < 1e-12 * grid.integrate(np.abs(out))

    def test_tensor_divergence_of_constant_is_zero(self):
        g = GRIDS[1]
        T = np.ones((2, 2, *g.shape))
        assert np.all(fd.tensor_divergence(T, g) == 0.0)

    def test_velocity_ghosts_are_odd(self):
        g = GRIDS[0]
        v = np.ones((1, *g.shape))
        L = fd.velocity_gradient(v, g)
        # no-slip walls: the uniform field is seen as dropping to zero at the faces
        assert L[0, 0, 0] > 0 and L[0, 0, -1] < 0 and np.all(L[0, 0, 1:-1] == 0)
        assert fd.central_difference(v[0], g, 0, ODD)[0] == pytest.approx(1.0 / g.h[0])
