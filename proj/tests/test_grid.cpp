#include "aggdiff/grid.hpp"

#include <catch2/catch.hpp>

#include <cmath>

using namespace aggdiff;

TEST_CASE("grid centres are symmetric and ravel round-trips")
{
    const Grid g(2, 8.0, 16);
    CHECK(g.spacing() == Approx(1.0));
    CHECK(g.cell_volume() == Approx(1.0));
    CHECK(g.center(0) == Approx(-7.5));
    CHECK(g.center(15) == Approx(7.5));
    CHECK(g.size() == 256);
    for (std::size_t idx : {0u, 9u, 137u, 255u}) CHECK(g.ravel(g.unravel(idx)) == idx);
    CHECK(g.stride(1) == 1);
    CHECK(g.stride(0) == 16);
    const auto p = g.point(g.ravel({5, 10, 0}));
    CHECK(p[0] == Approx(-2.5));
    CHECK(p[1] == Approx(2.5));
    CHECK(g.radius_sq(g.ravel({5, 10, 0})) == Approx(12.5));
}

TEST_CASE("midpoint integration is exact for cell-centred linear functions and spectral for Gaussians")
{
    const Grid g(1, 3.0, 32);
    const Field lin = sample(g, [](const Point& p) { return 2.0 + p[0]; });
    CHECK(integrate(g, lin) == Approx(12.0).epsilon(1e-14));

    const Grid wide(1, 12.0, 256);
    const Field gauss = sample(wide, [](const Point& p) { return std::exp(-p[0] * p[0]); });
    CHECK(integrate(wide, gauss) == Approx(std::sqrt(M_PI)).epsilon(1e-13));
}

TEST_CASE("finite differences: central inside, second-order one-sided at the boundary")
{
    const Grid g(1, 1.0, 32);
    // Quadratics are differentiated exactly by both stencils.
    const Field q = sample(g, [](const Point& p) { return 3.0 * p[0] * p[0] - p[0]; });
    const auto grad = gradient(g, q);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(grad.components[0][i] == Approx(6.0 * g.center(i) - 1.0).margin(1e-12));
    const Field lap = laplacian(g, q);
    for (std::size_t i = 1; i + 1 < g.size(); ++i) CHECK(lap[i] == Approx(6.0).margin(1e-10));
}

TEST_CASE("partial derivative picks one axis in 3D")
{
    const Grid g(3, 2.0, 16);
    const Field f = sample(g, [](const Point& p) { return p[0] + 2.0 * p[1] - 3.0 * p[2]; });
    const Field dz = partial(g, f, 2);
    for (double v : dz) CHECK(v == Approx(-3.0).margin(1e-12));
    CHECK(is_boundary_cell(g, 0));
    CHECK_FALSE(is_boundary_cell(g, g.ravel({7, 8, 5})));
}

TEST_CASE("grid rejects bad parameters")
{
    CHECK_THROWS(Grid(4, 1.0, 8));
    CHECK_THROWS(Grid(1, -1.0, 8));
    CHECK_THROWS(Grid(1, 1.0, 0));
    CHECK_THROWS(Grid(1, 1.0, 24));
}
