#pragma once

#include "aggdiff/grid.hpp"

#include <functional>
#include <span>

namespace aggdiff {

/// Sobolev–Slobodecki seminorm ( s(1-s) ∫∫ |f(x)-f(y)|^p / |x-y|^{1+sp} )^{1/p} on a 1D grid.
///
/// Pairs closer than h/2 (the diagonal) are replaced by the local-slope integral
/// 2 |f'|^p ∫_0^{h/2} r^{p-sp-1} dr per cell. f is taken as zero on the lattice cells
/// outside the grid; those pairs are summed exactly, so whole-cell shifts leave the value unchanged.
double frac_seminorm(const Grid& grid, std::span<const double> f, double s, double p);

/// ||f||_{L^p} + [f]_{W^{s,p}}; the seminorm term is dropped for s = 0.
double frac_norm(const Grid& grid, std::span<const double> f, double s, double p);

/// [f(lambda .)]_{W^{s,p}} / (lambda^{s - 1/p} [f]_{W^{s,p}}), both sampled on `grid`.
double scaling_check(const Grid& grid, const std::function<double(double)>& f, double s, double p, double lambda);

struct YoungResult {
    double lhs = 0.0;
    double rhs_product = 0.0;
    double ratio = 0.0;
};

/// ||f*g||_{W^{s0+s1,p}} against ||f||_{W^{s0,p0}} ||g||_{W^{s1,p1}}.
/// Requires 1/p + 1 = 1/p0 + 1/p1 and s0 + s1 < 1.
YoungResult young_check(const Grid& grid, std::span<const double> f, std::span<const double> g, double s0, double s1,
                        double p0, double p1, double p);

}  // namespace aggdiff
