#pragma once

#include "aggdiff/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace aggdiff {

/// Nonnegative cell values on a Grid with cached mass.
class DensityField {
public:
    DensityField(Grid grid, Field values);

    const Grid& grid() const { return grid_; }
    const Field& values() const { return values_; }
    std::span<const double> view() const { return values_; }
    double mass() const { return mass_; }

    /// Write access for the solver; call refresh_mass() afterwards.
    Field& mutable_values() { return values_; }
    void refresh_mass();

private:
    Grid grid_;
    Field values_;
    double mass_ = 0.0;
};

/// (2 pi s)^{-n/2} exp(-|y - m|^2 / 2s), renormalized to unit discrete mass.
/// Rejects variances for which the domain clips more than 1e-10 of the mass.
DensityField gaussian_profile(const Grid& grid, const Point& mean, double variance);

/// Heat kernel K(t, .) = Gaussian of variance 2t.
DensityField heat_kernel_field(const Grid& grid, double t);

struct MixtureComponent {
    double weight;
    Point mean;
    double variance;
};

/// Weighted sum of Gaussians, renormalized to unit mass.
DensityField gaussian_mixture(const Grid& grid, const std::vector<MixtureComponent>& components);

/// Uniform density of unit mass on the cells whose centres lie in [lo, hi].
DensityField box_profile(const Grid& grid, const Point& lo, const Point& hi);

/// int rho log rho with 0 log 0 = 0.
double entropy(const DensityField& rho);
/// int rho |log rho|.
double l_log_l(const DensityField& rho);
/// int |y|^2 rho.
double second_moment(const DensityField& rho);
Point first_moment(const DensityField& rho);

/// L^p norm of a field, p in [1, inf]; p = inf gives the max |f|.
double lp_norm(const Grid& grid, std::span<const double> f, double p);
double h1_norm(const Grid& grid, std::span<const double> f);

enum class HolderStrategy { exhaustive, sampled };

struct HolderOptions {
    HolderStrategy strategy = HolderStrategy::exhaustive;
    /// Random pairs in sampled mode; 0 means 200 N.
    std::size_t samples = 0;
    std::uint64_t seed = 0;
};

/// max over evaluated pairs of |f(x) - f(y)| / |x - y|^alpha. Sampled mode is a lower bound.
double holder_seminorm(const Grid& grid, std::span<const double> f, double alpha, const HolderOptions& opts = {});

/// Exhaustive for n = 1, sampled otherwise.
HolderOptions default_holder_options(const Grid& grid, std::uint64_t seed);

double l1_distance(const Grid& grid, std::span<const double> a, std::span<const double> b);

/// Original-variable density rho(x) = e^{-n tau} rho~(e^{-tau} x) on the grid stretched by e^tau.
DensityField to_original_frame(const DensityField& rescaled, double tau);
/// Inverse map: rho~(y) = e^{n tau} rho(e^tau y) on the grid shrunk by e^{-tau}.
DensityField to_rescaled_frame(const DensityField& original, double tau);

/// tau = log sqrt(2t + 1) and back.
double tau_from_t(double t);
double t_from_tau(double tau);

struct Snapshot {
    DensityField density;
    double tau;
    double t;
};

/// 64-byte little-endian header followed by the cell values, plus "<path>.txt" metadata.
void write_snapshot(const std::filesystem::path& path, const DensityField& rho, double tau, double t);
Snapshot read_snapshot(const std::filesystem::path& path);

}  // namespace aggdiff
