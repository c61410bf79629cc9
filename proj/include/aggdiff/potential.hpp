#pragma once

#include "aggdiff/grid.hpp"

#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace aggdiff {

struct ZeroPotential {};

/// W(x) = A exp(-|x|^2 / (2 sigma^2)). A < 0 is an attractive well.
struct GaussianBump {
    double amplitude = -1.0;
    double sigma = 1.0;
};

/// W(x) = -(delta^2 + |x|^2)^(-eps/2): attractive, tail -|x|^-eps.
struct SmoothedPowerTail {
    double eps = 0.5;
    double delta = 1.0;
};

/// W(x) = (chi/2) log(delta^2 + |x|^2): attractive for chi > 0, unbounded.
struct SmoothedLog {
    double chi = 0.5;
    double delta = 1.0;
};

/// W(x) = -Ca exp(-|x|/la) + Cr exp(-|x|/lr).
struct Morse {
    double ca = 1.0;
    double la = 1.0;
    double cr = 0.5;
    double lr = 0.5;
};

/// Interaction potential. Every kind is radial, hence even.
class PotentialSpec {
public:
    using Kind = std::variant<ZeroPotential, GaussianBump, SmoothedPowerTail, SmoothedLog, Morse>;

    PotentialSpec() = default;
    PotentialSpec(Kind kind);  // NOLINT(google-explicit-constructor)
    template <class T>
        requires(!std::is_same_v<std::decay_t<T>, Kind> && std::is_constructible_v<Kind, T>)
    PotentialSpec(T&& kind) : PotentialSpec(Kind(std::forward<T>(kind)))  // NOLINT(google-explicit-constructor)
    {
    }

    const Kind& kind() const { return kind_; }
    std::string name() const;
    bool is_zero() const { return std::holds_alternative<ZeroPotential>(kind_); }

    /// Radial profile w(r) and derivatives, in terms of r^2 to stay smooth at 0.
    double profile(double r2) const;
    /// w'(r) / r.
    double slope_over_r(double r2) const;
    /// w''(r).
    double curvature(double r2) const;

private:
    Kind kind_ = ZeroPotential{};
};

PotentialSpec make_potential(const std::string& kind, const std::vector<std::pair<std::string, double>>& params);

double eval_W(const PotentialSpec& spec, const Point& x);
Point eval_gradW(const PotentialSpec& spec, const Point& x);
double eval_lapW(const PotentialSpec& spec, const Point& x, int dim);

/// W~(tau, y) = W(e^tau y) and its y-derivatives.
double eval_rescaled_W(const PotentialSpec& spec, double tau, const Point& y);
Point eval_rescaled_gradW(const PotentialSpec& spec, double tau, const Point& y);
double eval_rescaled_lapW(const PotentialSpec& spec, double tau, const Point& y, int dim);

/// Grid of pairwise centre differences of a density grid: 2N cells per axis at
/// offsets (k - N) h, k = 0 .. 2N-1, covering [-2L, 2L)^n.
class KernelGrid {
public:
    explicit KernelGrid(const Grid& density_grid);

    int dim() const { return dim_; }
    std::size_t cells_per_axis() const { return cells_; }
    std::size_t size() const { return size_; }
    double spacing() const { return spacing_; }
    double offset(std::size_t k) const { return (static_cast<double>(k) - static_cast<double>(cells_ / 2)) * spacing_; }
    std::size_t stride(int d) const { return strides_[d]; }
    Point point(std::size_t idx) const;

private:
    int dim_;
    std::size_t cells_;
    std::size_t size_;
    double spacing_;
    std::array<std::size_t, 3> strides_{};
};

/// Cell averages of W~(tau, .) over each kernel cell with m^n midpoint subsamples.
Field rescaled_potential_samples(const PotentialSpec& spec, double tau, const Grid& grid, int subsamples);

/// Cell averages of grad_y W~(tau, .) = e^tau (grad W)(e^tau y) on the kernel grid.
VectorField rescaled_grad_samples(const PotentialSpec& spec, double tau, const Grid& grid, int subsamples);

/// Cell averages of Laplacian_y W~(tau, .) on the kernel grid.
Field rescaled_lap_samples(const PotentialSpec& spec, double tau, const Grid& grid, int subsamples);

/// A norm that may diverge. Divergence is flagged, never replaced by a large number.
struct NormValue {
    double value = 0.0;
    bool divergent = false;

    static NormValue finite(double v) { return {v, false}; }
    static NormValue infinite() { return {0.0, true}; }
    bool is_finite() const { return !divergent; }
};

struct PotentialNorms {
    NormValue sup_W;
    NormValue L1_W;
    std::vector<std::pair<double, NormValue>> Lp_gradW;
    std::vector<std::pair<double, NormValue>> Lp_lapW;

    NormValue grad(double p) const;
    NormValue lap(double p) const;
};

PotentialNorms potential_norms(const PotentialSpec& spec, int dim, const std::vector<double>& p_list);

/// Measure of the unit sphere S^{n-1}.
double sphere_area(int dim);
/// Volume of the unit ball in R^n.
double ball_volume(int dim);

}  // namespace aggdiff
