#pragma once

#include "aggdiff/potential.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace aggdiff {

enum class Modifier { none, div_by_1ptau, div_by_1ptau_sq };

std::string to_string(Modifier m);
Modifier modifier_from_string(const std::string& s);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double window_begin = 0.0;
    double window_end = 0.0;
    Modifier modifier = Modifier::none;
    std::size_t n_points = 0;
    double floor = 0.0;
};

/// F_alpha(tau) = e^{-2 tau} int_0^tau e^{(2 - alpha) s} ds, in closed form.
double f_alpha(double tau, double alpha);

/// The three-case upper bound 1/(alpha-2) e^{-2tau}, tau e^{-2tau}, 1/(2-alpha) e^{-alpha tau}.
double f_alpha_bound(double tau, double alpha);

/// Default noise floor: 10 x the smallest value over the last 10% of the tau range.
double default_floor(const std::vector<double>& tau, const std::vector<double>& values);

/// Least-squares fit of log(value / modifier(tau)) against tau on [window.first, window.second].
/// Points at or below the floor end the fit: only the leading run of points above it is used.
/// Throws std::invalid_argument if fewer than 5 points remain or the window misses the data.
RateFit fit_decay(const std::vector<double>& tau, const std::vector<double>& values,
                  std::pair<double, double> window, Modifier modifier = Modifier::none,
                  std::optional<double> floor = std::nullopt);

struct TheoremRow {
    std::string quantity;
    /// Empty when no hypothesis class applies.
    std::optional<double> predicted_exponent;
    std::optional<double> fitted_slope;
    double r_squared = 0.0;
    std::pair<double, double> window{0.0, 0.0};
    Modifier modifier = Modifier::none;
    bool pass = false;
    /// Rate at or beyond t^{-1}, where K and K(t + 1/2, .) are indistinguishable.
    bool profile_swap_flag = false;
    std::string note;
};

struct TheoremReport {
    std::string hypothesis;
    std::vector<TheoremRow> rows;
};

/// Predicted E1 decay exponent in tau and its polynomial modifier; nullopt if no hypothesis class applies.
struct Prediction {
    std::optional<double> exponent;
    Modifier modifier = Modifier::none;
    std::string hypothesis;
};

Prediction predict_e1(int dim, const PotentialSpec& spec, const PotentialNorms& norms);

/// Default p list used to pick the hypothesis exponents.
std::vector<double> default_p_list();

struct SeriesFits {
    std::optional<RateFit> E1;
    std::optional<RateFit> l1_dist_G;
    std::optional<RateFit> E2;
    std::optional<RateFit> N2_minus_n;
};

/// Tolerance added to predicted exponents: steeper measured decay passes.
inline constexpr double kSlopeTolerance = 0.15;

TheoremReport theorem_report(int dim, const PotentialSpec& spec, const PotentialNorms& norms, const SeriesFits& fits);

std::string format_report_table(const TheoremReport& report);

}  // namespace aggdiff
