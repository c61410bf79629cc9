#pragma once

#include "aggdiff/density.hpp"
#include "aggdiff/interaction.hpp"

#include <limits>
#include <string>

namespace aggdiff {

/// One output row of every monitored functional at a time point.
struct DiagnosticsRecord {
    double tau = 0.0;
    double t = 0.0;
    double mass = 0.0;
    double min_value = 0.0;
    double second_moment = 0.0;
    double entropy = 0.0;
    double l_log_l = 0.0;
    double E_orig = 0.0;
    double E_tilde = 0.0;
    double F_tilde = 0.0;
    double E1 = 0.0;
    double I1 = 0.0;
    double E2 = 0.0;
    double J1 = 0.0;
    double J2 = 0.0;
    double l1_dist_G = 0.0;
    double ck_rhs = 0.0;
    double lsi_gap = 0.0;
    double poincare_gap = 0.0;
    double l2_norm = 0.0;
    double h1_norm = 0.0;
    /// (alpha, [rho~]_{C^alpha}) in the order requested.
    std::vector<std::pair<double, double>> holder;

    // Auxiliary columns.
    double J2_lap = 0.0;
    double e2_excluded_mass = 0.0;
    double n2_ode_residual = std::numeric_limits<double>::quiet_NaN();
    double kernel_resolution = std::numeric_limits<double>::infinity();
    double dt = 0.0;
};

/// Column names in output order; Hölder columns are holder_<alpha>.
std::vector<std::string> record_columns(const std::vector<double>& holder_alphas);
/// Values in the same order as record_columns.
std::vector<double> record_values(const DiagnosticsRecord& r);
/// Looks a column up by name; throws std::out_of_range for unknown names.
double record_value(const DiagnosticsRecord& r, const std::string& column);

/// E = int rho log rho + 1/2 int rho (W * rho).
double free_energy(const DensityField& rho, std::span<const double> w_conv);
/// Same functional in rescaled variables.
double rescaled_energy(const DensityField& rho_tilde, std::span<const double> w_conv);
/// F~ = E~ + N2/2.
double f_tilde(const DensityField& rho_tilde, std::span<const double> w_conv);
/// F~ evaluated directly as int (rho log rho + rho |y|^2/2 + rho (W~*rho)/2).
double f_tilde_direct(const DensityField& rho_tilde, std::span<const double> w_conv);

/// |E(t) - (E~(tau) - n tau)| with E evaluated on the original-variable grid.
double energy_identity_residual(const DensityField& rho_tilde, double tau, const PotentialSpec& W, int subsamples);

/// E1 = int rho log(rho / G).
double relative_entropy_L1(const DensityField& rho_tilde);

/// I1 = int rho |grad log rho + y|^2 with the floor 1e-14 ||rho||_inf inside the log.
double fisher_info(const DensityField& rho_tilde);

double j1(const DensityField& rho_tilde, const VectorField& grad_w_conv);
/// int grad rho . (grad W~ * rho).
double j2(const DensityField& rho_tilde, const VectorField& grad_w_conv);
/// -int rho (Lap W~ * rho).
double j2_lap(const DensityField& rho_tilde, std::span<const double> lap_w_conv);

/// Standard Gaussian G sampled at cell centres (not renormalized).
Field gaussian_samples(const Grid& grid);

struct L2EntropyResult {
    double E2 = 0.0;
    /// int_cut rho^2/G - 2 int_cut rho + int_cut G; equals E2 up to rounding.
    double E2_identity = 0.0;
    double excluded_mass = 0.0;
    bool warning = false;
};

/// int |rho - G|^2 / G over the region |y| <= 0.9 L.
L2EntropyResult relative_entropy_L2(const DensityField& rho_tilde);

/// 1/2 I1 - E1.
double lsi_gap(const DensityField& rho_tilde);
/// int |grad w|^2 G - int |w - 1|^2 G over |y| <= 0.9 L, w = rho/G.
double poincare_gap(const DensityField& rho_tilde);

/// K^{n/(n+alpha)} (log K)^{-alpha/(n+alpha)}; the constant depending on C0 is not included.
double moc_linf_bound(double K, double C0, int dim, double alpha);

struct AppendixCResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    double r0 = 0.0;
    double C0 = 0.0;
    double tail = 0.0;
};

/// int |F(rho)| <= int F(rho) + C0 (sup_{1/e<s<1} |F| + int_{|x|>r0} |F(N_g / (|S| G(|x|)))|)
/// for F(s) = s log s and g(r) = r^2.
AppendixCResult appendix_c_check(const DensityField& rho);

struct DiagnosticsOptions {
    bool e2 = true;
    std::vector<double> holder_alphas;
    std::uint64_t seed = 0;
};

/// All functionals of rho~ at rescaled time tau. `op` must live on rho~'s grid and is
/// refreshed to tau if needed.
DiagnosticsRecord compute_diagnostics(const DensityField& rho_tilde, double tau, InteractionOperator& op,
                                      const DiagnosticsOptions& opts);

/// e^{-tau} ell_W / h, where ell_W is the potential's intrinsic length.
double kernel_resolution(const PotentialSpec& spec, double tau, double h);

}  // namespace aggdiff
