#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace aggdiff {

struct CheckLine {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// quadrature, gaussian-oracles, convolution, fractional, appendix-c, lemma44-scaling.
std::vector<std::string> check_suite_names();

/// Runs one suite; throws std::invalid_argument for unknown names.
std::vector<CheckLine> run_check_suite(const std::string& name, std::uint64_t seed = 0);

/// Closed forms for N(m, s I) in R^n against the standard Gaussian G.
struct GaussianClosedForms {
    double entropy;
    double E1;
    double I1;
    double E2;
    double N2;
};

/// Requires 0 < s < 2 (E2 diverges otherwise).
GaussianClosedForms gaussian_closed_forms(int dim, double mean_sq, double s);

/// Root A_K of int max(0, A - K|x|^alpha) |log(...)| dx = C0 in one dimension.
double lemma44_amplitude(double K, double alpha, double C0);

}  // namespace aggdiff
