#include "aggdiff/rates.hpp"

#include <catch2/catch.hpp>

#include <cmath>
#include <map>

using namespace aggdiff;

namespace {

std::vector<double> linspace(double a, double b, std::size_t n)
{
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

// Composite Simpson on [0, tau].
double f_alpha_quadrature(double tau, double alpha)
{
    const std::size_t n = 2000;
    const double h = tau / n;
    double acc = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * std::exp((2 - alpha) * h * static_cast<double>(i));
    }
    return std::exp(-2 * tau) * acc * h / 3.0;
}

}  // namespace

TEST_CASE("f_alpha closed form and its three-case bound")
{
    for (double alpha : {0.5, 1.0, 2.0, 3.0}) {
        for (double tau : {0.1, 1.0, 4.0}) {
            CHECK(f_alpha(tau, alpha) == Approx(f_alpha_quadrature(tau, alpha)).epsilon(1e-10));
            CHECK(f_alpha(tau, alpha) <= f_alpha_bound(tau, alpha) * (1 + 1e-12));
        }
    }
    CHECK(f_alpha(2.0, 2.0) == Approx(2.0 * std::exp(-4.0)));
}

TEST_CASE("fit_decay recovers slopes under each modifier")
{
    const auto tau = linspace(0.0, 5.0, 101);
    std::vector<double> plain, m1, m2;
    for (double t : tau) {
        plain.push_back(3.0 * std::exp(-2.0 * t));
        m1.push_back((1 + t) * std::exp(-1.5 * t));
        m2.push_back((1 + t) * (1 + t) * std::exp(-0.7 * t));
    }
    // Explicit zero floor: these series never plateau.
    auto f = fit_decay(tau, plain, {1.0, 4.0}, Modifier::none, 0.0);
    CHECK(f.slope == Approx(-2.0).epsilon(1e-12));
    CHECK(f.intercept == Approx(std::log(3.0)).epsilon(1e-10));
    CHECK(f.r_squared == Approx(1.0));
    CHECK(f.n_points == 61);
    CHECK(fit_decay(tau, m1, {1.0, 4.0}, Modifier::div_by_1ptau, 0.0).slope == Approx(-1.5).epsilon(1e-12));
    CHECK(fit_decay(tau, m2, {1.0, 4.0}, Modifier::div_by_1ptau_sq, 0.0).slope == Approx(-0.7).epsilon(1e-12));
    // The default floor is 10x the tail minimum 3 e^{-10}: points up to tau = 5 - log(10)/2 survive.
    CHECK(fit_decay(tau, plain, {1.0, 4.0}).n_points == 57);
    CHECK(modifier_from_string(to_string(Modifier::div_by_1ptau_sq)) == Modifier::div_by_1ptau_sq);
}

TEST_CASE("fit_decay stops at the noise floor")
{
    const auto tau = linspace(0.0, 10.0, 201);
    std::vector<double> v;
    for (double t : tau) v.push_back(std::max(std::exp(-3.0 * t), 1e-9));
    CHECK(default_floor(tau, v) == Approx(1e-8));
    const auto f = fit_decay(tau, v, {1.0, 9.0});
    CHECK(f.slope == Approx(-3.0).epsilon(1e-10));
    // e^{-3 tau} > 1e-8 up to tau = 6.14: the leading run is tau = 1.00 .. 6.10.
    CHECK(f.n_points == 103);
    CHECK_THROWS_AS(fit_decay(tau, v, {20.0, 30.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_decay(tau, v, {1.0, 1.1}), std::invalid_argument);
}

TEST_CASE("E1 predictions by hypothesis class")
{
    const auto p = default_p_list();
    CHECK(predict_e1(1, PotentialSpec{}, potential_norms(PotentialSpec{}, 1, p)).exponent == -2.0);

    const PotentialSpec bump = GaussianBump{0.05, 1.0};
    CHECK(predict_e1(1, bump, potential_norms(bump, 1, p)).exponent == -1.0);
    const auto n2 = predict_e1(2, bump, potential_norms(bump, 2, p));
    CHECK(n2.exponent == -2.0);
    CHECK(n2.modifier == Modifier::div_by_1ptau);
    CHECK(predict_e1(3, bump, potential_norms(bump, 3, p)).exponent == -2.0);

    const PotentialSpec logw = SmoothedLog{0.5, 0.5};
    CHECK_FALSE(predict_e1(1, logw, potential_norms(logw, 1, p)).exponent.has_value());

    // |grad W| ~ 0.6 r^{-1.6} is in L^p(R^2) iff p > 1.25; the first listed exponent is 1.3.
    const PotentialSpec tail = SmoothedPowerTail{0.6, 1.0};
    const auto pt = predict_e1(2, tail, potential_norms(tail, 2, p));
    REQUIRE(pt.exponent.has_value());
    CHECK(*pt.exponent == Approx(-(2.0 / 1.3 - 1.0)));

    const auto pt1 = predict_e1(1, tail, potential_norms(tail, 1, p));
    CHECK(pt1.exponent == Approx(-0.6));
}

TEST_CASE("decay report passes steeper decay and flags missing fits")
{
    const auto p = default_p_list();
    SeriesFits fits;
    RateFit e1;
    e1.slope = -2.05;
    e1.r_squared = 0.999;
    fits.E1 = e1;
    RateFit l1;
    l1.slope = -0.5;
    fits.l1_dist_G = l1;
    const auto rep = theorem_report(1, PotentialSpec{}, potential_norms(PotentialSpec{}, 1, p), fits);
    std::map<std::string, TheoremRow> rows;
    for (const auto& r : rep.rows) rows[r.quantity] = r;
    CHECK(rows.at("E1").pass);
    CHECK(rows.at("E1").predicted_exponent == -2.0);
    CHECK(rows.at("l1_dist_G").predicted_exponent == -1.0);
    CHECK_FALSE(rows.at("l1_dist_G").pass);
    CHECK(rows.at("l1_dist_t_via_CK").fitted_slope == Approx(-2.05 * 0.25));
    CHECK_FALSE(rows.at("N2_minus_n").pass);
    CHECK(rows.at("N2_minus_n").note == "no fit available");
    CHECK_FALSE(format_report_table(rep).empty());

    const PotentialSpec logw = SmoothedLog{0.5, 0.5};
    const auto none = theorem_report(1, logw, potential_norms(logw, 1, p), fits);
    CHECK(none.rows.front().pass);
    CHECK(none.rows.front().note == "no convergence predicted");
}
