#include "aggdiff/checks.hpp"
#include "aggdiff/experiment.hpp"

#include <catch2/catch.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using namespace aggdiff;

TEST_CASE("config text parsing with sections and comments")
{
    const auto m = parse_config_text("# heading\n[grid]\ndim = 2  \nN=64\n\n[potential]\nkind = gaussian_bump # trailing\n");
    CHECK(m.at("grid.dim") == "2");
    CHECK(m.at("grid.N") == "64");
    CHECK(m.at("potential.kind") == "gaussian_bump");
    CHECK_THROWS_AS(parse_config_text("[grid]\nthis line has no equals\n"), ConfigError);
}

TEST_CASE("overrides must name known keys")
{
    ConfigMap m = preset_config("heat-baseline");
    apply_override(m, "grid.N=256");
    CHECK(m.at("grid.N") == "256");
    CHECK_THROWS_AS(apply_override(m, "grid.bogus=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(m, "no_equals_sign"), ConfigError);
    CHECK_THROWS_AS(preset_config("nope"), ConfigError);
}

TEST_CASE("every preset builds a valid config")
{
    for (const auto& name : preset_names()) {
        INFO(name);
        const auto cfg = build_config(preset_config(name));
        CHECK(cfg.name == name);
        CHECK_NOTHROW(cfg.solver.validate());
        const auto rho = initial_density(cfg);
        CHECK(rho.mass() == Approx(1.0));
        CHECK_NOTHROW(potential_of(cfg));
    }
    CHECK(preset_names().size() >= 7);
}

TEST_CASE("typed config rejects inconsistent values")
{
    ConfigMap m = preset_config("heat-baseline");
    m["potential.kind"] = "martian";
    CHECK_THROWS_AS(build_config(m), ConfigError);
    m = preset_config("heat-baseline");
    m["initial.mean"] = "1,2";
    CHECK_THROWS_AS(build_config(m), ConfigError);
    m = preset_config("heat-baseline");
    m["grid.N"] = "abc";
    CHECK_THROWS_AS(build_config(m), ConfigError);
}

TEST_CASE("missing config files are reported by path")
{
    try {
        load_config_file("/definitely/not/here.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("config not found: /definitely/not/here.cfg") != std::string::npos);
    }
}

TEST_CASE("CSV numbers round-trip exactly")
{
    for (double v : {0.1, -1.0 / 3.0, 1e-300, 6.02214076e23}) CHECK(std::stod(format_csv_number(v)) == v);
    CHECK(format_csv_number(std::nan("")) == "nan");
    CHECK(format_csv_number(-INFINITY) == "-inf");
}

TEST_CASE("invariants flag a mass leak and a rising free energy")
{
    std::vector<DiagnosticsRecord> recs(3);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        auto& r = recs[i];
        r.tau = 0.1 * static_cast<double>(i);
        r.mass = 1.0;
        r.second_moment = 1.0;
        r.E1 = 0.1;
        r.I1 = 0.5;
        r.l1_dist_G = 0.1;
        r.ck_rhs = 2 * std::sqrt(0.1);
        r.lsi_gap = 0.15;
        r.F_tilde = 1.0;
    }
    auto find = [](const std::vector<InvariantResult>& v, const std::string& n) {
        for (const auto& i : v)
            if (i.name == n) return i;
        throw std::out_of_range(n);
    };
    CHECK(find(check_invariants(recs, 1, 1.0, true), "mass_drift").pass);
    recs[2].mass = 1.0 + 1e-9;
    CHECK_FALSE(find(check_invariants(recs, 1, 1.0, true), "mass_drift").pass);
    recs[2].mass = 1.0;
    recs[2].E1 = -1e-3;
    CHECK_FALSE(find(check_invariants(recs, 1, 1.0, true), "E1_nonnegative").pass);
    CHECK_FALSE(find(check_invariants(recs, 1, 1.0, false), "solver_completed").pass);
}

TEST_CASE("heat run writes series, summary and plots")
{
    ConfigMap m = preset_config("heat-baseline");
    const fs::path dir = fs::temp_directory_path() / "aggdiff_test_heat";
    fs::remove_all(dir);
    apply_override(m, "grid.N=128");
    apply_override(m, "solver.tau_end=2");
    apply_override(m, "rates.e1_window=0.5,2");
    apply_override(m, "rates.l1_window=0.5,2");
    apply_override(m, "rates.n2_window=0.5,2");
    m["output.dir"] = dir.string();
    const auto cfg = build_config(m);
    const auto res = run_experiment(cfg);
    CHECK(res.ok());
    REQUIRE(res.fits.at("E1"));
    CHECK(res.fits.at("E1")->slope == Approx(-2.0).margin(0.05));

    const auto table = read_csv(dir / "series.csv");
    CHECK(table.rows.size() == res.run.records.size());
    CHECK(table.column("E1").back() == res.run.records.back().E1);
    CHECK_THROWS_AS(table.column("nope"), std::out_of_range);

    std::ifstream in(dir / "summary.json");
    const auto j = nlohmann::json::parse(in);
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    CHECK(keys == std::vector<std::string>{"config_echo", "invariants", "rate_fits", "runtime_seconds", "theorem_report"});
    CHECK(j["config_echo"]["grid.N"] == "128");
    CHECK(fs::exists(dir / "plots" / "E1.svg"));
    fs::remove_all(dir);
}

TEST_CASE("svg plot drops nonpositive points on log axes")
{
    const auto svg = svg_plot("t", "x", "y", {1, 2, 3}, {1.0, 0.0, 0.5}, false, true);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("Gaussian closed forms and the cone amplitude")
{
    const auto g = gaussian_closed_forms(2, 0.0, 1.0);
    CHECK(g.E1 == Approx(0.0).margin(1e-15));
    CHECK(g.E2 == Approx(0.0).margin(1e-15));
    CHECK(g.N2 == Approx(2.0));
    CHECK(g.entropy == Approx(-std::log(2 * M_PI * M_E)));
    // A_K solves int max(0, A - K|x|^a) |log(...)| = C0: larger K needs larger A.
    const double a1 = lemma44_amplitude(10.0, 1.0, 1.0), a2 = lemma44_amplitude(100.0, 1.0, 1.0);
    CHECK(a1 > 0.0);
    CHECK(a2 > a1);
}

TEST_CASE("property suites run and unknown names are rejected")
{
    for (const std::string suite : {"quadrature", "fractional"}) {
        for (const auto& line : run_check_suite(suite, 1)) {
            INFO(suite << ": " << line.name << " " << line.detail);
            CHECK(line.pass);
        }
    }
    CHECK_THROWS_AS(run_check_suite("nosuchsuite"), std::invalid_argument);
}
