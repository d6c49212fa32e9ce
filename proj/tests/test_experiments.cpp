#include "ammfut/experiments.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace ammfut;

namespace {

ModelSetup small_setup(int n = 30) {
    ModelSetup s;
    s.n_scenarios = n;
    return s;
}

}  // namespace

TEST_CASE("utility distribution statistics") {
    std::vector<double> profits{-3, 1, 4, 1, 5, 9, 2, 6};
    std::vector<double> probs(8, 0.125);
    auto d = utility_distribution(profits, probs, 0.5);
    double integral = 0;
    for (std::size_t b = 0; b < d.densities.size(); ++b) integral += d.densities[b] * (d.bin_edges[b + 1] - d.bin_edges[b]);
    CHECK(std::abs(integral - 1.0) <= 1e-9);
    CHECK(d.densities.size() == 30);
    CHECK(d.bin_edges.front() == -3);
    CHECK(d.bin_edges.back() == 9);
    CHECK(d.mean == doctest::Approx(25.0 / 8));
    CHECK(d.cvar <= d.var);

    std::vector<double> losses(8);
    for (int i = 0; i < 8; ++i) losses[i] = -profits[i];
    CHECK(std::abs(d.var + value_at_risk(losses, probs, 0.5)) <= 1e-12);
    CHECK(std::abs(d.cvar + cvar(losses, probs, 0.5).cvar) <= 1e-12);
}

TEST_CASE("constant profits give a degenerate histogram") {
    std::vector<double> profits(4, 2.5e6), probs(4, 0.25);
    auto d = utility_distribution(profits, probs, 0.5);
    CHECK(d.var == 2.5e6);
    CHECK(d.cvar == 2.5e6);
    CHECK(d.stddev == 0);
    REQUIRE(d.densities.size() == 1);
    CHECK(d.densities[0] * (d.bin_edges[1] - d.bin_edges[0]) == doctest::Approx(1.0));
}

TEST_CASE("study names") {
    for (auto k : {StudyKind::Base, StudyKind::UncertaintySweep, StudyKind::AlphaSweep, StudyKind::CapacityGrid,
                   StudyKind::Nptp})
        CHECK(study_kind_from_string(to_string(k)) == k);
    CHECK_THROWS(study_kind_from_string("bogus"));
}

TEST_CASE("base study") {
    auto setup = small_setup(100);
    auto r = run_base(setup);
    CHECK(r.share.status == BargainStatus::Agreed);
    CHECK(r.share.gain_ra() > 0);
    CHECK(r.share.gain_ga() > 0);
    CHECK(r.fixed_quantity.status == BargainStatus::Failed);
    CHECK(r.ra_after.stddev < r.ra_before.stddev);
    CHECK(r.ga_after.cvar > r.ga_before.cvar);
    CHECK(r.warnings.empty());
    CHECK(r.ra_before.profits.size() == 100);
}

TEST_CASE("trading-only participant has zero pre-trade utility") {
    auto setup = small_setup(20);
    setup.ga = ProducerSpec::nptp(0.2);
    auto scen = setup.scenarios();
    auto eq = solve_spot_equilibrium(setup.ra, setup.ga, scen, setup.market, setup.equilibrium);
    CHECK(eq.f_ga_d == 0);
}

TEST_CASE("uncertainty sweep rows match standalone runs") {
    auto setup = small_setup();
    StudySpec spec;
    spec.study = StudyKind::UncertaintySweep;
    spec.bounds = {0, 45};
    spec.workers = 2;
    auto r = run_sweep(setup, spec);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[0].keys.front().first == "bound_mw");
    CHECK(r.rows[0].keys.front().second == 0);
    CHECK(std::abs(r.rows[0].gain_ra) < 1e-3 * std::abs(r.rows[0].f_ra_d));
    CHECK(r.rows[1].gain_ra > 0);
    for (std::size_t i = 0; i < 2; ++i) {
        auto s = setup;
        s.disturbance_bound = spec.bounds[i];
        auto eq = solve_spot_equilibrium(s.ra, s.ga, s.scenarios(), s.market, s.equilibrium);
        CHECK(eq.f_ra_d == r.rows[i].f_ra_d);
        CHECK(eq.f_ga_d == r.rows[i].f_ga_d);
    }
}

TEST_CASE("sweeps are identical for any worker count") {
    auto setup = small_setup(20);
    StudySpec spec;
    spec.study = StudyKind::AlphaSweep;
    spec.alphas = {0.4, 0.8, 0.95};
    auto serial = run_sweep(setup, spec);
    spec.workers = 3;
    auto parallel = run_sweep(setup, spec);
    REQUIRE(serial.rows.size() == parallel.rows.size());
    for (std::size_t i = 0; i < serial.rows.size(); ++i) {
        CHECK(serial.rows[i].keys == parallel.rows[i].keys);
        CHECK(serial.rows[i].f_ra_a == parallel.rows[i].f_ra_a);
        CHECK(serial.rows[i].mean_q == parallel.rows[i].mean_q);
        CHECK(serial.rows[i].status == parallel.rows[i].status);
    }
}

TEST_CASE("failing grid points are recorded, not thrown") {
    auto setup = small_setup(10);
    setup.equilibrium.max_iters = 1;
    StudySpec spec;
    spec.study = StudyKind::UncertaintySweep;
    spec.bounds = {10, 20};
    auto r = run_sweep(setup, spec);
    REQUIRE(r.rows.size() == 2);
    for (const auto& row : r.rows) {
        CHECK(row.status == "Error");
        CHECK_FALSE(row.error.empty());
    }
}

TEST_CASE("capacity grid scales fixed costs and has a profitable region") {
    auto setup = small_setup(10);
    StudySpec spec;
    spec.study = StudyKind::CapacityGrid;
    spec.workers = 4;
    auto r = run_sweep(setup, spec);
    REQUIRE(r.rows.size() == 36);
    // Profitable before trading means a negative CVaR of loss for both.
    std::set<std::pair<int, int>> ok;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            const auto& row = r.rows[i * 6 + j];
            CHECK(row.keys[0].second == spec.ra_capacities[i]);
            CHECK(row.keys[1].second == spec.ga_capacities[j]);
            if (row.status != "Error" && row.f_ra_d < 0 && row.f_ga_d < 0) ok.insert({i, j});
        }
    REQUIRE_FALSE(ok.empty());
    // 4-connected.
    std::set<std::pair<int, int>> seen{*ok.begin()};
    std::vector<std::pair<int, int>> stack{*ok.begin()};
    while (!stack.empty()) {
        auto [i, j] = stack.back();
        stack.pop_back();
        for (auto [di, dj] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
            std::pair<int, int> n{i + di, j + dj};
            if (ok.count(n) && !seen.count(n)) {
                seen.insert(n);
                stack.push_back(n);
            }
        }
    }
    CHECK(seen.size() == ok.size());
}

TEST_CASE("setup validation") {
    ModelSetup s;
    CHECK_NOTHROW(s.validate());
    s.ga = ProducerSpec::rep2a_default();
    CHECK_THROWS(s.validate());
    s = {};
    s.market.periods = 6;
    CHECK_THROWS(s.validate());
    s = {};
    s.disturbance_bound = 1000;
    CHECK_THROWS(s.validate());
    StudySpec spec;
    spec.alphas = {1.0};
    CHECK_THROWS(spec.validate());
}
