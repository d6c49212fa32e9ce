#include "ammfut/equilibrium.hpp"
#include "ammfut/error.hpp"

#include <doctest.h>

#include <cmath>

using namespace ammfut;

namespace {

MarketParams one_period() {
    MarketParams p;
    p.periods = 1;
    return p;
}

// Single-scenario market where both producers have ample capacity and the GA
// is priced out: the ReP2A supplies 60000 t alone.
struct Toy {
    MarketParams params = one_period();
    ProducerSpec ra = ProducerSpec::rep2a_default();
    ProducerSpec ga = ProducerSpec::ga_default();
    ScenarioSet scen;

    Toy() {
        ra.prod_upper = 60000.0 / 730;
        ga.prod_upper = 60000.0 / 730;
        std::vector<double> energy{1e6};
        scen = ScenarioSet::deterministic(energy);
    }
};

ScenarioSet base_scenarios(int n = 100) {
    return generate_scenarios(WindProfile::synthetic_default(), 45, n, 2, 730, 20240601);
}

double max_abs(const ScenarioField& a, const ScenarioField& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

}  // namespace

TEST_CASE("hand-solved toy equilibrium") {
    Toy toy;
    IterationConfig cfg;
    const double expected = 4850 - 60000 / 16.44;  // below the GA marginal cost of 1320
    for (double gamma : {1.0, 0.5}) {
        cfg.gamma = gamma;
        auto out = solve_spot_equilibrium(toy.ra, toy.ga, toy.scen, toy.params, cfg);
        CHECK(out.prices(0, 0) == doctest::Approx(expected).epsilon(1e-6));
        CHECK(out.ra_sales(0, 0) == doctest::Approx(60000));
        CHECK(out.ga_sales(0, 0) == doctest::Approx(0).epsilon(1e-9));
        CHECK(best_response_residual(out, toy.ra, toy.ga, toy.scen, toy.params) <= 1e-6);
        CHECK(out.residual <= cfg.epsilon);
    }
}

TEST_CASE("symmetric toy is damping invariant") {
    Toy toy;
    toy.ra.prod_upper = toy.ga.prod_upper = 20;
    toy.ga.variable_cost = 0;
    toy.ra.fixed_cost = toy.ga.fixed_cost = 41000;
    IterationConfig cfg;
    cfg.gamma = 1.0;
    auto a = solve_spot_equilibrium(toy.ra, toy.ga, toy.scen, toy.params, cfg);
    cfg.gamma = 0.5;
    auto b = solve_spot_equilibrium(toy.ra, toy.ga, toy.scen, toy.params, cfg);
    CHECK(std::abs(a.prices(0, 0) - b.prices(0, 0)) <= cfg.epsilon);
    CHECK(a.prices(0, 0) == doctest::Approx(4850 - 2 * 20 * 730 / 16.44));
    CHECK(a.f_ra_d == doctest::Approx(a.f_ga_d));
}

TEST_CASE("perturbed prices break the best response") {
    Toy toy;
    auto out = solve_spot_equilibrium(toy.ra, toy.ga, toy.scen, toy.params, {});
    out.prices(0, 0) += 100;
    CHECK(best_response_residual(out, toy.ra, toy.ga, toy.scen, toy.params) > 0);
}

TEST_CASE("base case converges to a consistent fixed point") {
    const auto scen = base_scenarios();
    const MarketParams params;
    const auto ra = ProducerSpec::rep2a_default(), ga = ProducerSpec::ga_default();
    IterationConfig cfg;
    auto out = solve_spot_equilibrium(ra, ga, scen, params, cfg);
    CHECK(out.iterations <= 50);
    CHECK(out.residual < 1e-3);
    CHECK(price_consistency(out, params) <= cfg.epsilon);
    const double scale = std::max({1.0, std::abs(out.f_ra_d), std::abs(out.f_ga_d)});
    CHECK(best_response_residual(out, ra, ga, scen, params) <= 10 * cfg.epsilon * scale);
    CHECK(out.trace.size() == static_cast<std::size_t>(out.iterations));

    // Physical bounds.
    for (std::size_t w = 0; w < scen.size(); ++w)
        for (std::size_t t = 0; t < scen.periods(); ++t) {
            CHECK(out.ra_sales(w, t) >= -1e-9);
            CHECK(out.ra_sales(w, t) <= out.ra_production(w, t) + 1e-9);
            CHECK(out.ra_production(w, t) <= ra.period_upper(params) + 1e-9);
            CHECK(out.ga_sales(w, t) >= -1e-9);
            CHECK(out.ga_sales(w, t) <= out.ga_production(w, t) + 1e-9);
            CHECK(out.ga_production(w, t) <= ga.period_upper(params) + 1e-9);
            CHECK(out.prices(w, t) > 0);
        }

    // Utilities equal the CVaR of realized per-scenario losses recomputed
    // from the profit accounting.
    std::vector<double> ra_loss(scen.size()), ga_loss(scen.size());
    const auto none = FuturesContract::none(scen.periods());
    const std::vector<double> nothing(scen.periods(), 0.0);
    for (std::size_t w = 0; w < scen.size(); ++w) {
        ra_loss[w] = -profit_rep2a(out.ra_sales.row(w), out.ra_production.row(w), none, out.prices.row(w), ra,
                                   params).total;
        ga_loss[w] = -profit_ga(out.ga_sales.row(w), out.ga_production.row(w), none, nothing, out.prices.row(w), ga,
                                params).total;
    }
    CHECK(cvar(ra_loss, scen.probs, ra.alpha).cvar == doctest::Approx(out.f_ra_d).epsilon(1e-6));
    CHECK(cvar(ga_loss, scen.probs, ga.alpha).cvar == doctest::Approx(out.f_ga_d).epsilon(1e-6));
}

TEST_CASE("fixed points from different damping agree") {
    const auto scen = base_scenarios(30);
    const MarketParams params;
    const auto ra = ProducerSpec::rep2a_default(), ga = ProducerSpec::ga_default();
    IterationConfig cfg;
    cfg.gamma = 0.5;
    const auto ref = solve_spot_equilibrium(ra, ga, scen, params, cfg);
    for (double gamma : {0.3, 1.0}) {
        cfg.gamma = gamma;
        auto out = solve_spot_equilibrium(ra, ga, scen, params, cfg);
        CHECK(max_abs(out.prices, ref.prices) <= 10 * cfg.epsilon);
    }
}

TEST_CASE("monopoly against a trading-only participant") {
    const auto scen = base_scenarios(20);
    const MarketParams params;
    auto out = solve_spot_equilibrium(ProducerSpec::rep2a_default(), ProducerSpec::nptp(0.5), scen, params, {});
    for (double s : out.ga_sales.values()) CHECK(s == 0);
    for (std::size_t w = 0; w < scen.size(); ++w)
        for (std::size_t t = 0; t < scen.periods(); ++t)
            CHECK(std::abs(out.prices(w, t) - (params.rho_max - out.ra_sales(w, t) / params.k_am)) <= 1e-4);
    CHECK(out.f_ga_d == 0);
}

TEST_CASE("non-convergence carries the residual trace") {
    const auto scen = base_scenarios(10);
    IterationConfig cfg;
    cfg.max_iters = 2;
    try {
        solve_spot_equilibrium(ProducerSpec::rep2a_default(), ProducerSpec::ga_default(), scen, {}, cfg);
        FAIL("expected NonConvergence");
    } catch (const NonConvergence& e) {
        CHECK(e.residual_trace().size() == 2);
    }
}

TEST_CASE("quantity-anticipating GA withholds output") {
    // At rho_max 4850 marginal revenue stays above the variable cost at full
    // capacity, so both behaviours coincide; a weaker market separates them.
    const auto scen = base_scenarios(30);
    MarketParams params;
    params.rho_max = 3500;
    const auto ra = ProducerSpec::rep2a_default(), ga = ProducerSpec::ga_default();
    auto taker = solve_spot_equilibrium(ra, ga, scen, params, {});
    auto cournot =
        solve_spot_equilibrium(ra, ga, scen, params, {}, AnticipationMode{Anticipation::CournotPwl, 32});
    double taker_out = 0, cournot_out = 0;
    for (double v : taker.ga_production.values()) taker_out += v;
    for (double v : cournot.ga_production.values()) cournot_out += v;
    CHECK(cournot_out < 0.99 * taker_out);
    CHECK(price_consistency(cournot, params) <= 1e-4);
}

TEST_CASE("capacity scaling leaves prices invariant") {
    const auto scen = base_scenarios(20);
    MarketParams params;
    auto ra = ProducerSpec::rep2a_default(), ga = ProducerSpec::ga_default();
    auto base = solve_spot_equilibrium(ra, ga, scen, params, {});

    auto scen2 = scen;
    for (double& e : scen2.energy.values()) e *= 2;
    params.k_am *= 2;
    ra.prod_upper *= 2;
    ra.fixed_cost *= 2;
    ga.prod_upper *= 2;
    ga.fixed_cost *= 2;
    auto scaled = solve_spot_equilibrium(ra, ga, scen2, params, {});
    CHECK(max_abs(base.prices, scaled.prices) <= 10 * 1e-4);
    CHECK(scaled.f_ra_d == doctest::Approx(2 * base.f_ra_d).epsilon(1e-6));
}
