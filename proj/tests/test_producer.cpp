#include "ammfut/error.hpp"
#include "ammfut/producer.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace ammfut;

namespace {

MarketParams one_period() {
    MarketParams p;
    p.periods = 1;
    return p;
}

PriceField flat(std::size_t w, std::size_t t, double rho) { return PriceField(w, t, rho); }

ScenarioSet random_scenarios(std::mt19937_64& rng, std::size_t W, std::size_t T) {
    std::uniform_real_distribution<double> e(40000, 160000);
    ScenarioSet s;
    s.energy = ScenarioField(W, T);
    for (double& v : s.energy.values()) v = e(rng);
    s.probs.assign(W, 1.0 / static_cast<double>(W));
    return s;
}

PriceField random_prices(std::mt19937_64& rng, std::size_t W, std::size_t T) {
    std::uniform_real_distribution<double> r(1500, 4500);
    PriceField p(W, T);
    for (double& v : p.values()) v = r(rng);
    return p;
}

}  // namespace

TEST_CASE("one-period ReP2A program") {
    auto spec = ProducerSpec::rep2a_default();
    spec.prod_upper = 16666.0 / 730.0;
    const double e[] = {100000};
    auto scen = ScenarioSet::deterministic(e);
    auto prog = build_rep2a_program(spec, scen, flat(1, 1, 3000), FuturesContract::none(1), one_period());
    for (auto route : {SolveRoute::Decomposed, SolveRoute::FullLp}) {
        auto res = solve_program(prog, route);
        CHECK(res.production(0, 0) == doctest::Approx(10300));
        CHECK(res.sales(0, 0) == doctest::Approx(10300));
        CHECK(res.utility == doctest::Approx(-(10300.0 * 3000 - 42000.0 * 730)));
    }

    const double none[] = {0};
    auto idle = build_rep2a_program(spec, ScenarioSet::deterministic(none), flat(1, 1, 3000),
                                    FuturesContract::none(1), one_period());
    CHECK(solve_program(idle).utility == doctest::Approx(42000.0 * 730));
}

TEST_CASE("full share position still produces at the energy bound") {
    auto spec = ProducerSpec::rep2a_default();
    const double e[] = {100000};
    FuturesContract c{SettlementMode::Share, {1.0}, {2.0e7}};
    auto prog = build_rep2a_program(spec, ScenarioSet::deterministic(e), flat(1, 1, 3000), c, one_period());
    auto res = solve_program(prog);
    CHECK(res.production(0, 0) == doctest::Approx(10300));
    CHECK(res.utility == doctest::Approx(42000.0 * 730 - 2.0e7));
}

TEST_CASE("price-taking GA follows marginal cost") {
    auto spec = ProducerSpec::ga_default();
    const double e[] = {0};
    auto scen = ScenarioSet::deterministic(e);
    auto high = solve_program(build_ga_program(spec, scen, flat(1, 1, 3000), FuturesContract::none(1), one_period()));
    CHECK(high.production(0, 0) == doctest::Approx(22.83 * 730));
    CHECK(high.sales(0, 0) == doctest::Approx(22.83 * 730));
    auto low = solve_program(build_ga_program(spec, scen, flat(1, 1, 1000), FuturesContract::none(1), one_period()));
    CHECK(low.production(0, 0) == doctest::Approx(0));
}

TEST_CASE("NPTP utility is the CVaR of its trading loss") {
    auto spec = ProducerSpec::nptp(0.5);
    ScenarioSet scen;
    scen.energy = ScenarioField(2, 1, 0.0);
    scen.probs = {0.5, 0.5};
    PriceField prices(2, 1);
    prices(0, 0) = 3000;
    prices(1, 0) = 2000;
    FuturesContract c{SettlementMode::Share, {0.5}, {1.0e7}};
    GaInputs in;
    in.delivered = ScenarioField(2, 1, 5000.0);
    in.ra_production = ScenarioField(2, 1, 10000.0);
    auto res = solve_program(build_ga_program(spec, scen, prices, c, one_period(), in));
    CHECK(res.production(0, 0) == 0);
    // Losses: -(5000*3000 - 5e6) = -1e7 and -(5000*2000 - 5e6) = -5e6.
    CHECK(res.utility == doctest::Approx(-5.0e6));
}

TEST_CASE("fixed-quantity shortfall names the period") {
    auto spec = ProducerSpec::rep2a_default();
    const double e[] = {100000, 20000};
    MarketParams p;
    p.periods = 2;
    FuturesContract c{SettlementMode::FixedQuantity, {1000, 5000}, {3000, 3000}};
    try {
        build_rep2a_program(spec, ScenarioSet::deterministic(e), flat(1, 2, 3000), c, p);
        FAIL("expected InfeasibleProgram");
    } catch (const InfeasibleProgram& err) {
        CHECK(err.period() == 1);
    }
}

TEST_CASE("decomposed and full routes agree") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 6; ++trial) {
        const std::size_t W = 3 + trial, T = 3;
        MarketParams params;
        params.periods = static_cast<int>(T);
        auto scen = random_scenarios(rng, W, T);
        auto prices = random_prices(rng, W, T);
        FuturesContract c{SettlementMode::Share, {0.3, 0.6, 0.0}, {1.0e7, 2.0e7, 0.0}};
        auto ra = build_rep2a_program(ProducerSpec::rep2a_default(), scen, prices, c, params);
        auto a = solve_program(ra, SolveRoute::Decomposed);
        auto b = solve_program(ra, SolveRoute::FullLp);
        CHECK(a.utility == doctest::Approx(b.utility).epsilon(1e-9));
        CHECK(kkt_residuals(ra.lp, a.solution).primal <= 1e-7);
        CHECK(kkt_residuals(ra.lp, a.solution).dual <= 1e-7);
        CHECK(kkt_residuals(ra.lp, a.solution).complementarity <= 1e-7);

        GaInputs in;
        in.ra_production = a.production;
        in.delivered = delivered_tons(c, a.production);
        auto ga = build_ga_program(ProducerSpec::ga_default(), scen, prices, c, params, in);
        CHECK(solve_program(ga).utility == doctest::Approx(solve_program(ga, SolveRoute::FullLp).utility).epsilon(1e-9));

        in.competitor_sales = a.sales;
        in.anticipation = {Anticipation::CournotPwl, 8};
        auto gc = build_ga_program(ProducerSpec::ga_default(), scen, prices, c, params, in);
        CHECK(solve_program(gc).utility == doctest::Approx(solve_program(gc, SolveRoute::FullLp).utility).epsilon(1e-9));
    }
}

TEST_CASE("program objective equals market CVaR of its losses") {
    std::mt19937_64 rng(5);
    const std::size_t W = 7, T = 2;
    MarketParams params;
    params.periods = 2;
    auto scen = random_scenarios(rng, W, T);
    auto prog = build_rep2a_program(ProducerSpec::rep2a_default(), scen, random_prices(rng, W, T),
                                    FuturesContract::none(T), params);
    auto res = solve_program(prog, SolveRoute::FullLp);
    CHECK(res.utility == doctest::Approx(cvar(res.losses, scen.probs, 0.5).cvar).epsilon(1e-9));
    CHECK(prog.lp.objective(res.solution.primal) == doctest::Approx(res.utility).epsilon(1e-9));
}

TEST_CASE("envelope sensitivities match finite differences") {
    std::mt19937_64 rng(3);
    const std::size_t W = 5, T = 2;
    MarketParams params;
    params.periods = 2;
    auto scen = random_scenarios(rng, W, T);
    auto prices = random_prices(rng, W, T);
    const FuturesContract base{SettlementMode::Share, {0.4, 0.7}, {1.5e7, 2.5e7}};

    auto ra_value = [&](FuturesContract c) {
        return solve_program(build_rep2a_program(ProducerSpec::rep2a_default(), scen, prices, c, params)).utility;
    };
    auto ra = build_rep2a_program(ProducerSpec::rep2a_default(), scen, prices, base, params);
    auto ra_sol = solve_program(ra);
    for (std::size_t t = 0; t < T; ++t) {
        auto fq = [&](double q) {
            auto c = base;
            c.positions[t] = q;
            return ra_value(c);
        };
        auto fp = [&](double p) {
            auto c = base;
            c.prices[t] = p;
            return ra_value(c);
        };
        auto sq = optimal_value_sensitivity(ra, ra_sol.solution, ContractParam::Position, t);
        auto sp = optimal_value_sensitivity(ra, ra_sol.solution, ContractParam::Price, t);
        CHECK(sq.value == doctest::Approx(oracle::central_difference(fq, base.positions[t])).epsilon(1e-4));
        CHECK(sp.value == doctest::Approx(-base.positions[t]));
        CHECK(sp.value == doctest::Approx(oracle::central_difference(fp, base.prices[t])).epsilon(1e-4));
    }

    // GA with deliveries tied to a fixed ReP2A production profile.
    const auto ra_prod = ra_sol.production;
    auto ga_value = [&](FuturesContract c) {
        GaInputs in;
        in.ra_production = ra_prod;
        in.delivered = delivered_tons(c, ra_prod);
        return solve_program(build_ga_program(ProducerSpec::ga_default(), scen, prices, c, params, in)).utility;
    };
    GaInputs in;
    in.ra_production = ra_prod;
    in.delivered = delivered_tons(base, ra_prod);
    auto ga = build_ga_program(ProducerSpec::ga_default(), scen, prices, base, params, in);
    auto ga_sol = solve_program(ga);
    for (std::size_t t = 0; t < T; ++t) {
        auto fq = [&](double q) {
            auto c = base;
            c.positions[t] = q;
            return ga_value(c);
        };
        auto sq = optimal_value_sensitivity(ga, ga_sol.solution, ContractParam::Position, t);
        CHECK(sq.value == doctest::Approx(oracle::central_difference(fq, base.positions[t])).epsilon(1e-4));
        CHECK(optimal_value_sensitivity(ga, ga_sol.solution, ContractParam::Price, t).value ==
              doctest::Approx(base.positions[t]));
    }
}

TEST_CASE("parameters absent from the program have zero sensitivity") {
    const double e[] = {100000};
    auto prog = build_rep2a_program(ProducerSpec::rep2a_default(), ScenarioSet::deterministic(e), flat(1, 1, 3000),
                                    FuturesContract::none(1), one_period());
    auto res = solve_program(prog);
    CHECK(optimal_value_sensitivity(prog, res.solution, ContractParam::Position, 0).value == 0);
    CHECK(optimal_value_sensitivity(prog, res.solution, ContractParam::Price, 0).value == 0);
}

TEST_CASE("raising the futures price helps the seller and hurts the buyer") {
    std::mt19937_64 rng(9);
    const std::size_t W = 6, T = 2;
    MarketParams params;
    params.periods = 2;
    auto scen = random_scenarios(rng, W, T);
    auto prices = random_prices(rng, W, T);
    double prev_ra = kInf, prev_ga = -kInf;
    for (double rho_f : {0.0, 1e7, 2e7, 3e7}) {
        FuturesContract c{SettlementMode::Share, {0.5, 0.5}, {rho_f, rho_f}};
        auto ra = solve_program(build_rep2a_program(ProducerSpec::rep2a_default(), scen, prices, c, params));
        GaInputs in;
        in.ra_production = ra.production;
        in.delivered = delivered_tons(c, ra.production);
        auto ga = solve_program(build_ga_program(ProducerSpec::ga_default(), scen, prices, c, params, in));
        CHECK(ra.utility <= prev_ra);
        CHECK(ga.utility >= prev_ga);
        prev_ra = ra.utility;
        prev_ga = ga.utility;
    }
}
