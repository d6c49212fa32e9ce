#include "ammfut/error.hpp"
#include "ammfut/market.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace ammfut;

namespace {

FuturesContract share(double q, double rho_f) { return {SettlementMode::Share, {q}, {rho_f}}; }
FuturesContract fixed(double q, double rho_f) { return {SettlementMode::FixedQuantity, {q}, {rho_f}}; }

MarketParams one_period() {
    MarketParams p;
    p.periods = 1;
    return p;
}

std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

}  // namespace

TEST_CASE("spot price follows the linear inverse demand") {
    MarketParams p;
    CHECK(spot_price(0, 0, p) == doctest::Approx(4850.0));
    CHECK(spot_price(16667, 16667, p) == doctest::Approx(2822.4).epsilon(1e-4));
    CHECK(spot_price(0, 8333.33, p) == doctest::Approx(4343.1).epsilon(1e-4));
    CHECK_THROWS_AS(spot_price(-1, 0, p), std::invalid_argument);
    // Unclamped for extreme supply.
    CHECK(spot_price(1e5, 1e5, p) < 0);
}

TEST_CASE("spot price slope is exactly -1/k_am") {
    MarketParams p;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> q(0, 40000), dq(1, 1000);
    for (int i = 0; i < 100; ++i) {
        const double a = q(rng), b = q(rng), d = dq(rng);
        const double slope = (spot_price(a + d, b, p) - spot_price(a, b, p)) / d;
        CHECK(slope == doctest::Approx(-1.0 / p.k_am).epsilon(1e-9));
        CHECK(spot_price(a, b + d, p) < spot_price(a, b, p));
    }
}

TEST_CASE("futures settlement") {
    CHECK(settle_futures(share(0.5, 0), 0, 10000) == 5000);
    CHECK(settle_futures(share(0.0, 0), 0, 12345) == 0);
    CHECK(settle_futures(fixed(5000, 0), 0, 9000) == 5000);
    CHECK(settle_futures(FuturesContract::none(1), 0, 9000) == 0);
    try {
        settle_futures({SettlementMode::FixedQuantity, {0, 5000}, {0, 0}}, 1, 4000);
        FAIL("expected InfeasibleDelivery");
    } catch (const InfeasibleDelivery& e) {
        CHECK(e.period() == 1);
    }
    CHECK_THROWS_AS(settle_futures(share(0.5, 0), 0, -1), std::invalid_argument);
    CHECK_THROWS_AS(settle_futures(share(0.5, 0), 3, 10), std::out_of_range);
}

TEST_CASE("contract validation") {
    CHECK_NOTHROW(share(0.3, 1e7).validate(1));
    CHECK_THROWS(share(1.2, 0).validate(1));
    CHECK_THROWS(share(0.5, -1).validate(1));
    CHECK_THROWS(fixed(-1, 0).validate(1));
    CHECK_THROWS(FuturesContract{SettlementMode::None, {0.1}, {0}}.validate(1));
    CHECK_THROWS(share(0.5, 0).validate(2));
}

TEST_CASE("producer spec validation") {
    CHECK_NOTHROW(ProducerSpec::rep2a_default().validate());
    CHECK_NOTHROW(ProducerSpec::ga_default().validate());
    CHECK_NOTHROW(ProducerSpec::nptp(0.2).validate());
    auto s = ProducerSpec::ga_default();
    s.alpha = 1.2;
    CHECK_THROWS_WITH(s.validate(), "alpha must lie in [0,1)");
    s = ProducerSpec::ga_default();
    s.prod_lower = 30;
    CHECK_THROWS(s.validate());
    s = ProducerSpec::rep2a_default();
    s.eta_p2a = 0;
    CHECK_THROWS(s.validate());
    s = ProducerSpec::nptp(0.5);
    s.fixed_cost = 1;
    CHECK_THROWS(s.validate());
}

TEST_CASE("ReP2A profit") {
    const auto p = one_period();
    const auto spec = ProducerSpec::rep2a_default();
    std::vector<double> sales{10000}, prod{10000}, price{3000};
    auto c = profit_rep2a(sales, prod, share(0.5, 3.34e7), price, spec, p);
    CHECK(c.total == doctest::Approx(1.04e6));
    CHECK(c.total == doctest::Approx(c.spot_revenue + c.futures_cashflow - c.production_cost));

    std::vector<double> zero{0};
    auto idle = profit_rep2a(zero, zero, FuturesContract::none(1), price, spec, p);
    CHECK(idle.total == doctest::Approx(-3.066e7));

    auto full = profit_rep2a(sales, prod, share(1.0, 2e7), price, spec, p);
    CHECK(full.spot_revenue == 0);
    CHECK(full.total == doctest::Approx(2e7 - 42000.0 * 730));

    std::vector<double> short_prod{4000};
    std::vector<double> short_sales{4000};
    CHECK_THROWS_AS(profit_rep2a(short_sales, short_prod, fixed(5000, 3000), price, spec, p), InfeasibleDelivery);
}

TEST_CASE("GA profit") {
    const auto p = one_period();
    std::vector<double> q{16667}, delivered{5000}, price{3000}, zero{0};
    auto c = profit_ga(q, q, share(0.5, 3.34e7), delivered, price, ProducerSpec::ga_default(), p);
    CHECK(c.total == doctest::Approx(-3.63e6).epsilon(2e-3));
    CHECK(c.total == doctest::Approx(c.spot_revenue + c.futures_cashflow - c.production_cost));

    auto idle = profit_ga(zero, zero, FuturesContract::none(1), zero, price, ProducerSpec::ga_default(), p);
    CHECK(idle.total == doctest::Approx(-2.993e7));

    auto nptp = profit_ga(zero, zero, FuturesContract::none(1), zero, price, ProducerSpec::nptp(0.5), p);
    CHECK(nptp.total == 0);
}

TEST_CASE("futures cashflows cancel and ownership is conserved") {
    MarketParams p;
    p.periods = 3;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    const auto ra = ProducerSpec::rep2a_default(), ga = ProducerSpec::ga_default();
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> ra_prod(3), ra_sell(3), ga_prod(3), ga_sell(3), q(3), rf(3), rf2(3), price(3), m(3);
        for (int t = 0; t < 3; ++t) {
            ra_prod[t] = 16000 * u(rng);
            ra_sell[t] = ra_prod[t] * u(rng);
            ga_prod[t] = 16000 * u(rng);
            ga_sell[t] = ga_prod[t] * u(rng);
            q[t] = u(rng);
            rf[t] = 4e7 * u(rng);
            rf2[t] = 4e7 * u(rng);
            price[t] = spot_price(ga_sell[t], ra_sell[t], p);
        }
        FuturesContract c1{SettlementMode::Share, q, rf}, c2{SettlementMode::Share, q, rf2};
        for (int t = 0; t < 3; ++t) m[t] = settle_futures(c1, t, ra_prod[t]);
        const double total1 = profit_rep2a(ra_sell, ra_prod, c1, price, ra, p).total +
                              profit_ga(ga_sell, ga_prod, c1, m, price, ga, p).total;
        const double total2 = profit_rep2a(ra_sell, ra_prod, c2, price, ra, p).total +
                              profit_ga(ga_sell, ga_prod, c2, m, price, ga, p).total;
        CHECK(total1 == doctest::Approx(total2).epsilon(1e-12));

        // Spot revenue terms of the two producers rebuild total physical supply.
        const double spot = profit_rep2a(ra_sell, ra_prod, c1, price, ra, p).spot_revenue +
                            profit_ga(ga_sell, ga_prod, c1, m, price, ga, p).spot_revenue;
        double physical = 0;
        for (int t = 0; t < 3; ++t) physical += (ra_sell[t] + ga_sell[t]) * price[t];
        CHECK(spot == doctest::Approx(physical).epsilon(1e-12));
    }
}

TEST_CASE("value at risk") {
    std::vector<double> l{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(value_at_risk(l, uniform(10), 0.5) == 5);
    CHECK(value_at_risk(l, uniform(10), 0.0) == 1);
    std::vector<double> one{42};
    CHECK(value_at_risk(one, uniform(1), 0.7) == 42);
    std::vector<double> empty;
    CHECK_THROWS(value_at_risk(empty, empty, 0.5));
    std::vector<double> bad{0.3, 0.3};
    std::vector<double> two{1, 2};
    CHECK_THROWS(value_at_risk(two, bad, 0.5));
    CHECK_THROWS(value_at_risk(two, uniform(2), 1.0));
}

TEST_CASE("conditional value at risk") {
    std::vector<double> l{0, 10};
    CHECK(cvar(l, uniform(2), 0.5).cvar == doctest::Approx(10));
    std::vector<double> m{3, -1, 7, 2};
    std::vector<double> pm{0.1, 0.2, 0.3, 0.4};
    CHECK(cvar(m, pm, 0.0).cvar == doctest::Approx(0.3 - 0.2 + 2.1 + 0.8));
    std::vector<double> flat(5, 17.5);
    for (double a : {0.0, 0.3, 0.9}) CHECK(cvar(flat, uniform(5), a).cvar == doctest::Approx(17.5));

    auto r = cvar(m, pm, 0.5);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(r.excess[i] == doctest::Approx(std::max(m[i] - r.theta, 0.0)));
}

TEST_CASE("cvar matches the sorted-tail oracle on random instances") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> size(1, 1000);
    std::normal_distribution<double> loss(0, 1e6);
    std::uniform_real_distribution<double> w(0.01, 1);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = size(rng);
        std::vector<double> l(n), p(n);
        double total = 0;
        for (int i = 0; i < n; ++i) {
            // Repeated values exercise ties at the boundary atom.
            l[i] = trial % 3 == 0 ? std::round(loss(rng) / 2e5) * 2e5 : loss(rng);
            p[i] = trial % 2 == 0 ? 1.0 : w(rng);
            total += p[i];
        }
        for (double& v : p) v /= total;
        for (double a : {0.0, 0.25, 0.5, 0.8, 0.95}) {
            const double ours = cvar(l, p, a).cvar;
            const double ref = oracle::sorted_tail_cvar(l, p, a);
            CHECK(std::abs(ours - ref) <= 1e-9 * std::max(1.0, std::abs(ref)));
        }
    }
}

TEST_CASE("cvar is monotone in alpha and bounded below by var") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> loss(5, 3);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> l(57);
        for (double& v : l) v = loss(rng);
        const auto p = uniform(l.size());
        const double lo = *std::min_element(l.begin(), l.end());
        double prev = -INFINITY;
        for (int k = 0; k <= 9; ++k) {
            const double a = 0.1 * k;
            const double c = cvar(l, p, a).cvar, v = value_at_risk(l, p, a);
            CHECK(c >= prev - 1e-12);
            CHECK(c >= v - 1e-12);
            CHECK(v >= lo);
            prev = c;
        }
    }
}

TEST_CASE("tail weights are a probability vector concentrated on the tail") {
    std::vector<double> l{5, 1, 9, 3};
    auto w = cvar_tail_weights(l, uniform(4), 0.6);
    double sum = 0;
    for (double v : w) sum += v;
    CHECK(sum == doctest::Approx(1.0));
    CHECK(w[2] == doctest::Approx(0.625));
    CHECK(w[0] == doctest::Approx(0.375));
    CHECK(w[1] == 0);
    CHECK(w[3] == 0);
    double weighted = 0;
    for (std::size_t i = 0; i < 4; ++i) weighted += w[i] * l[i];
    CHECK(weighted == doctest::Approx(cvar(l, uniform(4), 0.6).cvar));
}
