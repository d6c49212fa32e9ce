#include "ammfut/equilibrium.hpp"

#include "ammfut/error.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ammfut {

void IterationConfig::validate() const {
    if (!(gamma > 0 && gamma <= 1)) throw std::invalid_argument("gamma must lie in (0,1]");
    if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
    if (max_gamma_halvings < 0) throw std::invalid_argument("max_gamma_halvings must be non-negative");
    if (initial_price && !std::isfinite(*initial_price)) throw std::invalid_argument("initial_price must be finite");
}

MarketResponse solve_producers(const ProducerSpec& ra_spec, const ProducerSpec& ga_spec, const ScenarioSet& scenarios,
                               const MarketParams& params, const PriceField& prices, const FuturesContract& contract,
                               const AnticipationMode& anticipation, SolveRoute route) {
    MarketResponse out;
    out.ra_program = build_rep2a_program(ra_spec, scenarios, prices, contract, params);
    out.ra = solve_program(out.ra_program, route);
    GaInputs in;
    in.ra_production = out.ra.production;
    in.delivered = delivered_tons(contract, out.ra.production);
    in.anticipation = anticipation;
    if (anticipation.kind == Anticipation::CournotPwl) in.competitor_sales = out.ra.sales;
    out.ga_program = build_ga_program(ga_spec, scenarios, prices, contract, params, in);
    out.ga = solve_program(out.ga_program, route);
    return out;
}

PriceField clearing_prices(const ScenarioField& ra_sales, const ScenarioField& ga_sales, const MarketParams& params) {
    if (ra_sales.scenarios() != ga_sales.scenarios() || ra_sales.periods() != ga_sales.periods())
        throw std::invalid_argument("sales fields differ in shape");
    PriceField out(ra_sales.scenarios(), ra_sales.periods());
    for (std::size_t i = 0; i < out.values().size(); ++i)
        out.values()[i] =
            spot_price(std::max(ga_sales.values()[i], 0.0), std::max(ra_sales.values()[i], 0.0), params);
    return out;
}

namespace {

double max_abs_diff(const ScenarioField& a, const ScenarioField& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

}  // namespace

EquilibriumOutcome solve_spot_equilibrium(const ProducerSpec& ra_spec, const ProducerSpec& ga_spec,
                                          const ScenarioSet& scenarios, const MarketParams& params,
                                          const IterationConfig& config, const AnticipationMode& anticipation) {
    config.validate();
    params.validate();
    scenarios.validate();
    const std::size_t W = scenarios.size(), T = scenarios.periods();
    if (T != static_cast<std::size_t>(params.periods))
        throw std::invalid_argument("scenario periods do not match the market horizon");
    const auto none = FuturesContract::none(T);

    PriceField prices(W, T, config.initial_price.value_or(params.rho_max / 2));
    std::vector<PriceField> history{prices};
    double gamma = config.gamma;
    int halvings = 0;
    ScenarioField prev_ra, prev_ga;
    EquilibriumOutcome out;
    std::vector<double> residuals;

    for (int k = 1; k <= config.max_iters; ++k) {
        MarketResponse resp = solve_producers(ra_spec, ga_spec, scenarios, params, prices, none, anticipation);
        const PriceField target = clearing_prices(resp.ra.sales, resp.ga.sales, params);
        double residual = max_abs_diff(target, prices);
        if (!prev_ra.empty()) {
            residual = std::max(residual, max_abs_diff(resp.ra.sales, prev_ra));
            residual = std::max(residual, max_abs_diff(resp.ga.sales, prev_ga));
        } else {
            residual = std::max(residual, config.epsilon * 2);  // need two sweeps to compare sales
        }
        residuals.push_back(residual);

        if (residual <= config.epsilon) {
            out.prices = prices;
            out.ra_sales = std::move(resp.ra.sales);
            out.ga_sales = std::move(resp.ga.sales);
            out.ra_production = std::move(resp.ra.production);
            out.ga_production = std::move(resp.ga.production);
            out.ra_losses = std::move(resp.ra.losses);
            out.ga_losses = std::move(resp.ga.losses);
            out.f_ra_d = resp.ra.utility;
            out.f_ga_d = resp.ga.utility;
            out.iterations = k;
            out.residual = residual;
            out.gamma = gamma;
            out.trace.push_back({k, 0.0, residual, out.f_ra_d, out.f_ga_d, gamma});
            return out;
        }

        PriceField next(W, T);
        double change = 0;
        for (std::size_t i = 0; i < next.values().size(); ++i) {
            next.values()[i] = (1 - gamma) * prices.values()[i] + gamma * target.values()[i];
            change = std::max(change, std::abs(next.values()[i] - prices.values()[i]));
        }
        out.trace.push_back({k, change, residual, resp.ra.utility, resp.ga.utility, gamma});

        // Two-cycle: the new field returns to the one from two steps back
        // while still moving.
        if (history.size() >= 2 && halvings < config.max_gamma_halvings &&
            max_abs_diff(next, history[history.size() - 2]) <= config.epsilon && change > config.epsilon) {
            gamma *= 0.5;
            ++halvings;
        }
        history.push_back(next);
        if (history.size() > 3) history.erase(history.begin());
        prices = std::move(next);
        prev_ra = std::move(resp.ra.sales);
        prev_ga = std::move(resp.ga.sales);
    }
    throw NonConvergence("spot equilibrium did not converge within " + std::to_string(config.max_iters) +
                             " iterations",
                         residuals);
}

double best_response_residual(const EquilibriumOutcome& outcome, const ProducerSpec& ra_spec,
                              const ProducerSpec& ga_spec, const ScenarioSet& scenarios, const MarketParams& params,
                              const AnticipationMode& anticipation) {
    const auto resp = solve_producers(ra_spec, ga_spec, scenarios, params, outcome.prices,
                                      FuturesContract::none(scenarios.periods()), anticipation);
    return std::max(std::abs(resp.ra.utility - outcome.f_ra_d), std::abs(resp.ga.utility - outcome.f_ga_d));
}

double price_consistency(const EquilibriumOutcome& outcome, const MarketParams& params) {
    return max_abs_diff(outcome.prices, clearing_prices(outcome.ra_sales, outcome.ga_sales, params));
}

}  // namespace ammfut
