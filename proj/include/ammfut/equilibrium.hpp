#pragma once

#include "ammfut/field.hpp"
#include "ammfut/market.hpp"
#include "ammfut/producer.hpp"
#include "ammfut/scenario.hpp"

#include <optional>
#include <vector>

namespace ammfut {

struct IterationConfig {
    double gamma = 0.5;     // price damping in (0, 1]
    double epsilon = 1e-4;  // t for sales, CNY/t for prices
    int max_iters = 200;
    std::optional<double> initial_price;  // defaults to rho_max / 2
    int max_gamma_halvings = 6;

    void validate() const;
};

/// Both producers' best responses to one price field, solved Gauss-Seidel
/// style: the ReP2A first, then the GA facing the ReP2A's deliveries and sales.
struct MarketResponse {
    ProducerProgram ra_program, ga_program;
    ProducerResult ra, ga;
};

MarketResponse solve_producers(const ProducerSpec& ra_spec, const ProducerSpec& ga_spec, const ScenarioSet& scenarios,
                               const MarketParams& params, const PriceField& prices, const FuturesContract& contract,
                               const AnticipationMode& anticipation, SolveRoute route = SolveRoute::Decomposed);

/// Inverse demand applied cellwise to total sales.
PriceField clearing_prices(const ScenarioField& ra_sales, const ScenarioField& ga_sales, const MarketParams& params);

struct EquilibriumTracePoint {
    int iteration = 0;
    double max_price_change = 0;  // damped update, CNY/t
    double residual = 0;          // convergence measure of this iteration
    double f_ra = 0, f_ga = 0;
    double gamma = 0;
};

struct EquilibriumOutcome {
    PriceField prices;  // the field both reported best responses were computed at
    ScenarioField ra_sales, ga_sales, ra_production, ga_production;
    std::vector<double> ra_losses, ga_losses;  // per scenario, CNY
    double f_ra_d = 0, f_ga_d = 0;            // CVaR of loss
    int iterations = 0;
    double residual = 0;
    double gamma = 0;  // damping in effect at termination
    std::vector<EquilibriumTracePoint> trace;
};

/// Damped Gauss-Seidel fixed point of the spot market without futures.
/// Convergence requires the changes in both producers' sales (t) and the gap
/// between the clearing price and the price the producers faced (CNY/t) to be
/// below epsilon. A detected two-cycle halves gamma. Throws NonConvergence.
EquilibriumOutcome solve_spot_equilibrium(const ProducerSpec& ra_spec, const ProducerSpec& ga_spec,
                                          const ScenarioSet& scenarios, const MarketParams& params,
                                          const IterationConfig& config, const AnticipationMode& anticipation = {});

/// Largest absolute change in either producer's optimal utility when both
/// programs are re-solved at the outcome's prices.
double best_response_residual(const EquilibriumOutcome& outcome, const ProducerSpec& ra_spec,
                              const ProducerSpec& ga_spec, const ScenarioSet& scenarios, const MarketParams& params,
                              const AnticipationMode& anticipation = {});

/// Largest deviation of the outcome's prices from the inverse demand of its sales.
double price_consistency(const EquilibriumOutcome& outcome, const MarketParams& params);

}  // namespace ammfut
