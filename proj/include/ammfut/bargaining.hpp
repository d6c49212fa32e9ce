#pragma once

#include "ammfut/equilibrium.hpp"
#include "ammfut/market.hpp"
#include "ammfut/producer.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace ammfut {

enum class BargainStatus {
    Agreed,         // both parties gain more than epsilon_utility
    AgreedNeutral,  // loop did not settle, but no contract changes either utility
    Failed,         // converged without a mutually beneficial contract
    NotConverged,
};

std::string_view to_string(BargainStatus status);

struct BargainConfig {
    double gamma = 0.5;      // spot price damping
    double beta_rho = 1.0;   // fraction of the exact surplus-balancing price step
    double beta_q = 0.1;     // position step after normalization by the running max gradient
    double epsilon = 1e-4;   // abs. on sales, prices, positions; relative on futures prices
    int max_iters = 300;
    int max_halvings = 6;
    double epsilon_utility = 100.0;  // CNY
    double initial_position = 0.5;   // share, or fraction of worst-case output in fixed-quantity mode
    std::optional<FuturesContract> initial_contract;

    void validate() const;
};

struct BargainTracePoint {
    int iteration = 0;
    double nash_objective = 0;
    double s_ra = 0, s_ga = 0;  // surpluses, positive = improvement
    double f_ra = 0, f_ga = 0;
    double mean_position = 0, mean_price = 0;
    bool accepted = true;
    std::vector<double> positions, prices;
};

struct BargainOutcome {
    BargainStatus status = BargainStatus::NotConverged;
    FuturesContract contract;
    double f_ra_a = 0, f_ga_a = 0;  // agreement utilities, CVaR of loss
    double f_ra_d = 0, f_ga_d = 0;  // disagreement utilities
    double nash_objective = 0;
    PriceField prices;
    int iterations = 0;
    bool converged = false;
    std::vector<BargainTracePoint> trace;
    EquilibriumOutcome disagreement;
    // Per-scenario results at the agreement contract and prices.
    ScenarioField ra_production, ra_sales, ga_production, ga_sales;
    std::vector<double> ra_losses, ga_losses;

    double gain_ra() const { return f_ra_d - f_ra_a; }
    double gain_ga() const { return f_ga_d - f_ga_a; }
    double mean_position() const;
    double mean_price() const;
};

/// Product of the two surpluses f^d - f^a. Negative when exactly one party
/// loses.
double nash_objective(double f_ra_a, double f_ra_d, double f_ga_a, double f_ga_d);

struct NashGradient {
    std::vector<double> d_position, d_price;                  // dF/dQ_t, dF/drho_t
    std::vector<double> ra_surplus_position, ga_surplus_position;  // ds/dQ_t per party
    bool degenerate = false;
};

/// Product-rule gradient of F from the envelope sensitivities of both
/// programs: dF = s_ga ds_ra + s_ra ds_ga with ds = -df.
NashGradient nash_gradients(const ProducerProgram& ra_program, const LpSolution& ra_solution,
                            const ProducerProgram& ga_program, const LpSolution& ga_solution, double s_ra,
                            double s_ga);

/// Initial contract derived from the disagreement point.
FuturesContract initial_contract(SettlementMode mode, const EquilibriumOutcome& disagreement,
                                 const std::vector<double>& probs, double initial_position);

BargainOutcome bargain(const ProducerSpec& ra_spec, const ProducerSpec& ga_spec, const ScenarioSet& scenarios,
                       const MarketParams& params, SettlementMode mode, const BargainConfig& config,
                       const IterationConfig& equilibrium_config = {}, const AnticipationMode& anticipation = {});

/// Fresh solves at the outcome's contract and prices; true iff both
/// utilities improve on the disagreement point by more than epsilon_utility.
bool verify_agreement(const BargainOutcome& outcome, const ProducerSpec& ra_spec, const ProducerSpec& ga_spec,
                      const ScenarioSet& scenarios, const MarketParams& params, double epsilon_utility,
                      const AnticipationMode& anticipation = {});

}  // namespace ammfut
