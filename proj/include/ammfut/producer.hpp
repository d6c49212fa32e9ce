#pragma once

#include "ammfut/field.hpp"
#include "ammfut/lp.hpp"
#include "ammfut/market.hpp"
#include "ammfut/scenario.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace ammfut {

enum class Anticipation {
    PriceTaker,  // scenario prices are parameters
    CournotPwl,  // GA internalizes its own effect on the spot price
};

struct AnticipationMode {
    Anticipation kind = Anticipation::PriceTaker;
    int segments = 32;
};

const char* to_string(Anticipation kind);
Anticipation anticipation_from_string(std::string_view name);

enum class ProducerRole { ReP2A, GA };

inline constexpr std::size_t kNoRow = static_cast<std::size_t>(-1);

/// Scenario CVaR program of one producer together with the maps from model
/// symbols to LP columns and rows.
///
/// Losses are written as L_w = loss_constant[w] + sum_j loss_coef[j] x_j, and
/// the CVaR linearization contributes `theta`, `xi[w]` and the row
/// loss_row[w]: sum_j loss_coef[j] x_j - theta - xi_w <= -loss_constant[w].
/// Every other row touches a single (scenario, period) cell.
struct ProducerProgram {
    LinearProgram lp;
    ProducerRole role = ProducerRole::ReP2A;
    ProducerSpec spec;
    MarketParams params;
    AnticipationMode anticipation;
    std::vector<double> probs;
    ScenarioField energy;            // MWh, ReP2A only
    PriceField prices;
    FuturesContract contract;
    ScenarioField delivered;         // GA only: tons received per cell
    ScenarioField delivered_rate;    // GA only: d delivered / d position
    ScenarioField competitor_sales;  // GA Cournot only

    ScenarioGrid<std::size_t> pro, sell;
    ScenarioGrid<std::size_t> seg_begin;  // GA Cournot: first segment column
    std::size_t segments = 0;
    ScenarioGrid<std::size_t> energy_row, balance_row, delivery_row;  // inequality rows, kNoRow if absent
    ScenarioGrid<std::size_t> seg_sum_row;                            // equality rows, kNoRow if absent
    std::size_t theta = 0;
    std::vector<std::size_t> xi, loss_row;
    std::vector<double> loss_constant;
    std::vector<double> loss_coef;  // per LP column

    std::size_t scenarios() const { return probs.size(); }
    std::size_t periods() const { return prices.periods(); }
};

ProducerProgram build_rep2a_program(const ProducerSpec& spec, const ScenarioSet& scenarios, const PriceField& prices,
                                    const FuturesContract& contract, const MarketParams& params);

struct GaInputs {
    ScenarioField delivered;         // tons received from the ReP2A per cell; empty means none
    ScenarioField ra_production;     // used for d delivered / d position in share mode
    ScenarioField competitor_sales;  // required for CournotPwl
    AnticipationMode anticipation;
};

ProducerProgram build_ga_program(const ProducerSpec& spec, const ScenarioSet& scenarios, const PriceField& prices,
                                 const FuturesContract& contract, const MarketParams& params,
                                 const GaInputs& inputs = {});

/// Tons delivered per cell under the contract; throws InfeasibleDelivery.
ScenarioField delivered_tons(const FuturesContract& contract, const ScenarioField& ra_production);

enum class SolveRoute {
    Decomposed,  // per-cell LPs combined through the CVaR tail weights
    FullLp,      // one simplex solve of the whole program
};

struct ProducerResult {
    LpSolution solution;  // indexed like program.lp
    ScenarioField production, sales;
    std::vector<double> losses;  // per scenario, CNY
    double utility = 0.0;        // CVaR of loss
};

/// Solves the program. The decomposed route exploits that every constraint
/// except the CVaR rows is local to one cell and CVaR is monotone in each
/// loss, so minimizing each cell and taking the CVaR of the resulting losses
/// is optimal; multipliers are assembled from the tail weights. Ties within a
/// cell are broken toward higher output.
/// Throws InfeasibleProgram naming the first infeasible period.
ProducerResult solve_program(const ProducerProgram& program, SolveRoute route = SolveRoute::Decomposed);

/// Loss of every scenario for a given LP point.
std::vector<double> scenario_losses(const ProducerProgram& program, const std::vector<double>& x);

enum class ContractParam { Position, Price };

LpDerivative program_derivative(const ProducerProgram& program, ContractParam param, std::size_t t);

struct Sensitivity {
    double value = 0.0;
    bool degenerate = false;
};

/// Envelope derivative of the optimal CVaR of loss with respect to one
/// contract parameter in period t.
Sensitivity optimal_value_sensitivity(const ProducerProgram& program, const LpSolution& solution,
                                      ContractParam param, std::size_t t);

}  // namespace ammfut
