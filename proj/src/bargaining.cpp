#include "ammfut/bargaining.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ammfut {

std::string_view to_string(BargainStatus status) {
    switch (status) {
    case BargainStatus::Agreed: return "Agreed";
    case BargainStatus::AgreedNeutral: return "AgreedNeutral";
    case BargainStatus::Failed: return "Failed";
    case BargainStatus::NotConverged: return "NotConverged";
    }
    return "?";
}

void BargainConfig::validate() const {
    if (!(gamma > 0 && gamma <= 1)) throw std::invalid_argument("gamma must lie in (0,1]");
    if (!(beta_rho > 0)) throw std::invalid_argument("beta_rho must be positive");
    if (!(beta_q > 0)) throw std::invalid_argument("beta_q must be positive");
    if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
    if (max_halvings < 0) throw std::invalid_argument("max_halvings must be non-negative");
    if (!(epsilon_utility >= 0)) throw std::invalid_argument("epsilon_utility must be non-negative");
    if (!(initial_position >= 0 && initial_position <= 1))
        throw std::invalid_argument("initial_position must lie in [0,1]");
}

double BargainOutcome::mean_position() const {
    if (contract.positions.empty()) return 0.0;
    return std::accumulate(contract.positions.begin(), contract.positions.end(), 0.0) /
           static_cast<double>(contract.positions.size());
}

double BargainOutcome::mean_price() const {
    if (contract.prices.empty()) return 0.0;
    return std::accumulate(contract.prices.begin(), contract.prices.end(), 0.0) /
           static_cast<double>(contract.prices.size());
}

double nash_objective(double f_ra_a, double f_ra_d, double f_ga_a, double f_ga_d) {
    return (f_ra_d - f_ra_a) * (f_ga_d - f_ga_a);
}

NashGradient nash_gradients(const ProducerProgram& ra_program, const LpSolution& ra_solution,
                            const ProducerProgram& ga_program, const LpSolution& ga_solution, double s_ra,
                            double s_ga) {
    const std::size_t T = ra_program.periods();
    NashGradient g;
    g.d_position.resize(T);
    g.d_price.resize(T);
    g.ra_surplus_position.resize(T);
    g.ga_surplus_position.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        const auto ra_q = optimal_value_sensitivity(ra_program, ra_solution, ContractParam::Position, t);
        const auto ga_q = optimal_value_sensitivity(ga_program, ga_solution, ContractParam::Position, t);
        const auto ra_p = optimal_value_sensitivity(ra_program, ra_solution, ContractParam::Price, t);
        const auto ga_p = optimal_value_sensitivity(ga_program, ga_solution, ContractParam::Price, t);
        g.degenerate = g.degenerate || ra_q.degenerate || ga_q.degenerate;
        g.ra_surplus_position[t] = -ra_q.value;
        g.ga_surplus_position[t] = -ga_q.value;
        g.d_position[t] = s_ga * -ra_q.value + s_ra * -ga_q.value;
        g.d_price[t] = s_ga * -ra_p.value + s_ra * -ga_p.value;
    }
    return g;
}

namespace {

std::vector<double> worst_case_output(const ScenarioField& production) {
    std::vector<double> out(production.periods(), kInf);
    for (std::size_t w = 0; w < production.scenarios(); ++w)
        for (std::size_t t = 0; t < production.periods(); ++t) out[t] = std::min(out[t], production(w, t));
    return out;
}

}  // namespace

FuturesContract initial_contract(SettlementMode mode, const EquilibriumOutcome& disagreement,
                                 const std::vector<double>& probs, double initial_position) {
    const std::size_t W = disagreement.prices.scenarios(), T = disagreement.prices.periods();
    FuturesContract c{mode, std::vector<double>(T, 0.0), std::vector<double>(T, 0.0)};
    if (mode == SettlementMode::None) return c;
    const auto floor = worst_case_output(disagreement.ra_production);
    for (std::size_t t = 0; t < T; ++t) {
        double value = 0, price = 0;
        for (std::size_t w = 0; w < W; ++w) {
            value += probs[w] * disagreement.ra_production(w, t) * disagreement.prices(w, t);
            price += probs[w] * disagreement.prices(w, t);
        }
        if (mode == SettlementMode::Share) {
            c.positions[t] = initial_position;
            c.prices[t] = std::max(value, 0.0);
        } else {
            c.positions[t] = initial_position * floor[t];
            c.prices[t] = std::max(price, 0.0);
        }
    }
    return c;
}

namespace {

struct Evaluation {
    MarketResponse resp;
    double s_ra = 0, s_ga = 0, F = 0;
    PriceField next_prices;
    NashGradient grad;

    bool rational() const { return s_ra >= 0 && s_ga >= 0; }
    double total() const { return s_ra + s_ga; }
};

// Individually rational points rank above irrational ones; among rational
// points F decides, otherwise the total surplus does.
bool no_worse(const Evaluation& a, const Evaluation& b) {
    if (a.rational() != b.rational()) return a.rational();
    const double va = a.rational() ? a.F : a.total();
    const double vb = b.rational() ? b.F : b.total();
    return va >= vb - 1e-12 * std::max(std::abs(vb), 1.0);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

BargainOutcome bargain(const ProducerSpec& ra_spec, const ProducerSpec& ga_spec, const ScenarioSet& scenarios,
                       const MarketParams& params, SettlementMode mode, const BargainConfig& config,
                       const IterationConfig& equilibrium_config, const AnticipationMode& anticipation) {
    config.validate();
    if (mode == SettlementMode::None) throw std::invalid_argument("bargaining needs a settlement mode");
    BargainOutcome out;
    out.disagreement = solve_spot_equilibrium(ra_spec, ga_spec, scenarios, params, equilibrium_config, anticipation);
    out.f_ra_d = out.disagreement.f_ra_d;
    out.f_ga_d = out.disagreement.f_ga_d;
    const std::size_t T = scenarios.periods();

    FuturesContract contract = config.initial_contract
                                   ? *config.initial_contract
                                   : initial_contract(mode, out.disagreement, scenarios.probs, config.initial_position);
    if (contract.mode != mode) throw std::invalid_argument("initial contract mode differs from the requested mode");
    contract.validate(T);

    auto upper_box = [&](const ScenarioField& ra_production) {
        return mode == SettlementMode::Share ? std::vector<double>(T, 1.0) : worst_case_output(ra_production);
    };
    std::vector<double> box = upper_box(out.disagreement.ra_production);
    for (std::size_t t = 0; t < T; ++t) contract.positions[t] = std::clamp(contract.positions[t], 0.0, box[t]);

    auto evaluate = [&](const FuturesContract& c, const PriceField& prices) {
        Evaluation e;
        e.resp = solve_producers(ra_spec, ga_spec, scenarios, params, prices, c, anticipation);
        e.s_ra = out.f_ra_d - e.resp.ra.utility;
        e.s_ga = out.f_ga_d - e.resp.ga.utility;
        e.F = e.s_ra * e.s_ga;
        const PriceField target = clearing_prices(e.resp.ra.sales, e.resp.ga.sales, params);
        e.next_prices = PriceField(prices.scenarios(), prices.periods());
        for (std::size_t i = 0; i < target.values().size(); ++i)
            e.next_prices.values()[i] = (1 - config.gamma) * prices.values()[i] + config.gamma * target.values()[i];
        e.grad = nash_gradients(e.resp.ra_program, e.resp.ra.solution, e.resp.ga_program, e.resp.ga.solution, e.s_ra,
                                e.s_ga);
        return e;
    };
    auto record = [&](int k, const Evaluation& e, const FuturesContract& c, bool accepted) {
        BargainTracePoint p;
        p.iteration = k;
        p.nash_objective = e.F;
        p.s_ra = e.s_ra;
        p.s_ga = e.s_ga;
        p.f_ra = e.resp.ra.utility;
        p.f_ga = e.resp.ga.utility;
        p.positions = c.positions;
        p.prices = c.prices;
        p.mean_position = std::accumulate(c.positions.begin(), c.positions.end(), 0.0) / static_cast<double>(T);
        p.mean_price = std::accumulate(c.prices.begin(), c.prices.end(), 0.0) / static_cast<double>(T);
        p.accepted = accepted;
        out.trace.push_back(std::move(p));
    };

    PriceField prices = out.disagreement.prices;
    Evaluation cur = evaluate(contract, prices);
    record(0, cur, contract, true);

    double beta_q = config.beta_q;
    double grad_scale = 0;
    int rejections = 0;
    bool converged = false;
    int k = 1;
    for (; k <= config.max_iters; ++k) {
        // Step 5: ascend F in the positions (the total surplus while either
        // party is still worse off than at the disagreement point) ...
        box = upper_box(cur.resp.ra.production);
        std::vector<double> direction(T);
        for (std::size_t t = 0; t < T; ++t)
            direction[t] = cur.rational() ? cur.grad.d_position[t]
                                          : cur.grad.ra_surplus_position[t] + cur.grad.ga_surplus_position[t];
        for (double g : direction) grad_scale = std::max(grad_scale, std::abs(g));
        FuturesContract proposal = contract;
        const double shrink = cur.grad.degenerate ? 0.5 : 1.0;
        double ds_ra = 0, ds_ga = 0;
        for (std::size_t t = 0; t < T; ++t) {
            const double step = grad_scale > 0 ? beta_q * shrink * direction[t] / grad_scale * box[t] : 0.0;
            proposal.positions[t] = std::clamp(contract.positions[t] + step, 0.0, box[t]);
            const double dq = proposal.positions[t] - contract.positions[t];
            ds_ra += cur.grad.ra_surplus_position[t] * dq;
            ds_ga += cur.grad.ga_surplus_position[t] * dq;
        }
        // ... then move the futures prices along the transfer direction. Both
        // surpluses are linear in x = sum Q_t rho_t with slopes +1 and -1, so
        // F is a concave quadratic in x and the step below is its exact
        // maximizer at the predicted surpluses.
        const double qq = std::inner_product(proposal.positions.begin(), proposal.positions.end(),
                                             proposal.positions.begin(), 0.0);
        if (qq > 0) {
            const double dx = config.beta_rho * ((cur.s_ga + ds_ga) - (cur.s_ra + ds_ra)) / 2;
            for (std::size_t t = 0; t < T; ++t)
                proposal.prices[t] = std::max(0.0, proposal.prices[t] + proposal.positions[t] * dx / qq);
        }

        // Steps 3-4 at the proposal.
        Evaluation next = evaluate(proposal, prices);
        if (!no_worse(next, cur)) {
            record(k, next, proposal, false);
            beta_q *= 0.5;
            if (++rejections > config.max_halvings) {
                converged = true;  // no improving step left at this resolution
                break;
            }
            continue;
        }
        record(k, next, proposal, true);
        rejections = 0;
        beta_q = std::min(config.beta_q, beta_q * 2);

        // Step 6: all five quantity families must settle.
        double change = 0;
        for (std::size_t t = 0; t < T; ++t) {
            change = std::max(change, std::abs(proposal.positions[t] - contract.positions[t]));
            change = std::max(change, std::abs(proposal.prices[t] - contract.prices[t]) /
                                          std::max(1.0, std::abs(contract.prices[t])));
        }
        change = std::max(change, max_abs_diff(next.resp.ra.sales.values(), cur.resp.ra.sales.values()));
        change = std::max(change, max_abs_diff(next.resp.ga.sales.values(), cur.resp.ga.sales.values()));
        change = std::max(change, max_abs_diff(next.next_prices.values(), prices.values()));

        contract = std::move(proposal);
        prices = next.next_prices;
        cur = std::move(next);
        if (change <= config.epsilon) {
            converged = true;
            break;
        }
    }
    out.iterations = std::min(k, config.max_iters);
    out.converged = converged;

    // Step 7: fresh solves at the final contract and prices.
    const Evaluation final_eval = evaluate(contract, prices);
    out.contract = contract;
    out.prices = prices;
    out.f_ra_a = final_eval.resp.ra.utility;
    out.f_ga_a = final_eval.resp.ga.utility;
    out.nash_objective = nash_objective(out.f_ra_a, out.f_ra_d, out.f_ga_a, out.f_ga_d);
    out.ra_production = final_eval.resp.ra.production;
    out.ra_sales = final_eval.resp.ra.sales;
    out.ga_production = final_eval.resp.ga.production;
    out.ga_sales = final_eval.resp.ga.sales;
    out.ra_losses = final_eval.resp.ra.losses;
    out.ga_losses = final_eval.resp.ga.losses;

    const bool improves = out.gain_ra() > config.epsilon_utility && out.gain_ga() > config.epsilon_utility;
    if (converged) {
        out.status = improves ? BargainStatus::Agreed : BargainStatus::Failed;
    } else {
        const bool neutral = std::abs(out.gain_ra()) <= config.epsilon_utility &&
                             std::abs(out.gain_ga()) <= config.epsilon_utility;
        out.status = neutral ? BargainStatus::AgreedNeutral : BargainStatus::NotConverged;
    }
    return out;
}

bool verify_agreement(const BargainOutcome& outcome, const ProducerSpec& ra_spec, const ProducerSpec& ga_spec,
                      const ScenarioSet& scenarios, const MarketParams& params, double epsilon_utility,
                      const AnticipationMode& anticipation) {
    if (outcome.contract.mode == SettlementMode::None) return false;
    const auto resp =
        solve_producers(ra_spec, ga_spec, scenarios, params, outcome.prices, outcome.contract, anticipation);
    return outcome.f_ra_d - resp.ra.utility > epsilon_utility && outcome.f_ga_d - resp.ga.utility > epsilon_utility;
}

}  // namespace ammfut
