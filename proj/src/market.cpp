#include "ammfut/market.hpp"

#include "ammfut/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ammfut {

InfeasibleDelivery::InfeasibleDelivery(std::size_t period, double requested, double available)
    : Error("infeasible delivery in period " + std::to_string(period) + ": position " +
            std::to_string(requested) + " t exceeds renewable production " +
            std::to_string(available) + " t"),
      period_(period) {}

ConfigError::ConfigError(const std::string& field, const std::string& message, int line, int column)
    : Error([&] {
          std::string text = field.empty() ? message : field + ": " + message;
          if (line > 0) text += " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")";
          return text;
      }()),
      field_(field), line_(line), column_(column) {}

void MarketParams::validate() const {
    if (!(rho_max > 0)) throw std::invalid_argument("rho_max must be positive");
    if (!(k_am > 0)) throw std::invalid_argument("k_am must be positive");
    if (periods < 1) throw std::invalid_argument("periods must be at least 1");
    if (!(hours_per_period > 0)) throw std::invalid_argument("hours_per_period must be positive");
}

std::string_view to_string(ProducerKind kind) {
    switch (kind) {
    case ProducerKind::ReP2A: return "ReP2A";
    case ProducerKind::GA: return "GA";
    case ProducerKind::NPTP: return "NPTP";
    }
    return "?";
}

ProducerKind producer_kind_from_string(std::string_view name) {
    if (name == "ReP2A" || name == "rep2a") return ProducerKind::ReP2A;
    if (name == "GA" || name == "ga") return ProducerKind::GA;
    if (name == "NPTP" || name == "nptp") return ProducerKind::NPTP;
    throw std::invalid_argument("unknown producer kind '" + std::string(name) + "'");
}

void ProducerSpec::validate() const {
    if (!(prod_lower >= 0) || !(prod_upper >= prod_lower))
        throw std::invalid_argument("production limits must satisfy 0 <= prod_lower <= prod_upper");
    if (!(alpha >= 0 && alpha < 1)) throw std::invalid_argument("alpha must lie in [0,1)");
    if (!(fixed_cost >= 0)) throw std::invalid_argument("fixed_cost must be non-negative");
    if (!(variable_cost >= 0)) throw std::invalid_argument("variable_cost must be non-negative");
    switch (kind) {
    case ProducerKind::ReP2A:
        if (!(eta_p2a > 0)) throw std::invalid_argument("eta_p2a must be positive for a ReP2A producer");
        if (variable_cost != 0) throw std::invalid_argument("variable_cost must be 0 for a ReP2A producer");
        break;
    case ProducerKind::GA:
        break;
    case ProducerKind::NPTP:
        if (prod_upper != 0 || prod_lower != 0 || fixed_cost != 0 || variable_cost != 0)
            throw std::invalid_argument("an NPTP must have zero capacity and zero costs");
        break;
    }
}

ProducerSpec ProducerSpec::rep2a_default() {
    ProducerSpec s;
    s.kind = ProducerKind::ReP2A;
    s.prod_upper = 22.83;
    s.prod_lower = 0.0;
    s.eta_p2a = 0.103;
    s.fixed_cost = 42000.0;
    s.variable_cost = 0.0;
    s.alpha = 0.5;
    return s;
}

ProducerSpec ProducerSpec::ga_default() {
    ProducerSpec s;
    s.kind = ProducerKind::GA;
    s.prod_upper = 22.83;
    s.prod_lower = 0.0;
    s.fixed_cost = 41000.0;
    s.variable_cost = 1320.0;
    s.alpha = 0.5;
    return s;
}

ProducerSpec ProducerSpec::nptp(double alpha) {
    ProducerSpec s;
    s.kind = ProducerKind::NPTP;
    s.prod_upper = 0.0;
    s.prod_lower = 0.0;
    s.fixed_cost = 0.0;
    s.variable_cost = 0.0;
    s.alpha = alpha;
    return s;
}

std::string_view to_string(SettlementMode mode) {
    switch (mode) {
    case SettlementMode::None: return "none";
    case SettlementMode::Share: return "mode1";
    case SettlementMode::FixedQuantity: return "mode2";
    }
    return "?";
}

SettlementMode settlement_mode_from_string(std::string_view name) {
    if (name == "none") return SettlementMode::None;
    if (name == "mode1" || name == "share") return SettlementMode::Share;
    if (name == "mode2" || name == "fixed_quantity") return SettlementMode::FixedQuantity;
    throw std::invalid_argument("unknown settlement mode '" + std::string(name) + "'");
}

FuturesContract FuturesContract::none(std::size_t periods) {
    return {SettlementMode::None, std::vector<double>(periods, 0.0), std::vector<double>(periods, 0.0)};
}

double FuturesContract::payment(std::size_t t) const {
    if (mode == SettlementMode::None) return 0.0;
    return positions.at(t) * prices.at(t);
}

void FuturesContract::validate(std::size_t expected_periods) const {
    if (positions.size() != expected_periods || prices.size() != expected_periods)
        throw std::invalid_argument("futures contract length does not match the horizon");
    for (std::size_t t = 0; t < expected_periods; ++t) {
        const double q = positions[t];
        if (!std::isfinite(q) || !std::isfinite(prices[t]))
            throw std::invalid_argument("futures contract entries must be finite");
        if (prices[t] < 0) throw std::invalid_argument("futures prices must be non-negative");
        switch (mode) {
        case SettlementMode::None:
            if (q != 0 || prices[t] != 0)
                throw std::invalid_argument("a contract without settlement mode must be all zero");
            break;
        case SettlementMode::Share:
            if (q < 0 || q > 1) throw std::invalid_argument("share positions must lie in [0,1]");
            break;
        case SettlementMode::FixedQuantity:
            if (q < 0) throw std::invalid_argument("fixed-quantity positions must be non-negative");
            break;
        }
    }
}

double spot_price(double ga_sell, double ra_sell, const MarketParams& params) {
    if (ga_sell < 0 || ra_sell < 0) throw std::invalid_argument("spot sales must be non-negative");
    return params.rho_max - (ga_sell + ra_sell) / params.k_am;
}

double settle_futures(const FuturesContract& contract, std::size_t t, double ra_production) {
    if (ra_production < 0) throw std::invalid_argument("production must be non-negative");
    if (t >= contract.periods()) throw std::out_of_range("period outside the contract horizon");
    switch (contract.mode) {
    case SettlementMode::None: return 0.0;
    case SettlementMode::Share: return contract.positions[t] * ra_production;
    case SettlementMode::FixedQuantity:
        if (contract.positions[t] > ra_production)
            throw InfeasibleDelivery(t, contract.positions[t], ra_production);
        return contract.positions[t];
    }
    return 0.0;
}

namespace {

void check_horizon(std::size_t n, std::span<const double> a, std::span<const double> b,
                   std::span<const double> c, const FuturesContract& contract) {
    if (a.size() != n || b.size() != n || c.size() != n || contract.periods() != n)
        throw std::invalid_argument("per-period inputs must all match the horizon");
}

}  // namespace

CashflowBreakdown profit_rep2a(std::span<const double> sales, std::span<const double> production,
                               const FuturesContract& contract, std::span<const double> prices,
                               const ProducerSpec& spec, const MarketParams& params) {
    const std::size_t n = sales.size();
    check_horizon(n, production, prices, prices, contract);
    CashflowBreakdown out;
    for (std::size_t t = 0; t < n; ++t) {
        if (sales[t] > production[t]) throw std::invalid_argument("sales exceed production");
        const double delivered = settle_futures(contract, t, production[t]);
        out.spot_revenue += (sales[t] - delivered) * prices[t];
        out.futures_cashflow += contract.payment(t);
        out.production_cost += spec.fixed_cost * params.hours_per_period;
    }
    out.total = out.spot_revenue + out.futures_cashflow - out.production_cost;
    return out;
}

CashflowBreakdown profit_ga(std::span<const double> sales, std::span<const double> production,
                            const FuturesContract& contract, std::span<const double> delivered,
                            std::span<const double> prices, const ProducerSpec& spec,
                            const MarketParams& params) {
    const std::size_t n = sales.size();
    check_horizon(n, production, delivered, prices, contract);
    CashflowBreakdown out;
    for (std::size_t t = 0; t < n; ++t) {
        if (sales[t] > production[t]) throw std::invalid_argument("sales exceed production");
        if (delivered[t] < 0) throw std::invalid_argument("delivered quantity must be non-negative");
        out.spot_revenue += (sales[t] + delivered[t]) * prices[t];
        out.futures_cashflow -= contract.payment(t);
        out.production_cost += spec.fixed_cost * params.hours_per_period + spec.variable_cost * production[t];
    }
    out.total = out.spot_revenue + out.futures_cashflow - out.production_cost;
    return out;
}

namespace {

constexpr double kProbTolerance = 1e-9;
constexpr double kCumulativeSlack = 1e-12;

void check_distribution(std::span<const double> losses, std::span<const double> probs, double alpha) {
    if (losses.empty()) throw std::invalid_argument("empty scenario set");
    if (losses.size() != probs.size()) throw std::invalid_argument("losses and probabilities differ in length");
    if (!(alpha >= 0 && alpha < 1)) throw std::invalid_argument("alpha must lie in [0,1)");
    double total = 0;
    for (double p : probs) {
        if (p < 0) throw std::invalid_argument("probabilities must be non-negative");
        total += p;
    }
    if (std::abs(total - 1.0) > kProbTolerance) throw std::invalid_argument("probabilities must sum to 1");
}

std::vector<std::size_t> ascending_order(std::span<const double> losses) {
    std::vector<std::size_t> order(losses.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });
    return order;
}

double quantile_of(std::span<const double> losses, std::span<const double> probs, double alpha,
                   const std::vector<std::size_t>& order) {
    double cumulative = 0;
    for (std::size_t i : order) {
        cumulative += probs[i];
        if (cumulative >= alpha - kCumulativeSlack) return losses[i];
    }
    return losses[order.back()];
}

}  // namespace

double value_at_risk(std::span<const double> losses, std::span<const double> probs, double alpha) {
    check_distribution(losses, probs, alpha);
    return quantile_of(losses, probs, alpha, ascending_order(losses));
}

CvarResult cvar(std::span<const double> losses, std::span<const double> probs, double alpha) {
    check_distribution(losses, probs, alpha);
    CvarResult out;
    // The Rockafellar-Uryasev objective is piecewise linear and convex in theta
    // and attains its minimum at the lower alpha-quantile.
    out.theta = quantile_of(losses, probs, alpha, ascending_order(losses));
    out.excess.resize(losses.size());
    double tail = 0;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        out.excess[i] = std::max(losses[i] - out.theta, 0.0);
        tail += probs[i] * out.excess[i];
    }
    out.cvar = out.theta + tail / (1.0 - alpha);
    return out;
}

std::vector<double> cvar_tail_weights(std::span<const double> losses, std::span<const double> probs,
                                      double alpha) {
    check_distribution(losses, probs, alpha);
    auto order = ascending_order(losses);
    std::vector<double> weights(losses.size(), 0.0);
    double remaining = 1.0;
    for (auto it = order.rbegin(); it != order.rend() && remaining > 0; ++it) {
        const double w = std::min(probs[*it] / (1.0 - alpha), remaining);
        weights[*it] = w;
        remaining -= w;
    }
    return weights;
}

}  // namespace ammfut
