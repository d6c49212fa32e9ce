#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace ammfut {

/// Inverse-demand parameters of the local spot market plus the trading calendar.
struct MarketParams {
    double rho_max = 4850.0;        // CNY/t at zero supply
    double k_am = 16.44;            // t per (CNY/t) per period
    int periods = 12;               // trading periods per horizon
    double hours_per_period = 730;  // h

    void validate() const;
};

enum class ProducerKind { ReP2A, GA, NPTP };

std::string_view to_string(ProducerKind kind);
ProducerKind producer_kind_from_string(std::string_view name);

/// Technology, cost and risk attitude of one market participant. Production
/// limits are hourly rates; they are multiplied by the period length when the
/// programs are built.
struct ProducerSpec {
    ProducerKind kind = ProducerKind::GA;
    double prod_upper = 22.83;  // t/h
    double prod_lower = 0.0;    // t/h
    double eta_p2a = 0.0;       // t/MWh, ReP2A only
    double fixed_cost = 0.0;    // CNY/h
    double variable_cost = 0.0; // CNY/t, GA only
    double alpha = 0.5;         // CVaR confidence

    void validate() const;

    double period_upper(const MarketParams& params) const { return prod_upper * params.hours_per_period; }
    double period_lower(const MarketParams& params) const { return prod_lower * params.hours_per_period; }

    static ProducerSpec rep2a_default();
    static ProducerSpec ga_default();
    /// Trading-only participant: the GA model with zero capacity and costs.
    static ProducerSpec nptp(double alpha);
};

enum class SettlementMode {
    None,
    Share,          // Mode 1: position is a share of realized renewable output
    FixedQuantity,  // Mode 2: position is a delivery tonnage
};

std::string_view to_string(SettlementMode mode);
SettlementMode settlement_mode_from_string(std::string_view name);

/// Per-period futures positions and prices. In share mode a price is the
/// payment for the whole production share (CNY per unit position); in
/// fixed-quantity mode it is CNY/t.
struct FuturesContract {
    SettlementMode mode = SettlementMode::None;
    std::vector<double> positions;
    std::vector<double> prices;

    static FuturesContract none(std::size_t periods);
    std::size_t periods() const { return positions.size(); }
    /// Payment Q_t * rho_t^f made by the buyer in period t.
    double payment(std::size_t t) const;
    void validate(std::size_t expected_periods) const;
};

struct CashflowBreakdown {
    double spot_revenue = 0.0;
    double futures_cashflow = 0.0;
    double production_cost = 0.0;
    double total = 0.0;
};

/// Linear inverse demand. Deliberately unclamped: the result can be negative
/// when supply exceeds k_am * rho_max.
double spot_price(double ga_sell, double ra_sell, const MarketParams& params);

/// Tonnage transferred to the buyer at the end of period t.
/// Throws InfeasibleDelivery when a fixed-quantity position exceeds output.
double settle_futures(const FuturesContract& contract, std::size_t t, double ra_production);

CashflowBreakdown profit_rep2a(std::span<const double> sales, std::span<const double> production,
                               const FuturesContract& contract, std::span<const double> prices,
                               const ProducerSpec& spec, const MarketParams& params);

CashflowBreakdown profit_ga(std::span<const double> sales, std::span<const double> production,
                            const FuturesContract& contract, std::span<const double> delivered,
                            std::span<const double> prices, const ProducerSpec& spec,
                            const MarketParams& params);

/// Lower alpha-quantile of the discrete loss distribution. alpha = 0 yields the
/// smallest loss.
double value_at_risk(std::span<const double> losses, std::span<const double> probs, double alpha);

struct CvarResult {
    double cvar = 0.0;
    double theta = 0.0;           // minimizing threshold (equals VaR)
    std::vector<double> excess;   // (L - theta)^+ per scenario
};

/// Minimum of theta + 1/(1-alpha) * sum p (L - theta)^+ over theta.
CvarResult cvar(std::span<const double> losses, std::span<const double> probs, double alpha);

/// Optimal multipliers of the scenario excess constraints in the linearized
/// CVaR problem: p/(1-alpha) on the tail, a fractional weight on the boundary
/// atom, zero elsewhere. Weights sum to one.
std::vector<double> cvar_tail_weights(std::span<const double> losses, std::span<const double> probs,
                                      double alpha);

}  // namespace ammfut
