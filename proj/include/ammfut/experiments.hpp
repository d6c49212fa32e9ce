#pragma once

#include "ammfut/bargaining.hpp"
#include "ammfut/equilibrium.hpp"
#include "ammfut/market.hpp"
#include "ammfut/scenario.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ammfut {

/// Everything needed to build and solve one market instance.
struct ModelSetup {
    MarketParams market;
    ProducerSpec ra = ProducerSpec::rep2a_default();
    ProducerSpec ga = ProducerSpec::ga_default();
    WindProfile wind = WindProfile::synthetic_default();
    int n_scenarios = 100;
    double disturbance_bound = 45.0;  // MW
    int window = 2;
    std::uint64_t seed = 20240601;
    IterationConfig equilibrium;
    BargainConfig bargain;
    SettlementMode mode = SettlementMode::Share;
    AnticipationMode anticipation;

    ScenarioSet scenarios() const;
    void validate() const;
};

enum class StudyKind { Base, UncertaintySweep, AlphaSweep, CapacityGrid, Nptp };

std::string_view to_string(StudyKind kind);
StudyKind study_kind_from_string(std::string_view name);

struct StudySpec {
    StudyKind study = StudyKind::Base;
    std::vector<double> bounds{0.0, 22.5, 45.0, 67.5, 90.0};                  // MW
    std::vector<double> alphas{0.4, 0.6, 0.8, 0.9, 0.95};
    std::vector<double> ra_capacities{50000, 100000, 150000, 200000, 250000, 300000};  // t/yr
    std::vector<double> ga_capacities{50000, 100000, 150000, 200000, 250000, 300000};  // t/yr
    std::vector<double> nptp_alphas{0.2, 0.5, 0.7};
    int workers = 1;

    void validate() const;
};

struct UtilityDistribution {
    std::vector<double> profits;  // per scenario, CNY
    double mean = 0, stddev = 0;
    double var = 0, cvar = 0;     // profit convention: -VaR and -CVaR of the loss
    std::vector<double> bin_edges, densities;
};

/// Empirical statistics of per-scenario profits. The histogram has `bins`
/// equal-width bins spanning the data, with densities integrating to one;
/// a constant sample gets one unit-width bin centered on the value.
UtilityDistribution utility_distribution(const std::vector<double>& profits, const std::vector<double>& probs,
                                         double alpha, int bins = 30);

struct BaseReport {
    EquilibriumOutcome equilibrium;
    BargainOutcome share;           // settlement mode 1
    BargainOutcome fixed_quantity;  // settlement mode 2
    UtilityDistribution ra_before, ra_after, ga_before, ga_after;
    std::vector<std::string> warnings;
};

BaseReport run_base(const ModelSetup& setup);

struct SweepRow {
    std::vector<std::pair<std::string, double>> keys;
    double f_ra_d = 0, f_ga_d = 0, f_ra_a = 0, f_ga_a = 0;
    double gain_ra = 0, gain_ga = 0;          // CNY
    double gain_ra_pct = 0, gain_ga_pct = 0;  // relative to |f^d|; 0 when f^d = 0
    std::string status;                        // bargain status, or "Error"
    double mean_q = 0, mean_rho_f = 0;
    int iterations = 0;
    std::string error;
    std::vector<BargainTracePoint> trace;
};

struct SweepReport {
    StudyKind study = StudyKind::UncertaintySweep;
    std::vector<SweepRow> rows;
    std::vector<std::string> warnings;
};

/// One bargain per grid point. A failing grid point is recorded in its row
/// and never aborts the sweep. Rows keep grid order regardless of workers.
SweepReport run_sweep(const ModelSetup& setup, const StudySpec& spec);

/// Bargains between the ReP2A and a trading-only participant for each NPTP
/// alpha in the spec.
SweepReport run_nptp(const ModelSetup& setup, const StudySpec& spec);

/// Warnings for negative spot prices in a field.
std::vector<std::string> negative_price_warnings(const PriceField& prices, std::string_view context);

}  // namespace ammfut
