#pragma once

#include "ammfut/field.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace ammfut {

/// Monthly average output of the wind farm feeding the electrolyzers.
struct WindProfile {
    double rated_power = 450.0;             // MW
    std::vector<double> monthly_avg_power;  // MW, one entry per period

    void validate() const;

    /// Synthetic seasonal profile (high in winter, low in summer) scaled to a
    /// 450 MW farm. Not measured data.
    static WindProfile synthetic_default();
};

struct ScenarioSet {
    ScenarioField energy;        // MWh, scenario x period
    std::vector<double> probs;   // per scenario
    std::uint64_t seed = 0;
    double disturbance_bound = 0; // MW

    std::size_t size() const { return probs.size(); }
    std::size_t periods() const { return energy.periods(); }
    void validate() const;

    /// Single scenario with probability one; used by small tests and toys.
    static ScenarioSet deterministic(std::span<const double> energy_per_period);
};

/// Trailing moving average; the first window-1 entries average the available
/// prefix.
std::vector<double> moving_average(std::span<const double> series, int window);

double energy_available(double power_mw, double hours);

/// Draws disturbance_bound-scaled uniform noise per period with a 64-bit
/// Mersenne Twister, smooths the noise with `moving_average`, adds it to the
/// baseline, clamps to [0, rated] and converts to energy.
ScenarioSet generate_scenarios(const WindProfile& profile, double disturbance_bound, int n_scenarios,
                               int window, double hours_per_period, std::uint64_t seed);

}  // namespace ammfut
