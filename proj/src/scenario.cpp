#include "ammfut/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace ammfut {

void WindProfile::validate() const {
    if (!(rated_power > 0)) throw std::invalid_argument("rated_power must be positive");
    if (monthly_avg_power.empty()) throw std::invalid_argument("monthly_avg_power must not be empty");
    for (double p : monthly_avg_power)
        if (!(p >= 0 && p <= rated_power))
            throw std::invalid_argument("monthly_avg_power entries must lie in [0, rated_power]");
}

WindProfile WindProfile::synthetic_default() {
    static constexpr double kCapacityFactors[12] = {0.40, 0.38, 0.36, 0.33, 0.29, 0.26,
                                                    0.25, 0.26, 0.29, 0.33, 0.37, 0.39};
    WindProfile profile;
    profile.rated_power = 450.0;
    for (double cf : kCapacityFactors) profile.monthly_avg_power.push_back(cf * profile.rated_power);
    return profile;
}

void ScenarioSet::validate() const {
    if (probs.empty()) throw std::invalid_argument("scenario set is empty");
    if (energy.scenarios() != probs.size()) throw std::invalid_argument("energy rows do not match probabilities");
    double total = 0;
    for (double p : probs) {
        if (!(p >= 0)) throw std::invalid_argument("scenario probabilities must be non-negative");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12 * static_cast<double>(probs.size()))
        throw std::invalid_argument("scenario probabilities must sum to 1");
    for (double e : energy.values())
        if (!(e >= 0)) throw std::invalid_argument("scenario energy must be non-negative");
}

ScenarioSet ScenarioSet::deterministic(std::span<const double> energy_per_period) {
    ScenarioSet set;
    set.energy = ScenarioField(1, energy_per_period.size());
    std::copy(energy_per_period.begin(), energy_per_period.end(), set.energy.row(0).begin());
    set.probs = {1.0};
    return set;
}

std::vector<double> moving_average(std::span<const double> series, int window) {
    if (series.empty()) throw std::invalid_argument("moving_average of an empty series");
    if (window < 1) throw std::invalid_argument("window must be at least 1");
    std::vector<double> out(series.size());
    for (std::size_t t = 0; t < series.size(); ++t) {
        const std::size_t first = t + 1 >= static_cast<std::size_t>(window) ? t + 1 - window : 0;
        double sum = 0;
        for (std::size_t s = first; s <= t; ++s) sum += series[s];
        out[t] = sum / static_cast<double>(t - first + 1);
    }
    return out;
}

double energy_available(double power_mw, double hours) {
    if (power_mw < 0) throw std::invalid_argument("power must be non-negative");
    return power_mw * hours;
}

ScenarioSet generate_scenarios(const WindProfile& profile, double disturbance_bound, int n_scenarios,
                               int window, double hours_per_period, std::uint64_t seed) {
    profile.validate();
    if (!(disturbance_bound >= 0)) throw std::invalid_argument("disturbance_bound must be non-negative");
    if (disturbance_bound > profile.rated_power)
        throw std::invalid_argument("disturbance_bound exceeds rated_power");
    if (n_scenarios < 1) throw std::invalid_argument("n_scenarios must be at least 1");
    if (window < 1) throw std::invalid_argument("window must be at least 1");
    if (!(hours_per_period > 0)) throw std::invalid_argument("hours_per_period must be positive");

    const std::size_t periods = profile.monthly_avg_power.size();
    ScenarioSet set;
    set.seed = seed;
    set.disturbance_bound = disturbance_bound;
    set.energy = ScenarioField(static_cast<std::size_t>(n_scenarios), periods);
    set.probs.assign(static_cast<std::size_t>(n_scenarios), 1.0 / n_scenarios);

    // Uniform variates are built from the top 53 bits of each draw instead of
    // std::uniform_real_distribution, whose output is implementation-defined.
    std::mt19937_64 rng(seed);
    std::vector<double> noise(periods);
    for (std::size_t w = 0; w < set.size(); ++w) {
        for (double& d : noise) {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            d = disturbance_bound * (2.0 * u - 1.0);
        }
        const auto smooth = moving_average(noise, window);
        for (std::size_t t = 0; t < periods; ++t) {
            const double power = std::clamp(profile.monthly_avg_power[t] + smooth[t], 0.0, profile.rated_power);
            set.energy(w, t) = energy_available(power, hours_per_period);
        }
    }
    return set;
}

}  // namespace ammfut
