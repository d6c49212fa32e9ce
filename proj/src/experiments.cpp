#include "ammfut/experiments.hpp"

#include "ammfut/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>

namespace ammfut {

ScenarioSet ModelSetup::scenarios() const {
    return generate_scenarios(wind, disturbance_bound, n_scenarios, window, market.hours_per_period, seed);
}

void ModelSetup::validate() const {
    market.validate();
    ra.validate();
    ga.validate();
    wind.validate();
    if (ra.kind != ProducerKind::ReP2A) throw std::invalid_argument("the first producer must be a ReP2A");
    if (ga.kind == ProducerKind::ReP2A) throw std::invalid_argument("the second producer must be a GA or an NPTP");
    if (static_cast<int>(wind.monthly_avg_power.size()) != market.periods)
        throw std::invalid_argument("wind profile length must equal the number of periods");
    if (n_scenarios < 1) throw std::invalid_argument("n_scenarios must be at least 1");
    if (!(disturbance_bound >= 0)) throw std::invalid_argument("disturbance_bound must be non-negative");
    if (disturbance_bound > wind.rated_power) throw std::invalid_argument("disturbance_bound exceeds rated_power");
    if (window < 1) throw std::invalid_argument("window must be at least 1");
    if (mode == SettlementMode::None) throw std::invalid_argument("bargaining needs a settlement mode");
    if (anticipation.segments < 1) throw std::invalid_argument("segments must be at least 1");
    equilibrium.validate();
    bargain.validate();
}

std::string_view to_string(StudyKind kind) {
    switch (kind) {
    case StudyKind::Base: return "base";
    case StudyKind::UncertaintySweep: return "uncertainty";
    case StudyKind::AlphaSweep: return "alpha";
    case StudyKind::CapacityGrid: return "capacity";
    case StudyKind::Nptp: return "nptp";
    }
    return "?";
}

StudyKind study_kind_from_string(std::string_view name) {
    for (auto k : {StudyKind::Base, StudyKind::UncertaintySweep, StudyKind::AlphaSweep, StudyKind::CapacityGrid,
                   StudyKind::Nptp})
        if (name == to_string(k)) return k;
    throw std::invalid_argument("unknown study '" + std::string(name) + "'");
}

void StudySpec::validate() const {
    auto check = [](const std::vector<double>& v, const char* name, auto ok) {
        for (double x : v)
            if (!ok(x)) throw std::invalid_argument(std::string(name) + " contains an out-of-range value");
    };
    check(bounds, "bounds", [](double x) { return x >= 0; });
    check(alphas, "alphas", [](double x) { return x >= 0 && x < 1; });
    check(nptp_alphas, "nptp_alphas", [](double x) { return x >= 0 && x < 1; });
    check(ra_capacities, "ra_capacities", [](double x) { return x > 0; });
    check(ga_capacities, "ga_capacities", [](double x) { return x > 0; });
    if (workers < 1) throw std::invalid_argument("workers must be at least 1");
}

UtilityDistribution utility_distribution(const std::vector<double>& profits, const std::vector<double>& probs,
                                         double alpha, int bins) {
    if (profits.empty() || profits.size() != probs.size())
        throw std::invalid_argument("profits and probabilities must be non-empty and of equal length");
    if (bins < 1) throw std::invalid_argument("bins must be at least 1");
    UtilityDistribution d;
    d.profits = profits;
    for (std::size_t i = 0; i < profits.size(); ++i) d.mean += probs[i] * profits[i];
    double second = 0;
    for (std::size_t i = 0; i < profits.size(); ++i) second += probs[i] * (profits[i] - d.mean) * (profits[i] - d.mean);
    d.stddev = std::sqrt(second);

    std::vector<double> losses(profits.size());
    std::transform(profits.begin(), profits.end(), losses.begin(), [](double v) { return -v; });
    d.var = -value_at_risk(losses, probs, alpha);
    d.cvar = -cvar(losses, probs, alpha).cvar;

    auto [lo_it, hi_it] = std::minmax_element(profits.begin(), profits.end());
    double lo = *lo_it, hi = *hi_it;
    if (hi - lo <= 1e-9 * std::max(1.0, std::abs(lo))) {
        d.bin_edges = {lo - 0.5, lo + 0.5};
        d.densities = {1.0};
        return d;
    }
    const double width = (hi - lo) / bins;
    d.bin_edges.resize(bins + 1);
    for (int b = 0; b <= bins; ++b) d.bin_edges[b] = lo + width * b;
    d.bin_edges[bins] = hi;
    d.densities.assign(bins, 0.0);
    for (std::size_t i = 0; i < profits.size(); ++i) {
        int b = static_cast<int>((profits[i] - lo) / width);
        d.densities[std::clamp(b, 0, bins - 1)] += probs[i];
    }
    for (double& v : d.densities) v /= width;
    return d;
}

std::vector<std::string> negative_price_warnings(const PriceField& prices, std::string_view context) {
    std::size_t count = 0;
    double lowest = 0;
    for (double p : prices.values())
        if (p < 0) {
            ++count;
            lowest = std::min(lowest, p);
        }
    if (count == 0) return {};
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.*s: %zu of %zu spot prices are negative (lowest %.6g CNY/t)",
                  static_cast<int>(context.size()), context.data(), count, prices.values().size(), lowest);
    return {buf};
}

namespace {

std::vector<double> negated(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return -x; });
    return out;
}

double relative_gain(double gain, double f_d) { return f_d == 0 ? 0.0 : 100.0 * gain / std::abs(f_d); }

SweepRow bargain_row(const ModelSetup& setup) {
    SweepRow row;
    try {
        setup.validate();
        auto scen = setup.scenarios();
        auto out = bargain(setup.ra, setup.ga, scen, setup.market, setup.mode, setup.bargain, setup.equilibrium,
                           setup.anticipation);
        row.f_ra_d = out.f_ra_d;
        row.f_ga_d = out.f_ga_d;
        row.f_ra_a = out.f_ra_a;
        row.f_ga_a = out.f_ga_a;
        row.gain_ra = out.gain_ra();
        row.gain_ga = out.gain_ga();
        row.gain_ra_pct = relative_gain(row.gain_ra, out.f_ra_d);
        row.gain_ga_pct = relative_gain(row.gain_ga, out.f_ga_d);
        row.status = std::string(to_string(out.status));
        row.mean_q = out.mean_position();
        row.mean_rho_f = out.mean_price();
        row.iterations = out.iterations;
        row.trace = std::move(out.trace);
    } catch (const std::exception& e) {
        row.status = "Error";
        row.error = e.what();
    }
    return row;
}

struct GridPoint {
    std::vector<std::pair<std::string, double>> keys;
    ModelSetup setup;
};

std::vector<SweepRow> run_points(const std::vector<GridPoint>& points, int workers) {
    std::vector<SweepRow> rows(points.size());
    auto work = [&](std::size_t i) {
        rows[i] = bargain_row(points[i].setup);
        rows[i].keys = points[i].keys;
    };
    const std::size_t n_threads = std::min<std::size_t>(std::max(workers, 1), points.size());
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < points.size(); ++i) work(i);
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n_threads; ++k)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < points.size(); i = next++) work(i);
        });
    for (auto& th : pool) th.join();
    return rows;
}

double annual_capacity(const ProducerSpec& spec) { return spec.prod_upper * 8760.0; }

// Fixed costs scale with plant size.
ProducerSpec scaled_capacity(const ProducerSpec& base, double tons_per_year) {
    ProducerSpec s = base;
    const double ratio = tons_per_year / annual_capacity(base);
    s.prod_upper = tons_per_year / 8760.0;
    s.prod_lower = base.prod_lower * ratio;
    s.fixed_cost = base.fixed_cost * ratio;
    return s;
}

}  // namespace

BaseReport run_base(const ModelSetup& setup) {
    setup.validate();
    BaseReport report;
    auto scen = setup.scenarios();
    report.share = bargain(setup.ra, setup.ga, scen, setup.market, SettlementMode::Share, setup.bargain,
                           setup.equilibrium, setup.anticipation);
    report.equilibrium = report.share.disagreement;

    report.fixed_quantity = bargain(setup.ra, setup.ga, scen, setup.market, SettlementMode::FixedQuantity, setup.bargain,
                                    setup.equilibrium, setup.anticipation);

    const auto& eq = report.equilibrium;
    report.ra_before = utility_distribution(negated(eq.ra_losses), scen.probs, setup.ra.alpha);
    report.ga_before = utility_distribution(negated(eq.ga_losses), scen.probs, setup.ga.alpha);
    report.ra_after = utility_distribution(negated(report.share.ra_losses), scen.probs, setup.ra.alpha);
    report.ga_after = utility_distribution(negated(report.share.ga_losses), scen.probs, setup.ga.alpha);

    for (auto& w : negative_price_warnings(eq.prices, "equilibrium")) report.warnings.push_back(w);
    for (auto& w : negative_price_warnings(report.share.prices, "mode1 agreement")) report.warnings.push_back(w);
    for (auto& w : negative_price_warnings(report.fixed_quantity.prices, "mode2 agreement"))
        report.warnings.push_back(w);
    return report;
}

SweepReport run_sweep(const ModelSetup& setup, const StudySpec& spec) {
    spec.validate();
    std::vector<GridPoint> points;
    switch (spec.study) {
    case StudyKind::UncertaintySweep:
        for (double b : spec.bounds) {
            GridPoint p{{{"bound_mw", b}}, setup};
            p.setup.disturbance_bound = b;
            points.push_back(std::move(p));
        }
        break;
    case StudyKind::AlphaSweep:
        for (double a : spec.alphas) {
            GridPoint p{{{"alpha", a}}, setup};
            p.setup.ra.alpha = a;
            p.setup.ga.alpha = a;
            points.push_back(std::move(p));
        }
        break;
    case StudyKind::CapacityGrid:
        for (double rc : spec.ra_capacities)
            for (double gc : spec.ga_capacities) {
                GridPoint p{{{"ra_capacity_t", rc}, {"ga_capacity_t", gc}}, setup};
                p.setup.ra = scaled_capacity(setup.ra, rc);
                p.setup.ga = scaled_capacity(setup.ga, gc);
                points.push_back(std::move(p));
            }
        break;
    case StudyKind::Nptp:
        return run_nptp(setup, spec);
    case StudyKind::Base:
        throw std::invalid_argument("the base study is not a sweep");
    }
    SweepReport report;
    report.study = spec.study;
    report.rows = run_points(points, spec.workers);
    return report;
}

SweepReport run_nptp(const ModelSetup& setup, const StudySpec& spec) {
    spec.validate();
    std::vector<GridPoint> points;
    for (double a : spec.nptp_alphas) {
        GridPoint p{{{"nptp_alpha", a}}, setup};
        p.setup.ga = ProducerSpec::nptp(a);
        points.push_back(std::move(p));
    }
    SweepReport report;
    report.study = StudyKind::Nptp;
    report.rows = run_points(points, spec.workers);
    return report;
}

}  // namespace ammfut
