#include "ammfut/report.hpp"

#include "ammfut/error.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace ammfut {

using json = nlohmann::ordered_json;

const OutputFile* Report::find(const std::string& name) const {
    for (const auto& f : files)
        if (f.name == name) return &f;
    return nullptr;
}

namespace {

constexpr const char* kVersion = "1.0.0";

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

class Csv {
public:
    Csv(const RunConfig& config, const std::vector<std::string>& columns) {
        text_ = "# config_hash=" + hash_hex(config_hash(config)) + " seed=" + std::to_string(config.model.seed) + "\n";
        row(columns);
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += cells[i];
        }
        text_ += '\n';
    }
    std::string str() const { return text_; }

private:
    std::string text_;
};

json header(const RunConfig& config, const std::string& command) {
    return {{"tool", "ammfut"},
            {"version", kVersion},
            {"command", command},
            {"config_hash", hash_hex(config_hash(config))},
            {"seed", config.model.seed},
            {"config", to_yaml(config, false)}};
}

std::vector<double> period_means(const ScenarioField& field, const std::vector<double>& probs) {
    std::vector<double> out(field.periods(), 0.0);
    for (std::size_t w = 0; w < field.scenarios(); ++w)
        for (std::size_t t = 0; t < field.periods(); ++t) out[t] += probs[w] * field(w, t);
    return out;
}

json equilibrium_json(const EquilibriumOutcome& eq, const std::vector<double>& probs) {
    double lowest = eq.prices.values().empty() ? 0.0 : eq.prices.values().front();
    for (double p : eq.prices.values()) lowest = std::min(lowest, p);
    return {{"iterations", eq.iterations},
            {"residual", eq.residual},
            {"gamma", eq.gamma},
            {"f_ra", eq.f_ra_d},
            {"f_ga", eq.f_ga_d},
            {"expected_price", period_means(eq.prices, probs)},
            {"min_price", lowest},
            {"expected_ra_sales", period_means(eq.ra_sales, probs)},
            {"expected_ga_sales", period_means(eq.ga_sales, probs)},
            {"expected_ra_production", period_means(eq.ra_production, probs)},
            {"expected_ga_production", period_means(eq.ga_production, probs)}};
}

double pct(double gain, double f_d) { return f_d == 0 ? 0.0 : 100.0 * gain / std::abs(f_d); }

json bargain_json(const BargainOutcome& b, const std::vector<double>& probs) {
    return {{"status", to_string(b.status)},
            {"converged", b.converged},
            {"iterations", b.iterations},
            {"mode", to_string(b.contract.mode)},
            {"positions", b.contract.positions},
            {"futures_prices", b.contract.prices},
            {"mean_position", b.mean_position()},
            {"mean_futures_price", b.mean_price()},
            {"f_ra_agreement", b.f_ra_a},
            {"f_ga_agreement", b.f_ga_a},
            {"f_ra_disagreement", b.f_ra_d},
            {"f_ga_disagreement", b.f_ga_d},
            {"gain_ra", b.gain_ra()},
            {"gain_ga", b.gain_ga()},
            {"gain_ra_pct", pct(b.gain_ra(), b.f_ra_d)},
            {"gain_ga_pct", pct(b.gain_ga(), b.f_ga_d)},
            {"nash_objective", b.nash_objective},
            {"expected_price", period_means(b.prices, probs)}};
}

std::string equilibrium_trace(const RunConfig& config, const EquilibriumOutcome& eq) {
    Csv csv(config, {"iteration", "max_price_change", "residual", "f_ra", "f_ga", "gamma"});
    for (const auto& p : eq.trace)
        csv.row({std::to_string(p.iteration), num(p.max_price_change), num(p.residual), num(p.f_ra), num(p.f_ga),
                 num(p.gamma)});
    return csv.str();
}

std::string bargain_trace(const RunConfig& config, const std::vector<BargainTracePoint>& trace) {
    std::vector<std::string> cols{"iteration", "nash_objective", "s_ra", "s_ga", "f_ra", "f_ga",
                                  "mean_position", "mean_price", "accepted"};
    const std::size_t T = trace.empty() ? 0 : trace.front().positions.size();
    for (std::size_t t = 0; t < T; ++t) cols.push_back("q_" + std::to_string(t + 1));
    for (std::size_t t = 0; t < T; ++t) cols.push_back("rho_f_" + std::to_string(t + 1));
    Csv csv(config, cols);
    for (const auto& p : trace) {
        std::vector<std::string> cells{std::to_string(p.iteration), num(p.nash_objective), num(p.s_ra),
                                       num(p.s_ga), num(p.f_ra), num(p.f_ga), num(p.mean_position),
                                       num(p.mean_price), p.accepted ? "1" : "0"};
        for (double q : p.positions) cells.push_back(num(q));
        for (double r : p.prices) cells.push_back(num(r));
        csv.row(cells);
    }
    return csv.str();
}

json distribution_json(const UtilityDistribution& d) {
    return {{"mean", d.mean}, {"std", d.stddev}, {"var", d.var}, {"cvar", d.cvar}};
}

std::string distribution_csv(const RunConfig& config, const UtilityDistribution& before,
                             const UtilityDistribution& after) {
    Csv csv(config, {"series", "bin_lo", "bin_hi", "density"});
    auto add = [&](const char* name, const UtilityDistribution& d) {
        for (std::size_t b = 0; b < d.densities.size(); ++b)
            csv.row({name, num(d.bin_edges[b]), num(d.bin_edges[b + 1]), num(d.densities[b])});
    };
    add("before", before);
    add("after", after);
    return csv.str();
}

OutputFile json_file(const json& j) { return {"report.json", j.dump(2) + "\n"}; }

}  // namespace

Report report_scenarios(const RunConfig& config, const ScenarioSet& scen) {
    Report r{"scenarios", "ok", {}, {}};
    Csv csv(config, {"scenario", "period", "energy_mwh", "prob"});
    for (std::size_t w = 0; w < scen.size(); ++w)
        for (std::size_t t = 0; t < scen.periods(); ++t)
            csv.row({std::to_string(w), std::to_string(t + 1), num(scen.energy(w, t)), num(scen.probs[w])});
    json j{{"header", header(config, r.command)},
           {"scenarios", scen.size()},
           {"periods", scen.periods()},
           {"expected_energy_mwh", period_means(scen.energy, scen.probs)}};
    r.files.push_back(json_file(j));
    r.files.push_back({"scenarios.csv", csv.str()});
    return r;
}

Report report_equilibrium(const RunConfig& config, const EquilibriumOutcome& eq) {
    Report r{"equilibrium", "ok", {}, negative_price_warnings(eq.prices, "equilibrium")};
    const auto probs = config.model.scenarios().probs;
    json j{{"header", header(config, r.command)}, {"equilibrium", equilibrium_json(eq, probs)}, {"warnings", r.warnings}};
    r.files.push_back(json_file(j));
    r.files.push_back({"trace_equilibrium.csv", equilibrium_trace(config, eq)});
    return r;
}

Report report_bargain(const RunConfig& config, const BargainOutcome& b) {
    Report r{"bargain", std::string(to_string(b.status)), {}, {}};
    r.warnings = negative_price_warnings(b.disagreement.prices, "equilibrium");
    for (auto& w : negative_price_warnings(b.prices, "agreement")) r.warnings.push_back(w);
    const auto probs = config.model.scenarios().probs;
    json j{{"header", header(config, r.command)},
           {"equilibrium", equilibrium_json(b.disagreement, probs)},
           {"bargain", bargain_json(b, probs)},
           {"warnings", r.warnings}};
    r.files.push_back(json_file(j));
    r.files.push_back({"trace_equilibrium.csv", equilibrium_trace(config, b.disagreement)});
    r.files.push_back({"trace_bargain.csv", bargain_trace(config, b.trace)});
    return r;
}

Report report_base(const RunConfig& config, const BaseReport& base) {
    Report r{"study base", std::string(to_string(base.share.status)), {}, base.warnings};
    const auto probs = config.model.scenarios().probs;
    json j{{"header", header(config, r.command)},
           {"equilibrium", equilibrium_json(base.equilibrium, probs)},
           {"mode1", bargain_json(base.share, probs)},
           {"mode2", bargain_json(base.fixed_quantity, probs)},
           {"distributions",
            {{"ra_before", distribution_json(base.ra_before)},
             {"ra_after", distribution_json(base.ra_after)},
             {"ga_before", distribution_json(base.ga_before)},
             {"ga_after", distribution_json(base.ga_after)}}},
           {"warnings", r.warnings}};
    r.files.push_back(json_file(j));
    r.files.push_back({"trace_equilibrium.csv", equilibrium_trace(config, base.equilibrium)});
    r.files.push_back({"trace_mode1.csv", bargain_trace(config, base.share.trace)});
    r.files.push_back({"trace_mode2.csv", bargain_trace(config, base.fixed_quantity.trace)});
    r.files.push_back({"dist_ra.csv", distribution_csv(config, base.ra_before, base.ra_after)});
    r.files.push_back({"dist_ga.csv", distribution_csv(config, base.ga_before, base.ga_after)});
    return r;
}

Report report_sweep(const RunConfig& config, const SweepReport& sweep) {
    Report r{"study " + std::string(to_string(sweep.study)), "ok", {}, sweep.warnings};
    std::vector<std::string> cols;
    if (!sweep.rows.empty())
        for (const auto& [k, v] : sweep.rows.front().keys) cols.push_back(k);
    for (const char* c : {"f_ra_d", "f_ga_d", "f_ra_a", "f_ga_a", "gain_ra", "gain_ga", "gain_ra_pct", "gain_ga_pct",
                          "status", "mean_Q", "mean_rho_f", "iterations"})
        cols.push_back(c);
    Csv csv(config, cols);
    json rows = json::array();
    for (const auto& row : sweep.rows) {
        std::vector<std::string> cells;
        json keys = json::object();
        for (const auto& [k, v] : row.keys) {
            cells.push_back(num(v));
            keys[k] = v;
        }
        for (double v : {row.f_ra_d, row.f_ga_d, row.f_ra_a, row.f_ga_a, row.gain_ra, row.gain_ga, row.gain_ra_pct,
                         row.gain_ga_pct})
            cells.push_back(num(v));
        cells.push_back(row.status);
        cells.push_back(num(row.mean_q));
        cells.push_back(num(row.mean_rho_f));
        cells.push_back(std::to_string(row.iterations));
        csv.row(cells);
        json jr{{"keys", keys},
                {"status", row.status},
                {"f_ra_disagreement", row.f_ra_d},
                {"f_ga_disagreement", row.f_ga_d},
                {"f_ra_agreement", row.f_ra_a},
                {"f_ga_agreement", row.f_ga_a},
                {"gain_ra", row.gain_ra},
                {"gain_ga", row.gain_ga},
                {"gain_ra_pct", row.gain_ra_pct},
                {"gain_ga_pct", row.gain_ga_pct},
                {"mean_position", row.mean_q},
                {"mean_futures_price", row.mean_rho_f},
                {"iterations", row.iterations}};
        if (!row.error.empty()) {
            jr["error"] = row.error;
            r.warnings.push_back("grid point failed: " + row.error);
        }
        rows.push_back(std::move(jr));
    }
    json j{{"header", header(config, r.command)}, {"study", to_string(sweep.study)}, {"rows", rows},
           {"warnings", r.warnings}};
    r.files.push_back(json_file(j));
    r.files.push_back({"sweep.csv", csv.str()});
    return r;
}

void write_report(const Report& report, const std::string& directory) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) throw IoError("cannot create output directory '" + directory + "': " + ec.message());
    for (const auto& f : report.files) {
        const fs::path path = fs::path(directory) / f.name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + path.string() + "'");
        out.write(f.content.data(), static_cast<std::streamsize>(f.content.size()));
        if (!out) throw IoError("failed writing '" + path.string() + "'");
    }
}

}  // namespace ammfut
