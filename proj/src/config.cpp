#include "ammfut/config.hpp"

#include "ammfut/error.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <sstream>
#include <string_view>

namespace ammfut {
namespace {

int line_of(const YAML::Node& n) { return n.Mark().is_null() ? 0 : n.Mark().line + 1; }
int column_of(const YAML::Node& n) { return n.Mark().is_null() ? 0 : n.Mark().column + 1; }

[[noreturn]] void fail(const std::string& field, const std::string& message, const YAML::Node& at) {
    throw ConfigError(field, message, line_of(at), column_of(at));
}

void require_map(const YAML::Node& node, const std::string& path, std::initializer_list<std::string_view> keys) {
    if (!node.IsMap()) fail(path, "expected a mapping", node);
    for (const auto& kv : node) {
        const auto name = kv.first.as<std::string>();
        bool known = false;
        for (auto k : keys) known = known || name == k;
        if (!known) fail(path.empty() ? name : path + "." + name, "unknown key", kv.first);
    }
}

template <class T>
void read(const YAML::Node& node, const char* key, const std::string& path, T& target) {
    const YAML::Node v = node[key];
    if (!v) return;
    const std::string field = path + "." + key;
    if (!v.IsScalar()) fail(field, "expected a scalar", v);
    try {
        target = v.as<T>();
    } catch (const YAML::BadConversion&) {
        if constexpr (std::is_same_v<T, std::string>) fail(field, "expected a string", v);
        else if constexpr (std::is_integral_v<T>) fail(field, "expected an integer", v);
        else fail(field, "expected a number", v);
    }
}

void read_list(const YAML::Node& node, const char* key, const std::string& path, std::vector<double>& target) {
    const YAML::Node v = node[key];
    if (!v) return;
    const std::string field = path + "." + key;
    if (!v.IsSequence()) fail(field, "expected a list of numbers", v);
    target.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
        try {
            target.push_back(v[i].as<double>());
        } catch (const YAML::BadConversion&) {
            fail(field + "[" + std::to_string(i) + "]", "expected a number", v[i]);
        }
    }
}

// Runs a validator and maps its message to the key it starts with, so the
// error points at the offending entry.
void validated(const YAML::Node& node, const std::string& path, const std::function<void()>& check) {
    try {
        check();
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        if (node && node.IsMap())
            for (const auto& kv : node) {
                const auto key = kv.first.as<std::string>();
                if (msg.compare(0, key.size(), key) == 0) fail(path + "." + key, msg, kv.second);
            }
        fail(path, msg, node ? node : YAML::Node());
    }
}

template <class F>
auto parse_enum(const YAML::Node& v, const std::string& field, F from_string) {
    try {
        return from_string(v.as<std::string>());
    } catch (const std::invalid_argument& e) {
        fail(field, e.what(), v);
    }
}

ProducerSpec parse_producer(const YAML::Node& node, const std::string& path) {
    require_map(node, path, {"kind", "prod_upper", "prod_lower", "eta_p2a", "fixed_cost", "variable_cost", "alpha"});
    if (!node["kind"]) fail(path + ".kind", "missing producer kind", node);
    ProducerSpec spec;
    switch (parse_enum(node["kind"], path + ".kind", producer_kind_from_string)) {
    case ProducerKind::ReP2A: spec = ProducerSpec::rep2a_default(); break;
    case ProducerKind::GA: spec = ProducerSpec::ga_default(); break;
    case ProducerKind::NPTP: spec = ProducerSpec::nptp(0.5); break;
    }
    read(node, "prod_upper", path, spec.prod_upper);
    read(node, "prod_lower", path, spec.prod_lower);
    read(node, "eta_p2a", path, spec.eta_p2a);
    read(node, "fixed_cost", path, spec.fixed_cost);
    read(node, "variable_cost", path, spec.variable_cost);
    read(node, "alpha", path, spec.alpha);
    validated(node, path, [&] { spec.validate(); });
    return spec;
}

RunConfig from_node(const YAML::Node& root) {
    RunConfig cfg;
    if (!root || root.IsNull()) return cfg;
    require_map(root, "",
                {"market", "producers", "wind", "scenarios", "equilibrium", "bargaining", "anticipation", "study",
                 "output"});
    ModelSetup& m = cfg.model;

    if (auto n = root["market"]) {
        require_map(n, "market", {"rho_max", "k_am", "periods", "hours_per_period"});
        read(n, "rho_max", "market", m.market.rho_max);
        read(n, "k_am", "market", m.market.k_am);
        read(n, "periods", "market", m.market.periods);
        read(n, "hours_per_period", "market", m.market.hours_per_period);
        validated(n, "market", [&] { m.market.validate(); });
    }

    if (auto n = root["producers"]) {
        if (!n.IsSequence() || n.size() != 2)
            fail("producers", "expected a list of two producers (ReP2A first, then GA or NPTP)", n);
        m.ra = parse_producer(n[0], "producers[0]");
        m.ga = parse_producer(n[1], "producers[1]");
        if (m.ra.kind != ProducerKind::ReP2A) fail("producers[0].kind", "the first producer must be a ReP2A", n[0]);
        if (m.ga.kind == ProducerKind::ReP2A)
            fail("producers[1].kind", "the second producer must be a GA or an NPTP", n[1]);
    }

    if (auto n = root["wind"]) {
        require_map(n, "wind", {"rated_power", "monthly_avg_power"});
        read(n, "rated_power", "wind", m.wind.rated_power);
        read_list(n, "monthly_avg_power", "wind", m.wind.monthly_avg_power);
        validated(n, "wind", [&] { m.wind.validate(); });
    }
    if (static_cast<int>(m.wind.monthly_avg_power.size()) != m.market.periods)
        fail("wind.monthly_avg_power", "length must equal market.periods", root["wind"] ? root["wind"] : root);

    if (auto n = root["scenarios"]) {
        require_map(n, "scenarios", {"count", "disturbance_bound", "window", "seed"});
        read(n, "count", "scenarios", m.n_scenarios);
        read(n, "disturbance_bound", "scenarios", m.disturbance_bound);
        read(n, "window", "scenarios", m.window);
        read(n, "seed", "scenarios", m.seed);
        if (m.n_scenarios < 1) fail("scenarios.count", "count must be at least 1", n["count"]);
        if (!(m.disturbance_bound >= 0))
            fail("scenarios.disturbance_bound", "disturbance_bound must be non-negative", n["disturbance_bound"]);
        if (m.window < 1) fail("scenarios.window", "window must be at least 1", n["window"]);
        if (m.disturbance_bound > m.wind.rated_power)
            fail("scenarios.disturbance_bound", "disturbance_bound exceeds wind.rated_power", n["disturbance_bound"]);
    }

    if (auto n = root["equilibrium"]) {
        require_map(n, "equilibrium", {"gamma", "epsilon", "max_iters", "initial_price", "max_gamma_halvings"});
        auto& e = m.equilibrium;
        read(n, "gamma", "equilibrium", e.gamma);
        read(n, "epsilon", "equilibrium", e.epsilon);
        read(n, "max_iters", "equilibrium", e.max_iters);
        if (n["initial_price"]) {
            double p = 0;
            read(n, "initial_price", "equilibrium", p);
            e.initial_price = p;
        }
        read(n, "max_gamma_halvings", "equilibrium", e.max_gamma_halvings);
        validated(n, "equilibrium", [&] { e.validate(); });
    }

    if (auto n = root["bargaining"]) {
        require_map(n, "bargaining",
                    {"mode", "gamma", "beta_rho", "beta_q", "epsilon", "max_iters", "max_halvings",
                     "epsilon_utility", "initial_position"});
        auto& b = m.bargain;
        if (n["mode"]) {
            m.mode = parse_enum(n["mode"], "bargaining.mode", settlement_mode_from_string);
            if (m.mode == SettlementMode::None) fail("bargaining.mode", "mode must be mode1 or mode2", n["mode"]);
        }
        read(n, "gamma", "bargaining", b.gamma);
        read(n, "beta_rho", "bargaining", b.beta_rho);
        read(n, "beta_q", "bargaining", b.beta_q);
        read(n, "epsilon", "bargaining", b.epsilon);
        read(n, "max_iters", "bargaining", b.max_iters);
        read(n, "max_halvings", "bargaining", b.max_halvings);
        read(n, "epsilon_utility", "bargaining", b.epsilon_utility);
        read(n, "initial_position", "bargaining", b.initial_position);
        validated(n, "bargaining", [&] { b.validate(); });
    }

    if (auto n = root["anticipation"]) {
        require_map(n, "anticipation", {"kind", "segments"});
        if (n["kind"]) m.anticipation.kind = parse_enum(n["kind"], "anticipation.kind", anticipation_from_string);
        read(n, "segments", "anticipation", m.anticipation.segments);
        if (m.anticipation.segments < 1) fail("anticipation.segments", "segments must be at least 1", n["segments"]);
    }

    if (auto n = root["study"]) {
        require_map(n, "study", {"kind", "bounds", "alphas", "ra_capacities", "ga_capacities", "nptp_alphas", "workers"});
        auto& s = cfg.study;
        if (n["kind"]) s.study = parse_enum(n["kind"], "study.kind", study_kind_from_string);
        read_list(n, "bounds", "study", s.bounds);
        read_list(n, "alphas", "study", s.alphas);
        read_list(n, "ra_capacities", "study", s.ra_capacities);
        read_list(n, "ga_capacities", "study", s.ga_capacities);
        read_list(n, "nptp_alphas", "study", s.nptp_alphas);
        read(n, "workers", "study", s.workers);
        validated(n, "study", [&] { s.validate(); });
    }

    if (auto n = root["output"]) {
        require_map(n, "output", {"directory"});
        read(n, "directory", "output", cfg.output_dir);
        if (cfg.output_dir.empty()) fail("output.directory", "directory must not be empty", n["directory"]);
    }

    validated(root, "", [&] { m.validate(); });
    return cfg;
}

void emit_list(YAML::Emitter& out, const char* key, const std::vector<double>& values) {
    out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (double v : values) out << v;
    out << YAML::EndSeq;
}

void emit_producer(YAML::Emitter& out, const ProducerSpec& p) {
    out << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << std::string(to_string(p.kind));
    out << YAML::Key << "prod_upper" << YAML::Value << p.prod_upper;
    out << YAML::Key << "prod_lower" << YAML::Value << p.prod_lower;
    out << YAML::Key << "eta_p2a" << YAML::Value << p.eta_p2a;
    out << YAML::Key << "fixed_cost" << YAML::Value << p.fixed_cost;
    out << YAML::Key << "variable_cost" << YAML::Value << p.variable_cost;
    out << YAML::Key << "alpha" << YAML::Value << p.alpha;
    out << YAML::EndMap;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError("", e.msg, e.mark.line + 1, e.mark.column + 1);
    }
    return from_node(root);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string to_yaml(const RunConfig& config, bool include_output) {
    const ModelSetup& m = config.model;
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;

    out << YAML::Key << "market" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "rho_max" << YAML::Value << m.market.rho_max;
    out << YAML::Key << "k_am" << YAML::Value << m.market.k_am;
    out << YAML::Key << "periods" << YAML::Value << m.market.periods;
    out << YAML::Key << "hours_per_period" << YAML::Value << m.market.hours_per_period;
    out << YAML::EndMap;

    out << YAML::Key << "producers" << YAML::Value << YAML::BeginSeq;
    emit_producer(out, m.ra);
    emit_producer(out, m.ga);
    out << YAML::EndSeq;

    out << YAML::Key << "wind" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "rated_power" << YAML::Value << m.wind.rated_power;
    emit_list(out, "monthly_avg_power", m.wind.monthly_avg_power);
    out << YAML::EndMap;

    out << YAML::Key << "scenarios" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "count" << YAML::Value << m.n_scenarios;
    out << YAML::Key << "disturbance_bound" << YAML::Value << m.disturbance_bound;
    out << YAML::Key << "window" << YAML::Value << m.window;
    out << YAML::Key << "seed" << YAML::Value << m.seed;
    out << YAML::EndMap;

    const auto& e = m.equilibrium;
    out << YAML::Key << "equilibrium" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "gamma" << YAML::Value << e.gamma;
    out << YAML::Key << "epsilon" << YAML::Value << e.epsilon;
    out << YAML::Key << "max_iters" << YAML::Value << e.max_iters;
    if (e.initial_price) out << YAML::Key << "initial_price" << YAML::Value << *e.initial_price;
    out << YAML::Key << "max_gamma_halvings" << YAML::Value << e.max_gamma_halvings;
    out << YAML::EndMap;

    const auto& b = m.bargain;
    out << YAML::Key << "bargaining" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "mode" << YAML::Value << std::string(to_string(m.mode));
    out << YAML::Key << "gamma" << YAML::Value << b.gamma;
    out << YAML::Key << "beta_rho" << YAML::Value << b.beta_rho;
    out << YAML::Key << "beta_q" << YAML::Value << b.beta_q;
    out << YAML::Key << "epsilon" << YAML::Value << b.epsilon;
    out << YAML::Key << "max_iters" << YAML::Value << b.max_iters;
    out << YAML::Key << "max_halvings" << YAML::Value << b.max_halvings;
    out << YAML::Key << "epsilon_utility" << YAML::Value << b.epsilon_utility;
    out << YAML::Key << "initial_position" << YAML::Value << b.initial_position;
    out << YAML::EndMap;

    out << YAML::Key << "anticipation" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << std::string(to_string(m.anticipation.kind));
    out << YAML::Key << "segments" << YAML::Value << m.anticipation.segments;
    out << YAML::EndMap;

    const auto& s = config.study;
    out << YAML::Key << "study" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << std::string(to_string(s.study));
    emit_list(out, "bounds", s.bounds);
    emit_list(out, "alphas", s.alphas);
    emit_list(out, "ra_capacities", s.ra_capacities);
    emit_list(out, "ga_capacities", s.ga_capacities);
    emit_list(out, "nptp_alphas", s.nptp_alphas);
    out << YAML::Key << "workers" << YAML::Value << s.workers;
    out << YAML::EndMap;

    if (include_output) {
        out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "directory" << YAML::Value << config.output_dir;
        out << YAML::EndMap;
    }
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

std::uint64_t config_hash(const RunConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : to_yaml(config, false)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t hash) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

}  // namespace ammfut
