#include "ammfut/ammfut.h"

#include "ammfut/config.hpp"
#include "ammfut/error.hpp"
#include "ammfut/report.hpp"

#include <exception>
#include <new>
#include <string>

struct ammfut_config {
    ammfut::RunConfig config;
    std::string yaml, hash;  // cached for the string accessors
};

struct ammfut_result {
    ammfut::Report report;
};

namespace {

thread_local std::string last_error;

int set_error(int code, const std::string& message) {
    last_error = message;
    return code;
}

template <class F>
int guarded(F&& body) {
    last_error.clear();
    try {
        body();
        return AMMFUT_OK;
    } catch (const ammfut::ConfigError& e) {
        return set_error(AMMFUT_ERR_CONFIG, e.what());
    } catch (const ammfut::IoError& e) {
        return set_error(AMMFUT_ERR_IO, e.what());
    } catch (const ammfut::Error& e) {
        return set_error(AMMFUT_ERR_DOMAIN, e.what());
    } catch (const std::invalid_argument& e) {
        return set_error(AMMFUT_ERR_ARGUMENT, e.what());
    } catch (const std::bad_alloc&) {
        return set_error(AMMFUT_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(AMMFUT_ERR_INTERNAL, e.what());
    } catch (...) {
        return set_error(AMMFUT_ERR_INTERNAL, "unknown error");
    }
}

int null_argument(const char* name) { return set_error(AMMFUT_ERR_ARGUMENT, std::string(name) + " is null"); }

template <class F>
int run(const ammfut_config* config, ammfut_result** out, F&& make) {
    if (!config) return null_argument("config");
    if (!out) return null_argument("out");
    *out = nullptr;
    return guarded([&] { *out = new ammfut_result{make(config->config)}; });
}

}  // namespace

extern "C" {

const char* ammfut_version(void) { return "1.0.0"; }

const char* ammfut_last_error(void) { return last_error.c_str(); }

int ammfut_config_default(ammfut_config** out) {
    if (!out) return null_argument("out");
    return guarded([&] { *out = new ammfut_config{}; });
}

int ammfut_config_load(const char* path, ammfut_config** out) {
    if (!path) return null_argument("path");
    if (!out) return null_argument("out");
    *out = nullptr;
    return guarded([&] { *out = new ammfut_config{ammfut::load_config(path), {}, {}}; });
}

int ammfut_config_parse(const char* yaml_text, ammfut_config** out) {
    if (!yaml_text) return null_argument("yaml_text");
    if (!out) return null_argument("out");
    *out = nullptr;
    return guarded([&] { *out = new ammfut_config{ammfut::parse_config(yaml_text), {}, {}}; });
}

void ammfut_config_free(ammfut_config* config) { delete config; }

int ammfut_config_set_seed(ammfut_config* config, uint64_t seed) {
    if (!config) return null_argument("config");
    config->config.model.seed = seed;
    return AMMFUT_OK;
}

int ammfut_config_set_output_dir(ammfut_config* config, const char* directory) {
    if (!config) return null_argument("config");
    if (!directory || !*directory) return set_error(AMMFUT_ERR_ARGUMENT, "output directory must not be empty");
    return guarded([&] { config->config.output_dir = directory; });
}

const char* ammfut_config_output_dir(const ammfut_config* config) {
    return config ? config->config.output_dir.c_str() : nullptr;
}

const char* ammfut_config_yaml(ammfut_config* config) {
    if (!config) return nullptr;
    if (guarded([&] { config->yaml = ammfut::to_yaml(config->config); }) != AMMFUT_OK) return nullptr;
    return config->yaml.c_str();
}

const char* ammfut_config_hash(ammfut_config* config) {
    if (!config) return nullptr;
    if (guarded([&] { config->hash = ammfut::hash_hex(ammfut::config_hash(config->config)); }) != AMMFUT_OK)
        return nullptr;
    return config->hash.c_str();
}

int ammfut_run_scenarios(const ammfut_config* config, ammfut_result** out) {
    return run(config, out, [](const ammfut::RunConfig& c) {
        c.model.validate();
        return ammfut::report_scenarios(c, c.model.scenarios());
    });
}

int ammfut_run_equilibrium(const ammfut_config* config, ammfut_result** out) {
    return run(config, out, [](const ammfut::RunConfig& c) {
        const auto& m = c.model;
        m.validate();
        auto eq = ammfut::solve_spot_equilibrium(m.ra, m.ga, m.scenarios(), m.market, m.equilibrium, m.anticipation);
        return ammfut::report_equilibrium(c, eq);
    });
}

int ammfut_run_bargain(const ammfut_config* config, ammfut_result** out) {
    return run(config, out, [](const ammfut::RunConfig& c) {
        const auto& m = c.model;
        m.validate();
        auto b = ammfut::bargain(m.ra, m.ga, m.scenarios(), m.market, m.mode, m.bargain, m.equilibrium,
                                 m.anticipation);
        return ammfut::report_bargain(c, b);
    });
}

int ammfut_run_study(const ammfut_config* config, const char* study, ammfut_result** out) {
    if (!study) return null_argument("study");
    return run(config, out, [&](const ammfut::RunConfig& c) {
        ammfut::StudySpec spec = c.study;
        spec.study = ammfut::study_kind_from_string(study);
        if (spec.study == ammfut::StudyKind::Base) return ammfut::report_base(c, ammfut::run_base(c.model));
        return ammfut::report_sweep(c, ammfut::run_sweep(c.model, spec));
    });
}

const char* ammfut_result_status(const ammfut_result* result) {
    return result ? result->report.status.c_str() : nullptr;
}

const char* ammfut_result_json(const ammfut_result* result) {
    if (!result) return nullptr;
    const auto* f = result->report.find("report.json");
    return f ? f->content.c_str() : nullptr;
}

size_t ammfut_result_file_count(const ammfut_result* result) { return result ? result->report.files.size() : 0; }

const char* ammfut_result_file_name(const ammfut_result* result, size_t index) {
    if (!result || index >= result->report.files.size()) return nullptr;
    return result->report.files[index].name.c_str();
}

const char* ammfut_result_file_content(const ammfut_result* result, size_t index) {
    if (!result || index >= result->report.files.size()) return nullptr;
    return result->report.files[index].content.c_str();
}

size_t ammfut_result_warning_count(const ammfut_result* result) {
    return result ? result->report.warnings.size() : 0;
}

const char* ammfut_result_warning(const ammfut_result* result, size_t index) {
    if (!result || index >= result->report.warnings.size()) return nullptr;
    return result->report.warnings[index].c_str();
}

int ammfut_result_write(const ammfut_result* result, const char* directory) {
    if (!result) return null_argument("result");
    if (!directory) return null_argument("directory");
    return guarded([&] { ammfut::write_report(result->report, directory); });
}

void ammfut_result_free(ammfut_result* result) { delete result; }

int ammfut_spot_price(double ga_sell, double ra_sell, double rho_max, double k_am, double* out) {
    if (!out) return null_argument("out");
    return guarded([&] {
        ammfut::MarketParams params;
        params.rho_max = rho_max;
        params.k_am = k_am;
        params.validate();
        *out = ammfut::spot_price(ga_sell, ra_sell, params);
    });
}

int ammfut_cvar(const double* losses, const double* probs, size_t n, double alpha, double* cvar_out,
                double* var_out) {
    if (!losses) return null_argument("losses");
    if (!probs) return null_argument("probs");
    if (!cvar_out) return null_argument("cvar_out");
    return guarded([&] {
        auto r = ammfut::cvar({losses, n}, {probs, n}, alpha);
        *cvar_out = r.cvar;
        if (var_out) *var_out = r.theta;
    });
}

}  // extern "C"
