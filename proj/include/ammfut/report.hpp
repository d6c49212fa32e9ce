#pragma once

#include "ammfut/config.hpp"
#include "ammfut/experiments.hpp"

#include <string>
#include <vector>

namespace ammfut {

struct OutputFile {
    std::string name;
    std::string content;
};

/// Rendered run output. Contents depend only on the configuration and the
/// results; nothing time- or host-dependent is written.
struct Report {
    std::string command;
    std::string status;  // "ok" or a bargain status
    std::vector<OutputFile> files;
    std::vector<std::string> warnings;

    const OutputFile* find(const std::string& name) const;
};

Report report_scenarios(const RunConfig& config, const ScenarioSet& scenarios);
Report report_equilibrium(const RunConfig& config, const EquilibriumOutcome& outcome);
Report report_bargain(const RunConfig& config, const BargainOutcome& outcome);
Report report_base(const RunConfig& config, const BaseReport& base);
Report report_sweep(const RunConfig& config, const SweepReport& sweep);

/// Creates `directory` if needed and writes every file; throws IoError.
void write_report(const Report& report, const std::string& directory);

}  // namespace ammfut
