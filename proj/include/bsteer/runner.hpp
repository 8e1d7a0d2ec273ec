#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bsteer/config.hpp"

namespace bsteer {

/// One `key = value [pass|fail]` line of summary.txt.
struct SummaryEntry {
    std::string key;
    std::string value;
    std::optional<bool> pass;  // set only for asserted keys
};

struct RunOptions {
    std::optional<std::filesystem::path> out_dir;  // overrides the config
    unsigned threads = 1;
};

struct RunResult {
    std::vector<SummaryEntry> summary;
    std::vector<std::string> failures;  // one machine-readable line per failed assertion
    std::filesystem::path out_dir;
    bool ok() const noexcept { return failures.empty(); }
};

/// 12 significant digits.
std::string format_number(double value);
std::string format_summary(const std::vector<SummaryEntry>& summary);

/// Validates, runs the configured mode and writes its artifacts. Output goes
/// to a staging directory that replaces `out_dir` only after success, with
/// summary.txt written last. Throws Error(config) on invalid configs and
/// when `out_dir` exists but does not hold an earlier run.
RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace bsteer
