#pragma once

// The `qlm` command: train, eval, sweep, ablate, inspect-entropy and
// inspect-neighbors. The run helpers are exposed for tests.

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qlm/run_config.hpp"

namespace qlm::cli {

int run(int argc, char** argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct RunOutcome {
    bool ok = false;
    std::string error;
    int epochs = 0;
    std::string stop_reason;
    std::optional<double> dev_map;
    std::optional<double> dev_mrr;
    std::optional<double> test_map;
    std::optional<double> test_mrr;
    std::optional<double> train_map;
};

/// Trains into `dir`: manifest first, then log.jsonl, last.ckpt and best.ckpt
/// per epoch, and finally metrics.json and metrics.csv for the best parameters.
/// With `resume`, continues from dir/last.ckpt when present.
RunOutcome train_run(const RunConfig& cfg, const std::filesystem::path& dir, bool resume, std::ostream& log);

/// train_run guarded by dir/result.json: a completed run is read back instead of
/// repeated, and failures are caught and recorded.
RunOutcome run_point(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log);

}  // namespace qlm::cli
