#pragma once

// Flat key=value run configuration and the run manifest.
//
// Config file syntax: one `key = value` per line; `#` starts a comment; blank
// lines are ignored; a repeated key overrides the earlier one. Keys are the
// model keys (see describe(ModelConfig)), the training keys (see
// describe(TrainConfig)) and the data keys `train`, `dev`, `test`, `format`.
// Relative data paths are resolved against the config file's directory.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qlm/model.hpp"
#include "qlm/training.hpp"

namespace qlm {

struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    std::filesystem::path train_path;
    std::filesystem::path dev_path;
    std::filesystem::path test_path;
    std::string format = "tsv";

    /// Throws ConfigError for unknown keys or malformed values.
    void set(const std::string& key, const std::string& value);

    /// Every key with its resolved value, model keys first.
    std::vector<std::pair<std::string, std::string>> entries() const;
};

/// Parsed `key = value` lines in file order. Throws ConfigError naming the line
/// for a line without `=` or with an empty key.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text,
                                                                  const std::string& source = "<memory>");

/// Applies a config file on top of `cfg`.
void load_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Splits `key=value`; throws ConfigError without `=`.
std::pair<std::string, std::string> split_assignment(const std::string& text);

/// `resolved.cfg` (loadable with --config) and `manifest.json`, written to `dir`.
/// The manifest records the command, code version, seed, output directory and
/// every resolved key.
void write_manifest(const std::filesystem::path& dir, const RunConfig& cfg, const std::string& command);

/// Version string compiled into the library.
std::string_view code_version();

}  // namespace qlm
