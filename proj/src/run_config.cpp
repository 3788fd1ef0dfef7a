#include "qlm/run_config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#ifndef QLM_VERSION
#define QLM_VERSION "unknown"
#endif

namespace qlm {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string path_string(const std::filesystem::path& p) {
    if (p.empty()) return {};
    return std::filesystem::absolute(p).lexically_normal().string();
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "train") train_path = value;
    else if (key == "dev") dev_path = value;
    else if (key == "test") test_path = value;
    else if (key == "format") format = value;
    else if (!apply_setting(model, key, value) && !apply_setting(train, key, value)) {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
    auto out = describe(model);
    for (auto& kv : describe(train)) out.push_back(std::move(kv));
    out.emplace_back("train", path_string(train_path));
    out.emplace_back("dev", path_string(dev_path));
    out.emplace_back("test", path_string(test_path));
    out.emplace_back("format", format);
    return out;
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text, const std::string& source) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(std::string_view(body).substr(0, eq));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
        out.emplace_back(std::move(key), trim(std::string_view(body).substr(eq + 1)));
    }
    return out;
}

void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    const auto base = path.parent_path();
    for (const auto& [key, value] : parse_key_values(ss.str(), path.string())) {
        const bool is_path = key == "train" || key == "dev" || key == "test";
        if (is_path && !value.empty() && std::filesystem::path(value).is_relative()) {
            cfg.set(key, (base / value).lexically_normal().string());
        } else {
            cfg.set(key, value);
        }
    }
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got '" + text + "'");
    return {trim(std::string_view(text).substr(0, eq)), trim(std::string_view(text).substr(eq + 1))};
}

void write_manifest(const std::filesystem::path& dir, const RunConfig& cfg, const std::string& command) {
    std::filesystem::create_directories(dir);
    const auto entries = cfg.entries();
    {
        std::ofstream out(dir / "resolved.cfg");
        for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
        if (!out) throw DataError("cannot write '" + (dir / "resolved.cfg").string() + "'");
    }
    nlohmann::ordered_json j;
    j["command"] = command;
    j["version"] = std::string(code_version());
    j["seed"] = cfg.train.seed;
    j["out_dir"] = path_string(dir);
    nlohmann::ordered_json resolved;
    for (const auto& [k, v] : entries) resolved[k] = v;
    j["config"] = resolved;
    std::ofstream out(dir / "manifest.json");
    out << j.dump(2) << '\n';
    if (!out) throw DataError("cannot write '" + (dir / "manifest.json").string() + "'");
}

std::string_view code_version() { return QLM_VERSION; }

}  // namespace qlm
