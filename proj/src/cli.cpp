#include "qlm/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qlm/checkpoint.hpp"
#include "qlm/eval.hpp"
#include "qlm/interpret.hpp"

namespace qlm::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

const std::vector<std::pair<std::string, std::string>> kModelFlags = {
    {"--variant", "variant"},         {"--gram-sizes", "gram_sizes"}, {"--dim", "dim"},
    {"--measurements", "measurements"}, {"--ee-depth", "ee_depth"},   {"--ee-hidden", "ee_hidden"},
    {"--lr", "learning_rate"},        {"--batch-size", "batch_size"}, {"--max-epochs", "max_epochs"},
    {"--patience", "patience"},       {"--optimizer", "optimizer"},
};

struct CommonArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string checkpoint;
    std::string train;
    std::string dev;
    std::string test;
    std::string format;
    std::vector<std::string> sets;
    std::map<std::string, std::string> named;
};

void add_common(CLI::App* sub, CommonArgs& a, bool model_flags) {
    sub->add_option("--config", a.config, "Flat key = value config file");
    sub->add_option("--seed", a.seed, "Random seed (overrides the config)");
    sub->add_option("--out-dir", a.out_dir, "Output directory");
    sub->add_option("--checkpoint", a.checkpoint, "Checkpoint file");
    sub->add_option("--train", a.train, "Training split (TSV)");
    sub->add_option("--dev", a.dev, "Dev split (TSV)");
    sub->add_option("--test", a.test, "Test split (TSV)");
    sub->add_option("--format", a.format, "Corpus format")->check(CLI::IsMember({"tsv"}));
    if (!model_flags) return;
    sub->add_option("--set", a.sets, "Override any config key, key=value (repeatable)");
    for (const auto& [flag, key] : kModelFlags) {
        sub->add_option(flag, a.named[key], "Sets config key '" + key + "'");
    }
}

RunConfig resolve(const CommonArgs& a) {
    RunConfig cfg;
    if (!a.config.empty()) load_config_file(cfg, a.config);
    for (const auto& s : a.sets) {
        const auto [k, v] = split_assignment(s);
        cfg.set(k, v);
    }
    for (const auto& [flag, key] : kModelFlags) {
        auto it = a.named.find(key);
        if (it != a.named.end() && !it->second.empty()) cfg.set(key, it->second);
    }
    if (!a.train.empty()) cfg.train_path = a.train;
    if (!a.dev.empty()) cfg.dev_path = a.dev;
    if (!a.test.empty()) cfg.test_path = a.test;
    if (!a.format.empty()) cfg.format = a.format;
    if (a.seed) cfg.train.seed = *a.seed;
    return cfg;
}

std::string num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double to_double(const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw DataError("bad number '" + s + "'");
    return v;
}

std::string fixed(std::optional<double> v, int precision = 4) {
    if (!v) return "-";
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(precision) << *v;
    return ss.str();
}

json opt_json(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

std::optional<double> json_opt(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
}

Checkpoint make_checkpoint(const ModelParams& params, const Vocabulary& vocab, const TrainState& st,
                           const RunConfig& cfg, bool with_optimizer) {
    Checkpoint ck{params, vocab, {}, {}};
    ck.meta["epoch"] = std::to_string(st.epoch);
    ck.meta["best_score"] = num(st.best_score);
    ck.meta["epochs_since_best"] = std::to_string(st.epochs_since_best);
    ck.meta["steps"] = std::to_string(st.steps);
    ck.meta["seed"] = std::to_string(cfg.train.seed);
    if (with_optimizer) ck.extras = optimizer_extras(st);
    return ck;
}

const std::string& meta(const Checkpoint& ck, const std::string& key) {
    auto it = ck.meta.find(key);
    if (it == ck.meta.end()) throw DataError("checkpoint lacks training field '" + key + "'");
    return it->second;
}

std::vector<RawQuestion> read_optional(const fs::path& p) {
    return p.empty() ? std::vector<RawQuestion>{} : read_tsv(p);
}

// Splits encoded with the checkpoint's vocabulary.
QACorpus corpus_for_checkpoint(const Checkpoint& ck, const RunConfig& cfg) {
    if (cfg.format != "tsv") throw DataError("unsupported corpus format '" + cfg.format + "'");
    return encode_corpus(ck.vocab, read_optional(cfg.train_path), read_optional(cfg.dev_path),
                         read_optional(cfg.test_path));
}

Checkpoint require_checkpoint(const std::string& path) {
    if (path.empty()) throw ConfigError("--checkpoint is required");
    return load_checkpoint(path);
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    out << text;
    if (!out) throw DataError("cannot write '" + path.string() + "'");
}

json outcome_json(const RunOutcome& o) {
    json j;
    j["status"] = o.ok ? "ok" : "failed";
    if (!o.ok) j["error"] = o.error;
    j["epochs"] = o.epochs;
    j["stop_reason"] = o.stop_reason;
    j["train_map"] = opt_json(o.train_map);
    j["dev_map"] = opt_json(o.dev_map);
    j["dev_mrr"] = opt_json(o.dev_mrr);
    j["test_map"] = opt_json(o.test_map);
    j["test_mrr"] = opt_json(o.test_mrr);
    return j;
}

RunOutcome outcome_from_json(const json& j) {
    RunOutcome o;
    o.ok = j.value("status", "") == "ok";
    o.error = j.value("error", "");
    o.epochs = j.value("epochs", 0);
    o.stop_reason = j.value("stop_reason", "");
    o.train_map = json_opt(j, "train_map");
    o.dev_map = json_opt(j, "dev_map");
    o.dev_mrr = json_opt(j, "dev_mrr");
    o.test_map = json_opt(j, "test_map");
    o.test_mrr = json_opt(j, "test_mrr");
    return o;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto dash = item.find('-');
        try {
            if (dash == std::string::npos) {
                out.push_back(std::stoull(item));
            } else {
                const auto lo = std::stoull(item.substr(0, dash));
                const auto hi = std::stoull(item.substr(dash + 1));
                if (hi < lo) throw ConfigError("empty seed range '" + item + "'");
                for (auto s = lo; s <= hi; ++s) out.push_back(s);
            }
        } catch (const std::logic_error&) {
            throw ConfigError("bad seed list '" + text + "'");
        }
    }
    if (out.empty()) throw ConfigError("seed list is empty");
    return out;
}

std::vector<std::string> split_on(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double mean(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

// Sample standard deviation; 0 for fewer than two values.
double stddev(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

// ---- subcommands ---------------------------------------------------------

int cmd_train(const CommonArgs& a, bool resume, std::ostream& out) {
    const RunConfig cfg = resolve(a);
    const fs::path dir = a.out_dir.empty() ? fs::path("runs/train") : fs::path(a.out_dir);
    const RunOutcome o = train_run(cfg, dir, resume, out);
    out << "epochs " << o.epochs << " (" << o.stop_reason << ")\n";
    out << "train MAP " << fixed(o.train_map) << "  dev MAP " << fixed(o.dev_map) << "  dev MRR "
        << fixed(o.dev_mrr) << "  test MAP " << fixed(o.test_map) << "  test MRR " << fixed(o.test_mrr) << '\n';
    out << "outputs in " << dir.string() << '\n';
    return 0;
}

int cmd_eval(const CommonArgs& a, const std::string& split_arg, std::ostream& out) {
    const RunConfig cfg = resolve(a);
    const Checkpoint ck = require_checkpoint(a.checkpoint);
    const QACorpus corpus = corpus_for_checkpoint(ck, cfg);
    const Split split = parse_split(split_arg);
    const auto& records = corpus.split(split);
    if (records.empty()) throw DataError("no data for split '" + split_arg + "'; pass --" + split_arg);
    const EvalResult r = evaluate(ck.params, records);
    std::ostringstream report;
    write_report(report, r);
    if (!a.out_dir.empty()) {
        const fs::path path = fs::path(a.out_dir) / ("eval_" + split_arg + ".txt");
        write_text(path, report.str());
        out << "report written to " << path.string() << '\n';
    }
    out << split_arg << " MAP " << fixed(r.map) << "  MRR " << fixed(r.mrr) << "  (" << r.evaluated << "/"
        << r.questions.size() << " questions)\n";
    return 0;
}

struct GridAxis {
    std::string key;
    std::vector<std::string> values;
};

int cmd_sweep(const CommonArgs& a, const std::vector<std::string>& grid_args, std::ostream& out) {
    const RunConfig base = resolve(a);
    const fs::path dir = a.out_dir.empty() ? fs::path("runs/sweep") : fs::path(a.out_dir);
    std::vector<GridAxis> grid;
    for (const auto& g : grid_args) {
        const auto [k, v] = split_assignment(g);
        GridAxis axis{k, split_on(v, '|')};
        RunConfig probe = base;
        for (const auto& value : axis.values) probe.set(k, value);
        grid.push_back(std::move(axis));
    }

    std::size_t total = 1;
    for (const auto& axis : grid) total *= axis.values.size();
    fs::create_directories(dir);

    struct Row {
        std::size_t index;
        std::string name;
        std::vector<std::string> values;
        RunOutcome outcome;
    };
    std::vector<Row> rows;
    bool any_failed = false;
    for (std::size_t p = 0; p < total; ++p) {
        RunConfig cfg = base;
        std::vector<std::string> values;
        std::size_t rem = p;
        for (std::size_t g = grid.size(); g-- > 0;) {
            const auto& axis = grid[g];
            values.insert(values.begin(), axis.values[rem % axis.values.size()]);
            rem /= axis.values.size();
        }
        for (std::size_t g = 0; g < grid.size(); ++g) cfg.set(grid[g].key, values[g]);
        std::ostringstream name;
        name << "point_" << std::setw(3) << std::setfill('0') << p;
        out << "[" << p + 1 << "/" << total << "] " << name.str();
        for (std::size_t g = 0; g < grid.size(); ++g) out << ' ' << grid[g].key << '=' << values[g];
        out << '\n';
        RunOutcome o = run_point(cfg, dir / name.str(), out);
        if (!o.ok) {
            any_failed = true;
            out << "  failed: " << o.error << '\n';
        }
        rows.push_back(Row{p, name.str(), values, std::move(o)});
    }

    std::stable_sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
        const double a = x.outcome.ok && x.outcome.dev_map ? *x.outcome.dev_map : -1.0;
        const double b = y.outcome.ok && y.outcome.dev_map ? *y.outcome.dev_map : -1.0;
        return a > b;
    });
    std::ostringstream csv;
    csv << "point";
    for (const auto& axis : grid) csv << ',' << csv_field(axis.key);
    csv << ",status,dev_map,dev_mrr,test_map,test_mrr,train_map,epochs\n";
    for (const auto& r : rows) {
        csv << r.name;
        for (const auto& v : r.values) csv << ',' << csv_field(v);
        const auto cell = [](std::optional<double> v) { return v ? num(*v) : std::string(); };
        csv << ',' << (r.outcome.ok ? "ok" : "failed") << ',' << cell(r.outcome.dev_map) << ','
            << cell(r.outcome.dev_mrr) << ',' << cell(r.outcome.test_map) << ',' << cell(r.outcome.test_mrr) << ','
            << cell(r.outcome.train_map) << ',' << r.outcome.epochs << '\n';
    }
    write_text(dir / "summary.csv", csv.str());
    out << "summary written to " << (dir / "summary.csv").string() << '\n';
    return any_failed ? 1 : 0;
}

struct AblateArgs {
    std::string variants = "EE,SE,ME,EE-Real";
    std::string seeds = "0-9";
    std::vector<std::string> overrides;
    std::string ref_lengths;
    bool count_only = false;
};

int cmd_ablate(const CommonArgs& a, const AblateArgs& ab, std::ostream& out) {
    const RunConfig base = resolve(a);
    const fs::path dir = a.out_dir.empty() ? fs::path("runs/ablate") : fs::path(a.out_dir);
    const auto seeds = parse_seeds(ab.seeds);
    std::vector<Variant> variants;
    for (const auto& v : split_on(ab.variants, ',')) {
        if (!v.empty()) variants.push_back(parse_variant(v));
    }
    if (variants.empty()) throw ConfigError("no variants to ablate");

    std::map<Variant, std::vector<std::pair<std::string, std::string>>> overrides;
    for (const auto& o : ab.overrides) {
        const auto colon = o.find(':');
        if (colon == std::string::npos) throw ConfigError("--variant-override expects VARIANT:key=value");
        overrides[parse_variant(o.substr(0, colon))].push_back(split_assignment(o.substr(colon + 1)));
    }

    if (base.train_path.empty()) throw ConfigError("no training data: pass --train or set train in the config");
    const QACorpus corpus = load_corpus(base.train_path, base.dev_path, base.test_path, base.format);
    Index q_len = 0;
    Index a_len = 0;
    if (!ab.ref_lengths.empty()) {
        const auto parts = split_on(ab.ref_lengths, ',');
        if (parts.size() != 2) throw ConfigError("--ref-lengths expects QUESTION_LEN,ANSWER_LEN");
        q_len = std::stoll(parts[0]);
        a_len = std::stoll(parts[1]);
    } else {
        double qs = 0.0, as = 0.0;
        std::size_t nq = 0, na = 0;
        for (const auto& r : corpus.train) {
            qs += static_cast<double>(r.question.size());
            ++nq;
            for (const auto& c : r.candidates) {
                as += static_cast<double>(c.answer.size());
                ++na;
            }
        }
        q_len = static_cast<Index>(std::lround(qs / static_cast<double>(std::max<std::size_t>(nq, 1))));
        a_len = static_cast<Index>(std::lround(as / static_cast<double>(std::max<std::size_t>(na, 1))));
    }

    const bool use_test = !base.test_path.empty();
    std::ostringstream csv;
    csv << "variant,runs,failed,map_mean,map_std,mrr_mean,mrr_std,train_map_mean,train_map_std,params,flops\n";
    out << "eval split " << (use_test ? "test" : "dev") << ", FLOPs at question/answer length " << q_len << "/"
        << a_len << '\n';
    out << std::left << std::setw(9) << "variant" << std::setw(6) << "runs" << std::setw(8) << "failed"
        << std::setw(18) << "MAP" << std::setw(18) << "MRR" << std::setw(18) << "train MAP" << std::setw(12)
        << "params" << "FLOPs" << '\n';

    bool any_failed = false;
    for (Variant v : variants) {
        RunConfig cfg = base;
        cfg.model.variant = v;
        for (const auto& [k, val] : overrides[v]) cfg.set(k, val);
        cfg.model.vocab_size = static_cast<Index>(corpus.vocab.size());
        const std::int64_t params = parameter_count(cfg.model);
        const std::int64_t flops = forward_flops(cfg.model, q_len, a_len);

        std::vector<double> maps, mrrs, train_maps;
        std::size_t failed = 0;
        if (!ab.count_only) {
            for (auto seed : seeds) {
                RunConfig run = cfg;
                run.train.seed = seed;
                const fs::path rdir = dir / std::string(variant_name(v)) / ("seed_" + std::to_string(seed));
                out << "  " << variant_name(v) << " seed " << seed << '\n';
                const RunOutcome o = run_point(run, rdir, out);
                const auto m = use_test ? o.test_map : o.dev_map;
                const auto r = use_test ? o.test_mrr : o.dev_mrr;
                if (!o.ok || !m) {
                    ++failed;
                    any_failed = true;
                    out << "    failed: " << (o.ok ? "no evaluation split" : o.error) << '\n';
                    continue;
                }
                maps.push_back(*m);
                mrrs.push_back(*r);
                if (o.train_map) train_maps.push_back(*o.train_map);
            }
        }
        const std::size_t ok_runs = maps.size();
        const auto mstd = [&](const std::vector<double>& xs) {
            if (xs.empty()) return std::string("-");
            return fixed(mean(xs)) + " +/- " + fixed(stddev(xs));
        };
        const auto cell = [](const std::vector<double>& xs, bool sd) {
            if (xs.empty()) return std::string();
            return num(sd ? stddev(xs) : mean(xs));
        };
        csv << variant_name(v) << ',' << ok_runs << ',' << failed << ',' << cell(maps, false) << ','
            << cell(maps, true) << ',' << cell(mrrs, false) << ',' << cell(mrrs, true) << ','
            << cell(train_maps, false) << ',' << cell(train_maps, true) << ',' << params << ',' << flops << '\n';
        out << std::left << std::setw(9) << variant_name(v) << std::setw(6) << ok_runs << std::setw(8)
            << (failed ? std::to_string(failed) + "!" : "0") << std::setw(18) << mstd(maps) << std::setw(18)
            << mstd(mrrs) << std::setw(18) << mstd(train_maps) << std::setw(12) << params << flops << '\n';
    }
    write_text(dir / "ablation.csv", csv.str());
    out << "table written to " << (dir / "ablation.csv").string() << '\n';
    return any_failed ? 1 : 0;
}

struct EntropyArgs {
    int n = 2;
    std::string section = "questions";
    std::string split = "train";
    std::size_t top_k = 10;
    std::size_t bottom_k = 10;
    std::size_t profile_limit = 20;
};

int cmd_inspect_entropy(const CommonArgs& a, const EntropyArgs& e, std::ostream& out) {
    const RunConfig cfg = resolve(a);
    const Checkpoint ck = require_checkpoint(a.checkpoint);
    const QACorpus corpus = corpus_for_checkpoint(ck, cfg);
    const Section section = parse_section(e.section);
    const Split split = parse_split(e.split);
    if (corpus.split(split).empty()) throw DataError("no data for split '" + e.split + "'; pass --" + e.split);

    const EntropyRanking r = rank_grams_by_entropy(ck.params, corpus, e.n, section, split, e.top_k, e.bottom_k);
    const fs::path dir = a.out_dir.empty() ? fs::path(a.checkpoint).parent_path() : fs::path(a.out_dir);
    const std::string stem = "entropy_n" + std::to_string(e.n) + "_" + e.section + "_" + e.split;
    std::ostringstream csv;
    write_entropy_csv(csv, r);
    write_text(dir / (stem + ".csv"), csv.str());

    std::vector<Sentence> sentences;
    for (const auto& rec : corpus.split(split)) {
        if (section == Section::Questions) {
            sentences.push_back(rec.question);
        } else {
            for (const auto& c : rec.candidates) sentences.push_back(c.answer);
        }
        if (sentences.size() >= e.profile_limit) break;
    }
    if (sentences.size() > e.profile_limit) sentences.resize(e.profile_limit);
    std::vector<std::vector<double>> profiles;
    for (const auto& s : sentences) profiles.push_back(sentence_entropy_profile(ck.params, s, e.n));
    std::ostringstream pcsv;
    write_profile_csv(pcsv, sentences, profiles, e.n, ck.vocab);
    write_text(dir / (stem + "_profile.csv"), pcsv.str());

    out << r.unique_grams << " unique " << e.n << "-grams in " << e.split << " " << e.section << '\n';
    out << "most entangled:\n";
    for (const auto& x : r.top) out << "  " << fixed(x.entropy, 6) << "  " << x.text << "  (x" << x.count << ")\n";
    out << "least entangled:\n";
    for (const auto& x : r.bottom) out << "  " << fixed(x.entropy, 6) << "  " << x.text << "  (x" << x.count << ")\n";
    out << "written " << (dir / (stem + ".csv")).string() << " and " << (dir / (stem + "_profile.csv")).string()
        << '\n';
    return 0;
}

struct NeighborArgs {
    std::string level = "word";
    std::string query;
    std::vector<std::string> candidates;
    std::string candidates_file;
    std::size_t k = 10;
};

int cmd_inspect_neighbors(const CommonArgs& a, const NeighborArgs& na, std::ostream& out) {
    const RunConfig cfg = resolve(a);
    const Checkpoint ck = require_checkpoint(a.checkpoint);
    const NeighborLevel level = parse_level(na.level);
    const std::vector<std::string> query = tokenize(na.query);
    if (query.empty()) throw ConfigError("--query is required");

    std::vector<std::vector<std::string>> candidates;
    for (const auto& c : na.candidates) candidates.push_back(tokenize(c));
    if (!na.candidates_file.empty()) {
        std::ifstream in(na.candidates_file);
        if (!in) throw DataError("cannot open candidate file '" + na.candidates_file + "'");
        std::string line;
        while (std::getline(in, line)) {
            auto toks = tokenize(line);
            if (!toks.empty()) candidates.push_back(std::move(toks));
        }
    }
    if (candidates.empty() && level == NeighborLevel::Word) {
        const auto& toks = ck.vocab.tokens();
        for (std::size_t i = 2; i < toks.size(); ++i) candidates.push_back({toks[i]});
    }
    if (candidates.empty() && level == NeighborLevel::Gram) {
        const QACorpus corpus = corpus_for_checkpoint(ck, cfg);
        std::map<Sentence, bool> seen;
        const int n = static_cast<int>(query.size());
        const auto visit = [&](const Sentence& s) {
            if (static_cast<int>(s.size()) < n) return;
            for (const auto& g : extract_ngrams(s, n)) {
                if (seen.emplace(g, true).second) {
                    std::vector<std::string> words;
                    for (TokenId t : g) words.push_back(ck.vocab.token(t));
                    candidates.push_back(std::move(words));
                }
            }
        };
        for (const auto& rec : corpus.train) {
            visit(rec.question);
            for (const auto& c : rec.candidates) visit(c.answer);
        }
        if (candidates.empty()) throw ConfigError("no gram candidates: pass --candidates or --train");
    }

    const auto entries = nearest_by_fidelity(ck.params, ck.vocab, query, candidates, level, na.k);
    for (const auto& e : entries) out << fixed(e.fidelity, 6) << "  " << e.neighbor << '\n';
    if (!a.out_dir.empty()) {
        std::ostringstream csv;
        write_neighbors_csv(csv, entries);
        const fs::path path = fs::path(a.out_dir) / "neighbors.csv";
        write_text(path, csv.str());
        out << "written " << path.string() << '\n';
    }
    return 0;
}

}  // namespace

RunOutcome train_run(const RunConfig& cfg_in, const fs::path& dir, bool resume, std::ostream& log) {
    RunConfig cfg = cfg_in;
    if (cfg.train_path.empty()) throw ConfigError("no training data: pass --train or set train in the config");
    const QACorpus corpus = load_corpus(cfg.train_path, cfg.dev_path, cfg.test_path, cfg.format);
    cfg.model.vocab_size = static_cast<Index>(corpus.vocab.size());
    cfg.model.validate();
    cfg.train.validate();
    write_manifest(dir, cfg, "train");

    std::optional<TrainState> state;
    const bool resuming = resume && fs::exists(dir / "last.ckpt") && fs::exists(dir / "best.ckpt");
    if (resuming) {
        const Checkpoint last = load_checkpoint(dir / "last.ckpt");
        const Checkpoint best = load_checkpoint(dir / "best.ckpt");
        if (last.vocab.tokens() != corpus.vocab.tokens()) {
            throw DataError("checkpoint vocabulary differs from the corpus in " + dir.string());
        }
        TrainState st;
        st.params = last.params;
        st.best_params = best.params;
        st.epoch = std::stoi(meta(last, "epoch"));
        st.best_score = to_double(meta(last, "best_score"));
        st.epochs_since_best = std::stoi(meta(last, "epochs_since_best"));
        st.steps = std::stoull(meta(last, "steps"));
        restore_optimizer(st, last.extras);
        state = std::move(st);
        log << "resuming from epoch " << state->epoch << '\n';
    }

    std::ofstream jsonl(dir / "log.jsonl", resuming ? std::ios::app : std::ios::trunc);
    if (!jsonl) throw DataError("cannot write '" + (dir / "log.jsonl").string() + "'");
    FitHooks hooks;
    hooks.on_epoch = [&](const TrainState& st, const EpochRecord& rec) {
        jsonl << to_json_line(rec) << '\n';
        jsonl.flush();
        save_checkpoint(dir / "last.ckpt", make_checkpoint(st.params, corpus.vocab, st, cfg, true));
        if (rec.improved) save_checkpoint(dir / "best.ckpt", make_checkpoint(st.best_params, corpus.vocab, st, cfg, false));
        log << "  epoch " << rec.epoch << " loss " << fixed(rec.loss, 5) << " select MAP " << fixed(rec.selection_map)
            << (rec.improved ? " *" : "") << '\n';
    };
    const FitResult fr = fit(corpus, cfg.model, cfg.train, hooks, std::move(state));
    if (!fs::exists(dir / "best.ckpt")) {
        save_checkpoint(dir / "best.ckpt", make_checkpoint(fr.state.best_params, corpus.vocab, fr.state, cfg, false));
    }

    RunOutcome o;
    o.ok = true;
    o.epochs = fr.state.epoch;
    o.stop_reason = fr.stop_reason;
    const ModelParams& best = fr.state.best_params;
    o.train_map = evaluate(best, corpus.train).map;
    if (!corpus.dev.empty()) {
        const EvalResult r = evaluate(best, corpus.dev);
        o.dev_map = r.map;
        o.dev_mrr = r.mrr;
    }
    if (!corpus.test.empty()) {
        const EvalResult r = evaluate(best, corpus.test);
        o.test_map = r.map;
        o.test_mrr = r.mrr;
    }
    std::ostringstream csv;
    csv << "split,map,mrr\n";
    csv << "train," << num(*o.train_map) << ",\n";
    if (o.dev_map) csv << "dev," << num(*o.dev_map) << ',' << num(*o.dev_mrr) << '\n';
    if (o.test_map) csv << "test," << num(*o.test_map) << ',' << num(*o.test_mrr) << '\n';
    write_text(dir / "metrics.csv", csv.str());
    write_text(dir / "metrics.json", outcome_json(o).dump(2) + "\n");
    return o;
}

RunOutcome run_point(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
    const fs::path marker = dir / "result.json";
    if (fs::exists(marker)) {
        std::ifstream in(marker);
        try {
            const RunOutcome prev = outcome_from_json(json::parse(in));
            if (prev.ok) {
                log << "  complete, skipping " << dir.string() << '\n';
                return prev;
            }
        } catch (const json::exception&) {
        }
    }
    RunOutcome o;
    try {
        o = train_run(cfg, dir, true, log);
    } catch (const std::exception& e) {
        o = RunOutcome{};
        o.error = e.what();
    }
    write_text(marker, outcome_json(o).dump(2) + "\n");
    return o;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quantum-inspired answer ranking with entanglement embedding", "qlm"};
    app.set_version_flag("--version", std::string(code_version()));
    app.require_subcommand(1);

    CommonArgs train_a, eval_a, sweep_a, ablate_a, ent_a, nb_a;
    bool resume = false;
    std::string eval_split = "test";
    std::vector<std::string> grid;
    AblateArgs ab;
    EntropyArgs ea;
    NeighborArgs na;

    auto* train = app.add_subcommand("train", "Train one model");
    add_common(train, train_a, true);
    train->add_flag("--resume", resume, "Continue from out-dir/last.ckpt");

    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
    add_common(ev, eval_a, false);
    ev->add_option("--split", eval_split, "Split to evaluate")->check(CLI::IsMember({"train", "dev", "test"}));

    auto* sweep = app.add_subcommand("sweep", "Grid of training runs");
    add_common(sweep, sweep_a, true);
    sweep->add_option("--grid", grid, "key=v1|v2|... (repeatable)")->required();

    auto* ablate = app.add_subcommand("ablate", "Variant x seed ablation table");
    add_common(ablate, ablate_a, true);
    ablate->add_option("--variants", ab.variants, "Comma-separated variants");
    ablate->add_option("--seeds", ab.seeds, "Seeds, e.g. 0-9 or 0,3,7");
    ablate->add_option("--variant-override", ab.overrides, "VARIANT:key=value (repeatable)");
    ablate->add_option("--ref-lengths", ab.ref_lengths, "QUESTION_LEN,ANSWER_LEN for the FLOPs column");
    ablate->add_flag("--count-only", ab.count_only, "Only report parameter and FLOPs counts");

    auto* ent = app.add_subcommand("inspect-entropy", "Rank n-grams by entanglement entropy");
    add_common(ent, ent_a, false);
    ent->add_option("--n", ea.n, "Gram size")->check(CLI::IsMember({2, 3}));
    ent->add_option("--section", ea.section, "questions or answers")->check(CLI::IsMember({"questions", "answers"}));
    ent->add_option("--split", ea.split, "Corpus split")->check(CLI::IsMember({"train", "dev", "test"}));
    ent->add_option("--top-k", ea.top_k, "Most entangled grams to report");
    ent->add_option("--bottom-k", ea.bottom_k, "Least entangled grams to report");
    ent->add_option("--profile-limit", ea.profile_limit, "Sentences in the profile CSV");

    auto* nb = app.add_subcommand("inspect-neighbors", "Nearest words or grams by fidelity");
    add_common(nb, nb_a, false);
    nb->add_option("--level", na.level, "word or gram")->check(CLI::IsMember({"word", "gram"}));
    nb->add_option("--query", na.query, "Query word or gram")->required();
    nb->add_option("--candidates", na.candidates, "Candidate items (repeatable)");
    nb->add_option("--candidates-file", na.candidates_file, "One candidate per line");
    nb->add_option("--k", na.k, "Neighbours to report");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (train->parsed()) return cmd_train(train_a, resume, out);
        if (ev->parsed()) return cmd_eval(eval_a, eval_split, out);
        if (sweep->parsed()) return cmd_sweep(sweep_a, grid, out);
        if (ablate->parsed()) return cmd_ablate(ablate_a, ab, out);
        if (ent->parsed()) return cmd_inspect_entropy(ent_a, ea, out);
        if (nb->parsed()) return cmd_inspect_neighbors(nb_a, na, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace qlm::cli
