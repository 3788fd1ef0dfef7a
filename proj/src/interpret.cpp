#include "qlm/interpret.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <numeric>

namespace qlm {

namespace {

void require_trained(const ModelParams& params) {
    if (params.pipelines.empty() || params.embedding.vocab_size() == 0) {
        throw ConfigError("model parameters are missing; load a checkpoint first");
    }
}

std::string join_tokens(const Sentence& s, const Vocabulary& vocab) { return vocab.decode(s); }

std::string join_words(const std::vector<std::string>& words) {
    std::string out;
    for (std::size_t k = 0; k < words.size(); ++k) {
        if (k) out += ' ';
        out += words[k];
    }
    return out;
}

}  // namespace

Section parse_section(std::string_view name) {
    if (name == "questions") return Section::Questions;
    if (name == "answers") return Section::Answers;
    throw ConfigError("unknown section '" + std::string(name) + "' (questions|answers)");
}

std::string_view section_name(Section s) { return s == Section::Questions ? "questions" : "answers"; }

NeighborLevel parse_level(std::string_view name) {
    if (name == "word") return NeighborLevel::Word;
    if (name == "gram") return NeighborLevel::Gram;
    throw ConfigError("unknown neighbour level '" + std::string(name) + "' (word|gram)");
}

double gram_entropy(const ModelParams& params, const Sentence& gram) {
    require_trained(params);
    const int n = static_cast<int>(gram.size());
    if (n < 2) throw ConfigError("gram entropy needs at least two words");
    const PureState state = gram_state(params, params.pipeline(n), gram);
    return entanglement_entropy(state, last_word_split(params.config.dim, n));
}

EntropyRanking rank_grams_by_entropy(const ModelParams& params, const QACorpus& corpus, int n, Section section,
                                     Split split, std::size_t top_k, std::size_t bottom_k) {
    require_trained(params);
    if (n != 2 && n != 3) throw ConfigError("entropy ranking supports gram sizes 2 and 3");
    params.pipeline(n);

    std::vector<Sentence> grams;
    std::vector<std::size_t> counts;
    std::map<Sentence, std::size_t> index;
    const auto visit = [&](const Sentence& s) {
        for (auto& g : extract_ngrams(s, n)) {
            auto [it, inserted] = index.emplace(g, grams.size());
            if (inserted) {
                grams.push_back(std::move(g));
                counts.push_back(0);
            }
            ++counts[it->second];
        }
    };
    for (const auto& rec : corpus.split(split)) {
        if (section == Section::Questions) {
            visit(rec.question);
        } else {
            for (const auto& c : rec.candidates) visit(c.answer);
        }
    }

    std::vector<EntropyEntry> entries;
    entries.reserve(grams.size());
    for (std::size_t g = 0; g < grams.size(); ++g) {
        entries.push_back(EntropyEntry{grams[g], join_tokens(grams[g], corpus.vocab), gram_entropy(params, grams[g]),
                                       counts[g]});
    }

    EntropyRanking r;
    r.n = n;
    r.section = section;
    r.split = split;
    r.unique_grams = entries.size();
    std::vector<std::size_t> order(entries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return entries[a].entropy > entries[b].entropy; });
    for (std::size_t k = 0; k < std::min(top_k, order.size()); ++k) r.top.push_back(entries[order[k]]);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return entries[a].entropy < entries[b].entropy; });
    for (std::size_t k = 0; k < std::min(bottom_k, order.size()); ++k) r.bottom.push_back(entries[order[k]]);
    return r;
}

std::vector<double> sentence_entropy_profile(const ModelParams& params, const Sentence& sentence, int n) {
    std::vector<double> out;
    for (const auto& g : extract_ngrams(sentence, n)) out.push_back(gram_entropy(params, g));
    return out;
}

std::vector<NeighborEntry> nearest_by_fidelity(const ModelParams& params, const Vocabulary& vocab,
                                               const std::vector<std::string>& query,
                                               const std::vector<std::vector<std::string>>& candidates,
                                               NeighborLevel level, std::size_t k) {
    require_trained(params);
    if (candidates.empty()) throw std::invalid_argument("nearest_by_fidelity: empty candidate set");
    if (query.empty()) throw std::invalid_argument("nearest_by_fidelity: empty query");

    const auto encode = [&](const std::vector<std::string>& words) {
        Sentence s;
        for (const auto& w : words) s.push_back(vocab.id(w));
        return s;
    };
    const auto state = [&](const Sentence& s) {
        if (level == NeighborLevel::Word) {
            if (s.size() != 1) throw std::invalid_argument("word-level items must be single tokens");
            return embed_word(params.embedding, s[0]);
        }
        return gram_state(params, params.pipeline(static_cast<int>(s.size())), s);
    };

    const Sentence q = encode(query);
    const PureState qs = state(q);
    std::vector<NeighborEntry> scored;
    for (const auto& cand : candidates) {
        if (cand == query) continue;
        const Sentence c = encode(cand);
        if (c.size() != q.size()) throw std::invalid_argument("candidate '" + join_words(cand) + "' differs in length from the query");
        scored.push_back(NeighborEntry{join_words(query), join_words(cand), fidelity(qs, state(c))});
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const NeighborEntry& a, const NeighborEntry& b) { return a.fidelity > b.fidelity; });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_entropy_csv(std::ostream& out, const EntropyRanking& ranking) {
    out << "rank,kind,gram,entropy,count\n";
    out << std::setprecision(12);
    for (std::size_t k = 0; k < ranking.top.size(); ++k) {
        const auto& e = ranking.top[k];
        out << k + 1 << ",top," << csv_field(e.text) << ',' << e.entropy << ',' << e.count << '\n';
    }
    for (std::size_t k = 0; k < ranking.bottom.size(); ++k) {
        const auto& e = ranking.bottom[k];
        out << k + 1 << ",bottom," << csv_field(e.text) << ',' << e.entropy << ',' << e.count << '\n';
    }
}

void write_profile_csv(std::ostream& out, const std::vector<Sentence>& sentences,
                       const std::vector<std::vector<double>>& profiles, int n, const Vocabulary& vocab) {
    if (sentences.size() != profiles.size()) throw DimensionError("write_profile_csv: one profile per sentence");
    out << "sentence,left,right,entropy\n";
    out << std::setprecision(12);
    for (std::size_t s = 0; s < sentences.size(); ++s) {
        const auto grams = extract_ngrams(sentences[s], n);
        for (std::size_t g = 0; g < grams.size() && g < profiles[s].size(); ++g) {
            const Sentence left(grams[g].begin(), grams[g].end() - 1);
            out << s << ',' << csv_field(vocab.decode(left)) << ',' << csv_field(vocab.token(grams[g].back())) << ','
                << profiles[s][g] << '\n';
        }
    }
}

void write_neighbors_csv(std::ostream& out, const std::vector<NeighborEntry>& entries) {
    out << "query,neighbor,fidelity\n";
    out << std::setprecision(12);
    for (const auto& e : entries) out << csv_field(e.query) << ',' << csv_field(e.neighbor) << ',' << e.fidelity << '\n';
}

}  // namespace qlm
