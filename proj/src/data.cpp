#include "qlm/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

#include "qlm/errors.hpp"

namespace qlm {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j == i) break;
        std::string word(text.substr(i, j - i));
        for (char& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

        std::size_t end = word.size();
        while (end > 0 && std::ispunct(static_cast<unsigned char>(word[end - 1]))) --end;
        if (end > 0) out.push_back(word.substr(0, end));
        for (std::size_t k = end; k < word.size(); ++k) out.emplace_back(1, word[k]);
        i = j;
    }
    return out;
}

Vocabulary Vocabulary::from_counts(const std::map<std::string, std::size_t>& counts) {
    std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> tokens;
    tokens.reserve(items.size());
    for (auto& [tok, n] : items) tokens.push_back(tok);
    return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens_after_reserved) {
    Vocabulary v;
    for (auto& tok : tokens_after_reserved) {
        if (v.ids_.count(tok)) continue;
        v.ids_.emplace(tok, static_cast<TokenId>(v.tokens_.size()));
        v.tokens_.push_back(std::move(tok));
    }
    return v;
}

TokenId Vocabulary::id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) return tokens_[kUnk];
    return tokens_[static_cast<std::size_t>(id)];
}

Sentence Vocabulary::encode(std::string_view text) const {
    Sentence s;
    for (const auto& tok : tokenize(text)) s.push_back(id(tok));
    return s;
}

std::string Vocabulary::decode(const Sentence& ids) const {
    std::string out;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        if (k) out += ' ';
        out += token(ids[k]);
    }
    return out;
}

Split parse_split(std::string_view name) {
    if (name == "train") return Split::Train;
    if (name == "dev") return Split::Dev;
    if (name == "test") return Split::Test;
    throw std::invalid_argument("unknown split '" + std::string(name) + "'");
}

std::string_view split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        case Split::Test: return "test";
    }
    return "?";
}

const std::vector<QARecord>& QACorpus::split(Split s) const {
    switch (s) {
        case Split::Train: return train;
        case Split::Dev: return dev;
        case Split::Test: return test;
    }
    return train;
}

std::vector<RawQuestion> parse_tsv(std::string_view contents, const std::string& source) {
    std::vector<RawQuestion> out;
    std::unordered_map<std::string, std::size_t> index;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < contents.size()) {
        std::size_t nl = contents.find('\n', pos);
        if (nl == std::string_view::npos) nl = contents.size();
        std::string_view line = contents.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        if (line_no == 1 && line.starts_with("question_id")) continue;

        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string_view::npos ? line.npos : tab - start));
            if (tab == std::string_view::npos) break;
            start = tab + 1;
        }
        const auto fail = [&](const std::string& why) {
            throw DataError(source + ":" + std::to_string(line_no) + ": " + why);
        };
        if (fields.size() != 4) fail("expected 4 tab-separated fields, found " + std::to_string(fields.size()));
        if (fields[0].empty()) fail("empty question_id");
        int label = 0;
        if (fields[3] == "1") label = 1;
        else if (fields[3] == "0") label = 0;
        else fail("label must be 0 or 1, got '" + std::string(fields[3]) + "'");

        const std::string qid(fields[0]);
        auto it = index.find(qid);
        if (it == index.end()) {
            it = index.emplace(qid, out.size()).first;
            out.push_back(RawQuestion{qid, tokenize(fields[1]), {}});
        }
        out[it->second].candidates.push_back(RawCandidate{tokenize(fields[2]), label});
    }
    if (out.empty()) throw DataError(source + ": no question records");
    return out;
}

std::vector<RawQuestion> read_tsv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open data file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_tsv(ss.str(), path.string());
}

namespace {

std::vector<QARecord> encode_records(const Vocabulary& vocab, const std::vector<RawQuestion>& raw) {
    std::vector<QARecord> out;
    out.reserve(raw.size());
    const auto enc = [&](const std::vector<std::string>& toks) {
        Sentence s;
        s.reserve(toks.size());
        for (const auto& t : toks) s.push_back(vocab.id(t));
        return s;
    };
    for (const auto& q : raw) {
        QARecord r{q.id, enc(q.question), {}};
        for (const auto& c : q.candidates) r.candidates.push_back(Candidate{enc(c.answer), c.label});
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

QACorpus build_corpus(const std::vector<RawQuestion>& train, const std::vector<RawQuestion>& dev,
                      const std::vector<RawQuestion>& test) {
    if (train.empty()) throw DataError("training split is empty");
    std::map<std::string, std::size_t> counts;
    for (const auto& q : train) {
        for (const auto& t : q.question) ++counts[t];
        for (const auto& c : q.candidates) {
            for (const auto& t : c.answer) ++counts[t];
        }
    }
    QACorpus c;
    c.vocab = Vocabulary::from_counts(counts);
    c.train = encode_records(c.vocab, train);
    c.dev = encode_records(c.vocab, dev);
    c.test = encode_records(c.vocab, test);
    return c;
}

QACorpus encode_corpus(Vocabulary vocab, const std::vector<RawQuestion>& train,
                       const std::vector<RawQuestion>& dev, const std::vector<RawQuestion>& test) {
    QACorpus c;
    c.vocab = std::move(vocab);
    c.train = encode_records(c.vocab, train);
    c.dev = encode_records(c.vocab, dev);
    c.test = encode_records(c.vocab, test);
    return c;
}

QACorpus load_corpus(const std::filesystem::path& train, const std::filesystem::path& dev,
                     const std::filesystem::path& test, std::string_view format) {
    if (format != "tsv") throw DataError("unsupported corpus format '" + std::string(format) + "'");
    const auto raw_train = read_tsv(train);
    const auto raw_dev = dev.empty() ? std::vector<RawQuestion>{} : read_tsv(dev);
    const auto raw_test = test.empty() ? std::vector<RawQuestion>{} : read_tsv(test);
    return build_corpus(raw_train, raw_dev, raw_test);
}

std::size_t count_positive_pairs(const QACorpus& corpus) {
    std::size_t n = 0;
    for (const auto& q : corpus.train) {
        for (const auto& c : q.candidates) n += c.label == 1;
    }
    return n;
}

std::vector<Triplet> sample_triplets(const QACorpus& corpus, std::uint64_t seed, std::size_t count) {
    struct Ref {
        std::size_t q;
        std::size_t c;
    };
    std::vector<Ref> positives;
    std::vector<Ref> negatives;
    for (std::size_t q = 0; q < corpus.train.size(); ++q) {
        const auto& cands = corpus.train[q].candidates;
        for (std::size_t c = 0; c < cands.size(); ++c) {
            (cands[c].label == 1 ? positives : negatives).push_back(Ref{q, c});
        }
    }
    if (positives.empty()) throw DataError("sample_triplets: no positive answers in the training split");
    if (negatives.empty()) throw DataError("sample_triplets: no negative answers in the training split");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_negative(0, negatives.size() - 1);
    std::vector<std::size_t> order(positives.size());
    std::vector<Triplet> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t slot = k % positives.size();
        if (slot == 0) {
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::shuffle(order.begin(), order.end(), rng);
        }
        const Ref pos = positives[order[slot]];
        const Ref neg = negatives[pick_negative(rng)];
        const auto& qrec = corpus.train[pos.q];
        out.push_back(Triplet{pos.q, qrec.question, qrec.candidates[pos.c].answer,
                              corpus.train[neg.q].candidates[neg.c].answer});
    }
    return out;
}

}  // namespace qlm
