#pragma once

// Question-answering corpora: tokenization, vocabulary, TSV ingestion and
// triplet sampling.
//
// File format (tab-separated, UTF-8, one candidate answer per line):
//
//   question_id<TAB>question<TAB>answer<TAB>label
//
// An optional header line starting with `question_id` is skipped. Lines that
// share a question_id form one question record, in order of first appearance.
// label is 0 or 1.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qlm {

using TokenId = std::int32_t;
using Sentence = std::vector<TokenId>;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;

/// Lowercase, split on whitespace, and split trailing punctuation characters
/// into tokens of their own ("times." -> "times", ".").
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
  public:
    /// Tokens sorted by descending count, then lexicographically; ids start at 2.
    static Vocabulary from_counts(const std::map<std::string, std::size_t>& counts);
    static Vocabulary from_tokens(std::vector<std::string> tokens_after_reserved);

    TokenId id(const std::string& token) const;  // kUnk when absent
    const std::string& token(TokenId id) const;
    bool contains(const std::string& token) const { return ids_.count(token) != 0; }
    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    Sentence encode(std::string_view text) const;
    std::string decode(const Sentence& ids) const;

  private:
    std::vector<std::string> tokens_{"<pad>", "<unk>"};
    std::unordered_map<std::string, TokenId> ids_{{"<pad>", kPad}, {"<unk>", kUnk}};
};

struct RawCandidate {
    std::vector<std::string> answer;
    int label = 0;
};

struct RawQuestion {
    std::string id;
    std::vector<std::string> question;
    std::vector<RawCandidate> candidates;
};

struct Candidate {
    Sentence answer;
    int label = 0;
};

struct QARecord {
    std::string id;
    Sentence question;
    std::vector<Candidate> candidates;
};

enum class Split { Train, Dev, Test };

Split parse_split(std::string_view name);
std::string_view split_name(Split s);

struct QACorpus {
    Vocabulary vocab;
    std::vector<QARecord> train;
    std::vector<QARecord> dev;
    std::vector<QARecord> test;

    const std::vector<QARecord>& split(Split s) const;
};

/// Parses one TSV file. Throws DataError naming the line on malformed input and
/// when the file holds no records.
std::vector<RawQuestion> read_tsv(const std::filesystem::path& path);
std::vector<RawQuestion> parse_tsv(std::string_view contents, const std::string& source = "<memory>");

/// Builds the vocabulary from the training questions and answers; dev and test
/// tokens outside it map to kUnk. Empty dev/test lists are allowed.
QACorpus build_corpus(const std::vector<RawQuestion>& train, const std::vector<RawQuestion>& dev,
                      const std::vector<RawQuestion>& test);

/// Encodes splits against an existing vocabulary (a checkpoint's); the training
/// split may be empty.
QACorpus encode_corpus(Vocabulary vocab, const std::vector<RawQuestion>& train,
                       const std::vector<RawQuestion>& dev, const std::vector<RawQuestion>& test);

/// Loads a corpus from up to three files. Only `format == "tsv"` is supported.
/// An empty dev or test path leaves that split empty.
QACorpus load_corpus(const std::filesystem::path& train, const std::filesystem::path& dev,
                     const std::filesystem::path& test, std::string_view format = "tsv");

struct Triplet {
    std::size_t question_index = 0;  // into corpus.train
    Sentence question;
    Sentence positive;
    Sentence negative;
};

/// Number of (question, positive answer) pairs in the training split.
std::size_t count_positive_pairs(const QACorpus& corpus);

/// Draws `count` triplets from the training split. Positive pairs are visited in
/// a seeded shuffled order (cycled as needed); each negative is drawn uniformly
/// from every label-0 candidate in the training split. Questions without a
/// positive never appear.
std::vector<Triplet> sample_triplets(const QACorpus& corpus, std::uint64_t seed, std::size_t count);

}  // namespace qlm
