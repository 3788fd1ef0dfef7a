#pragma once

// Post-hoc analysis of a trained model: entanglement entropy of n-grams after
// the EE stack, and fidelity neighbours of words and grams.

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "qlm/data.hpp"
#include "qlm/model.hpp"

namespace qlm {

enum class Section { Questions, Answers };

Section parse_section(std::string_view name);
std::string_view section_name(Section s);

struct EntropyEntry {
    Sentence gram;
    std::string text;      // tokens joined by spaces
    double entropy = 0.0;  // nats, split [D^(n-1), D]
    std::size_t count = 0; // occurrences in the section
};

struct EntropyRanking {
    int n = 2;
    Section section = Section::Questions;
    Split split = Split::Train;
    std::size_t unique_grams = 0;
    std::vector<EntropyEntry> top;     // highest entropy first
    std::vector<EntropyEntry> bottom;  // lowest entropy first
};

/// Entropy of one gram's pre-measurement state between its first n-1 words and
/// its last word.
double gram_entropy(const ModelParams& params, const Sentence& gram);

/// Unique n-grams (first-appearance order, with counts) of one corpus section,
/// ranked by entropy. Ties keep first-appearance order. Throws ConfigError for
/// n outside {2, 3} or a model without a pipeline for n.
EntropyRanking rank_grams_by_entropy(const ModelParams& params, const QACorpus& corpus, int n, Section section,
                                     Split split, std::size_t top_k, std::size_t bottom_k);

/// Entropy of each consecutive gram of `sentence`, in order.
std::vector<double> sentence_entropy_profile(const ModelParams& params, const Sentence& sentence, int n = 2);

enum class NeighborLevel { Word, Gram };

NeighborLevel parse_level(std::string_view name);

struct NeighborEntry {
    std::string query;
    std::string neighbor;
    double fidelity = 0.0;
};

/// Top-k candidates by fidelity to the query. Word level compares embedded word
/// states of single tokens; gram level compares post-EE gram states. Candidates
/// with the query's token sequence are skipped; ties keep candidate order.
/// Throws std::invalid_argument for an empty candidate list.
std::vector<NeighborEntry> nearest_by_fidelity(const ModelParams& params, const Vocabulary& vocab,
                                               const std::vector<std::string>& query,
                                               const std::vector<std::vector<std::string>>& candidates,
                                               NeighborLevel level, std::size_t k);

/// CSV header `rank,kind,gram,entropy,count`; kind is `top` or `bottom`.
void write_entropy_csv(std::ostream& out, const EntropyRanking& ranking);

/// CSV header `sentence,left,right,entropy` for 2-gram profiles; longer grams
/// put every token but the last in `left`.
void write_profile_csv(std::ostream& out, const std::vector<Sentence>& sentences,
                       const std::vector<std::vector<double>>& profiles, int n, const Vocabulary& vocab);

/// CSV header `query,neighbor,fidelity`.
void write_neighbors_csv(std::ostream& out, const std::vector<NeighborEntry>& entries);

/// Quotes a CSV field when it holds a comma, quote or newline.
std::string csv_field(std::string_view s);

}  // namespace qlm
