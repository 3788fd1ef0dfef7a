#pragma once

// Answer-ranking metrics. Questions with no positive candidate are excluded
// from MAP and MRR.

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "qlm/data.hpp"
#include "qlm/model.hpp"

namespace qlm {

/// Mean over positive positions k of (positives in the top k) / k; empty when
/// the list has no positive.
std::optional<double> average_precision(std::span<const int> ranked_labels);

/// 1 / (1-based position of the first positive); empty when there is none.
std::optional<double> reciprocal_rank(std::span<const int> ranked_labels);

/// Candidates ordered by descending score; equal scores keep input order.
struct RankedList {
    std::vector<std::size_t> order;  // input indices, best first
    std::vector<double> scores;      // aligned with order
    std::vector<int> labels;         // aligned with order

    static RankedList rank(std::span<const double> scores, std::span<const int> labels);
};

struct QuestionReport {
    std::string id;
    std::size_t candidates = 0;
    std::size_t positives = 0;
    std::optional<double> ap;
    std::optional<double> rr;
};

struct EvalResult {
    double map = 0.0;
    double mrr = 0.0;
    std::size_t evaluated = 0;  // questions with at least one positive
    std::vector<QuestionReport> questions;
};

/// Metrics from precomputed candidate scores, one score list per question.
/// Throws DataError when the split is empty or no question has a positive.
EvalResult evaluate_scores(const std::vector<QARecord>& split,
                           const std::vector<std::vector<double>>& scores);

/// Cosine score of every candidate. A zero-norm feature vector scores 0.
std::vector<std::vector<double>> score_split(const ModelParams& params, const std::vector<QARecord>& split);

EvalResult evaluate(const ModelParams& params, const std::vector<QARecord>& split);

/// Plain-text report:
///
///   MAP <value>
///   MRR <value>
///   questions <evaluated>/<total>
///   question_id<TAB>candidates<TAB>positives<TAB>ap<TAB>rr
///   ...
///
/// with `-` in place of metrics for excluded questions.
void write_report(std::ostream& out, const EvalResult& result);

}  // namespace qlm
