#include "qlm/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>

namespace qlm {

std::optional<double> average_precision(std::span<const int> ranked_labels) {
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < ranked_labels.size(); ++k) {
        if (ranked_labels[k] == 1) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    }
    if (hits == 0) return std::nullopt;
    return sum / static_cast<double>(hits);
}

std::optional<double> reciprocal_rank(std::span<const int> ranked_labels) {
    for (std::size_t k = 0; k < ranked_labels.size(); ++k) {
        if (ranked_labels[k] == 1) return 1.0 / static_cast<double>(k + 1);
    }
    return std::nullopt;
}

RankedList RankedList::rank(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DimensionError("rank: scores and labels differ in length");
    RankedList r;
    r.order.resize(scores.size());
    std::iota(r.order.begin(), r.order.end(), std::size_t{0});
    std::stable_sort(r.order.begin(), r.order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    for (std::size_t i : r.order) {
        r.scores.push_back(scores[i]);
        r.labels.push_back(labels[i]);
    }
    return r;
}

EvalResult evaluate_scores(const std::vector<QARecord>& split, const std::vector<std::vector<double>>& scores) {
    if (split.empty()) throw DataError("evaluate: split is empty");
    if (scores.size() != split.size()) throw DimensionError("evaluate: one score list per question required");
    EvalResult res;
    double ap_sum = 0.0;
    double rr_sum = 0.0;
    for (std::size_t q = 0; q < split.size(); ++q) {
        const auto& rec = split[q];
        std::vector<int> labels;
        for (const auto& c : rec.candidates) labels.push_back(c.label);
        const RankedList ranked = RankedList::rank(scores[q], labels);

        QuestionReport rep{rec.id, labels.size(),
                           static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1)),
                           average_precision(ranked.labels), reciprocal_rank(ranked.labels)};
        if (rep.ap) {
            ap_sum += *rep.ap;
            rr_sum += *rep.rr;
            ++res.evaluated;
        }
        res.questions.push_back(std::move(rep));
    }
    if (res.evaluated == 0) throw DataError("evaluate: no question has a positive candidate");
    res.map = ap_sum / static_cast<double>(res.evaluated);
    res.mrr = rr_sum / static_cast<double>(res.evaluated);
    return res;
}

std::vector<std::vector<double>> score_split(const ModelParams& params, const std::vector<QARecord>& split) {
    std::vector<std::vector<double>> out;
    out.reserve(split.size());
    for (const auto& rec : split) {
        const RVecd q = sentence_vector(params, rec.question);
        std::vector<double> s;
        s.reserve(rec.candidates.size());
        for (const auto& c : rec.candidates) {
            const RVecd a = sentence_vector(params, c.answer);
            s.push_back(q.norm() == 0.0 || a.norm() == 0.0 ? 0.0 : match_score(q, a));
        }
        out.push_back(std::move(s));
    }
    return out;
}

EvalResult evaluate(const ModelParams& params, const std::vector<QARecord>& split) {
    if (split.empty()) throw DataError("evaluate: split is empty");
    return evaluate_scores(split, score_split(params, split));
}

void write_report(std::ostream& out, const EvalResult& result) {
    const auto flags = out.flags();
    out << std::setprecision(6) << std::fixed;
    out << "MAP " << result.map << '\n';
    out << "MRR " << result.mrr << '\n';
    out << "questions " << result.evaluated << '/' << result.questions.size() << '\n';
    out << "question_id\tcandidates\tpositives\tap\trr\n";
    for (const auto& q : result.questions) {
        out << q.id << '\t' << q.candidates << '\t' << q.positives << '\t';
        if (q.ap) out << *q.ap << '\t' << *q.rr;
        else out << "-\t-";
        out << '\n';
    }
    out.flags(flags);
}

}  // namespace qlm
