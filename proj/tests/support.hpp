#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "qlm/data.hpp"
#include "qlm/model.hpp"
#include "qlm/quantum.hpp"
#include "qlm/training.hpp"

#ifndef QLM_FIXTURES
#define QLM_FIXTURES "fixtures"
#endif

namespace qlm::test {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(QLM_FIXTURES) / name; }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("qlm_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline CVecd gaussian_cvec(std::mt19937_64& rng, Index dim) {
    std::normal_distribution<double> g;
    CVecd v(dim);
    for (Index i = 0; i < dim; ++i) v(i) = {g(rng), g(rng)};
    return v;
}

inline PureState random_state(std::mt19937_64& rng, Index dim) {
    return PureState(gaussian_cvec(rng, dim).normalized());
}

/// Columns of the Q factor of a Gaussian matrix, Gram-Schmidt style.
inline CMatd random_unitary(std::mt19937_64& rng, Index dim) {
    CMatd q(dim, dim);
    for (Index j = 0; j < dim; ++j) {
        CVecd v = gaussian_cvec(rng, dim);
        for (int pass = 0; pass < 2; ++pass) {
            for (Index k = 0; k < j; ++k) v -= q.col(k).dot(v) * q.col(k);
        }
        q.col(j) = v.normalized();
    }
    return q;
}

inline Sentence random_sentence(std::mt19937_64& rng, Index vocab, std::size_t min_len, std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> len(min_len, max_len);
    std::uniform_int_distribution<TokenId> tok(2, static_cast<TokenId>(vocab - 1));
    Sentence s(len(rng));
    for (auto& t : s) t = tok(rng);
    return s;
}

inline ModelConfig tiny_config(Variant v = Variant::EE) {
    ModelConfig c;
    c.variant = v;
    c.gram_sizes = {2};
    c.dim = 4;
    c.measurements = 8;
    c.ee_depth = 1;
    c.vocab_size = 10;
    return c;
}

/// Loss of the plain forward pass, the reference for finite differences.
inline double plain_loss(const ModelParams& p, const std::vector<Triplet>& batch) {
    double total = 0.0;
    for (const auto& tr : batch) {
        const RVecd q = sentence_vector(p, tr.question);
        const double pos = match_score(q, sentence_vector(p, tr.positive));
        const double neg = match_score(q, sentence_vector(p, tr.negative));
        total += hinge_loss(pos, neg);
    }
    return total / static_cast<double>(batch.size());
}

/// Smallest distance of any triplet's hinge argument from the kink.
inline double min_hinge_gap(const ModelParams& p, const std::vector<Triplet>& batch) {
    double gap = 1e300;
    for (const auto& tr : batch) {
        const RVecd q = sentence_vector(p, tr.question);
        const double arg = kHingeMargin - match_score(q, sentence_vector(p, tr.positive)) +
                           match_score(q, sentence_vector(p, tr.negative));
        gap = std::min(gap, std::abs(arg));
    }
    return gap;
}

struct GradientCheck {
    double amplitudes = 0.0;
    double phases = 0.0;
    double ee = 0.0;
    double bank = 0.0;
    double analytic_norm_min = 1e300;  // smallest analytic group norm
};

/// ||a - b|| / max(||a||, ||b||), with 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double scale = std::sqrt(std::max(na, nb));
    return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

/// Central differences of plain_loss against batch_gradient, per parameter group.
/// Only embedding rows used by the batch are compared.
inline GradientCheck check_gradients(const ModelParams& params, const std::vector<Triplet>& batch, double h) {
    const LossAndGrads lg = batch_gradient(params, batch);
    std::vector<Index> rows;
    for (const auto& tr : batch) {
        for (const Sentence* s : {&tr.question, &tr.positive, &tr.negative}) {
            for (TokenId t : *s) rows.push_back(t);
        }
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());

    ModelParams p = params;
    const auto central = [&](double& x) {
        const double x0 = x;
        x = x0 + h;
        const double up = plain_loss(p, batch);
        x = x0 - h;
        const double down = plain_loss(p, batch);
        x = x0;
        return (up - down) / (2.0 * h);
    };

    GradientCheck out;
    std::vector<double> an, fd;
    const auto finish = [&](double& slot) {
        slot = relative_error(an, fd);
        double n = 0.0;
        for (double v : an) n += v * v;
        out.analytic_norm_min = std::min(out.analytic_norm_min, std::sqrt(n));
        an.clear();
        fd.clear();
    };

    for (Index r : rows) {
        for (Index j = 0; j < p.embedding.dim(); ++j) {
            an.push_back(lg.grads.amplitudes(r, j));
            fd.push_back(central(p.embedding.amplitudes(r, j)));
        }
    }
    finish(out.amplitudes);
    for (Index r : rows) {
        for (Index j = 0; j < p.embedding.dim(); ++j) {
            an.push_back(lg.grads.phases(r, j));
            fd.push_back(central(p.embedding.phases(r, j)));
        }
    }
    finish(out.phases);

    const auto complex_group = [&](CMatd& m, const CMatd& g) {
        for (Index i = 0; i < m.rows(); ++i) {
            for (Index j = 0; j < m.cols(); ++j) {
                auto* parts = reinterpret_cast<double*>(&m(i, j));
                an.push_back(g(i, j).real());
                fd.push_back(central(parts[0]));
                an.push_back(g(i, j).imag());
                fd.push_back(central(parts[1]));
            }
        }
    };
    for (std::size_t k = 0; k < p.pipelines.size(); ++k) {
        for (std::size_t l = 0; l < p.pipelines[k].ee.weights.size(); ++l) {
            complex_group(p.pipelines[k].ee.weights[l], lg.grads.ee[k][l]);
        }
    }
    finish(out.ee);
    for (std::size_t k = 0; k < p.pipelines.size(); ++k) {
        complex_group(p.pipelines[k].bank.vectors, lg.grads.banks[k]);
    }
    finish(out.bank);
    return out;
}

/// Seeded tiny model and a batch whose every hinge is active and away from its kink.
struct GradientProblem {
    ModelParams params;
    std::vector<Triplet> batch;
};

inline GradientProblem gradient_problem(std::uint64_t seed) {
    const ModelConfig cfg = tiny_config();
    for (std::uint64_t s = seed;; ++s) {
        GradientProblem gp{init_params(cfg, s), {}};
        std::mt19937_64 rng(s);
        for (int attempt = 0; attempt < 200 && gp.batch.size() < 4; ++attempt) {
            Triplet tr;
            tr.question = random_sentence(rng, cfg.vocab_size, 2, 4);
            tr.positive = random_sentence(rng, cfg.vocab_size, 2, 4);
            tr.negative = random_sentence(rng, cfg.vocab_size, 2, 4);
            const RVecd q = sentence_vector(gp.params, tr.question);
            const double arg = kHingeMargin - match_score(q, sentence_vector(gp.params, tr.positive)) +
                               match_score(q, sentence_vector(gp.params, tr.negative));
            if (arg > 1e-3) gp.batch.push_back(std::move(tr));
        }
        if (gp.batch.size() == 4 && min_hinge_gap(gp.params, gp.batch) > 1e-3) return gp;
    }
}

/// Ranked label lists with hand-computed AP and RR; AP < 0 marks "no positive".
struct HandList {
    std::vector<int> labels;
    double ap;
    double rr;
};

inline const std::vector<HandList>& hand_lists() {
    static const std::vector<HandList> lists{
        {{1}, 1.0, 1.0},
        {{0, 1}, 0.5, 0.5},
        {{1, 0, 0}, 1.0, 1.0},
        {{0, 1, 0, 1}, 0.5, 0.5},
        {{1, 1, 0, 0}, 1.0, 1.0},
        {{0, 0, 1, 1}, (1.0 / 3 + 2.0 / 4) / 2, 1.0 / 3},
        {{1, 0, 1, 0, 1}, (1.0 + 2.0 / 3 + 3.0 / 5) / 3, 1.0},
        {{0, 0, 0, 0, 1}, 0.2, 0.2},
        {{0, 1, 1, 0, 0, 1}, (1.0 / 2 + 2.0 / 3 + 3.0 / 6) / 3, 0.5},
        {{1, 1, 1}, 1.0, 1.0},
        {{0, 0, 0}, -1.0, -1.0},
        {{0, 0, 1, 0, 0, 0, 0, 1}, (1.0 / 3 + 2.0 / 8) / 2, 1.0 / 3},
    };
    return lists;
}

struct ReferenceMetrics {
    double map = 0.0;
    double mrr = 0.0;
    std::size_t evaluated = 0;
};

/// Pairwise-count scorer: a candidate's rank is one plus the candidates scored
/// strictly higher plus the earlier candidates with an equal score.
inline ReferenceMetrics reference_metrics(const std::vector<QARecord>& split,
                                          const std::vector<std::vector<double>>& scores) {
    ReferenceMetrics out;
    for (std::size_t q = 0; q < split.size(); ++q) {
        const auto& cands = split[q].candidates;
        const auto& s = scores[q];
        std::vector<std::size_t> pos_ranks;
        for (std::size_t i = 0; i < cands.size(); ++i) {
            if (cands[i].label != 1) continue;
            std::size_t r = 1;
            for (std::size_t j = 0; j < cands.size(); ++j) {
                if (s[j] > s[i] || (s[j] == s[i] && j < i)) ++r;
            }
            pos_ranks.push_back(r);
        }
        if (pos_ranks.empty()) continue;
        double ap = 0.0;
        std::size_t best = pos_ranks.front();
        for (std::size_t a : pos_ranks) {
            std::size_t above = 1;
            for (std::size_t b : pos_ranks) above += b < a;
            ap += static_cast<double>(above) / static_cast<double>(a);
            best = std::min(best, a);
        }
        out.map += ap / static_cast<double>(pos_ranks.size());
        out.mrr += 1.0 / static_cast<double>(best);
        ++out.evaluated;
    }
    out.map /= static_cast<double>(out.evaluated);
    out.mrr /= static_cast<double>(out.evaluated);
    return out;
}

/// Seeded toy split with random labels (some questions without a positive) and
/// scores drawn from a coarse grid so ties occur.
inline std::pair<std::vector<QARecord>, std::vector<std::vector<double>>> random_eval_split(std::uint64_t seed,
                                                                                          std::size_t questions) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> ncand(1, 8), bit(0, 3), grid(0, 5);
    std::vector<QARecord> split;
    std::vector<std::vector<double>> scores;
    for (std::size_t q = 0; q < questions; ++q) {
        QARecord r;
        r.id = "q" + std::to_string(q);
        std::vector<double> s;
        const int n = ncand(rng);
        for (int i = 0; i < n; ++i) {
            r.candidates.push_back(Candidate{{kUnk}, bit(rng) == 0 ? 1 : 0});
            s.push_back(grid(rng) / 5.0);
        }
        split.push_back(std::move(r));
        scores.push_back(std::move(s));
    }
    return {split, scores};
}

/// Corpus over words x, y, z where only the gram "x x" occurs once per question.
inline const char* kBellCorpus =
    "question_id\tquestion\tanswer\tlabel\n"
    "a\ty x x z\tz y\t1\n"
    "a\ty x x z\ty z y\t0\n"
    "b\tz y y\tx y\t1\n"
    "b\tz y y\ty y\t0\n"
    "c\tz z y x\tx\t1\n"
    "c\tz z y x\tz x\t0\n";

/// EE model with D = 2 in which "x" embeds as |0> and every other token as |1>.
/// With `bell`, the EE map sends |00> to (|00> + |11>) / sqrt 2 and fixes the
/// other basis states; otherwise it is the identity.
inline ModelParams basis_word_params(const Vocabulary& vocab, bool bell) {
    ModelConfig c;
    c.variant = Variant::EE;
    c.gram_sizes = {2};
    c.dim = 2;
    c.measurements = 4;
    c.vocab_size = static_cast<Index>(vocab.size());
    ModelParams p = init_params(c, 0);
    p.embedding.phases.setZero();
    for (Index r = 0; r < c.vocab_size; ++r) p.embedding.amplitudes.row(r) << 0.0, 1.0;
    p.embedding.amplitudes.row(vocab.id("x")) << 1.0, 0.0;
    CMatd w = CMatd::Identity(4, 4);
    if (bell) {
        w(0, 0) = w(3, 0) = 1.0 / std::sqrt(2.0);
    }
    p.pipelines[0].ee.weights = {w};
    return p;
}

}  // namespace qlm::test
