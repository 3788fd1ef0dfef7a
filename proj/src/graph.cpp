#include "qlm/graph.hpp"

namespace qlm::graph {

using ad::Block;
using ad::Tape;
using ad::Var;

namespace {

Block column(const Eigen::MatrixXd& m, Index row) {
    return m.row(row).transpose().cast<std::complex<double>>();
}

std::size_t pipeline_index(const ModelParams& params, int n) {
    if (params.config.variant == Variant::ME) return 0;
    for (std::size_t k = 0; k < params.pipelines.size(); ++k) {
        if (params.pipelines[k].n == n) return k;
    }
    throw ConfigError("model has no pipeline for gram size " + std::to_string(n));
}

}  // namespace

ParamLeaves ParamLeaves::bind(Tape& t, const ModelParams& params) {
    const bool real = !params.config.complex_valued();
    ParamLeaves out;
    for (const auto& pipe : params.pipelines) {
        std::vector<Var> layers;
        for (const auto& w : pipe.ee.weights) layers.push_back(t.leaf(w, real));
        out.ee.push_back(std::move(layers));
        out.banks.push_back(t.leaf(pipe.bank.vectors, real));
    }
    return out;
}

Var word_state(Tape& t, ParamLeaves& leaves, const ModelParams& params, TokenId token) {
    const Index row = (token >= 0 && token < params.embedding.vocab_size()) ? token : kUnk;
    const auto key = static_cast<TokenId>(row);
    auto it = leaves.words.find(key);
    if (it == leaves.words.end()) {
        ParamLeaves::Word w{t.leaf(column(params.embedding.amplitudes, row), true),
                            t.leaf(column(params.embedding.phases, row), true)};
        it = leaves.words.emplace(key, w).first;
    }
    const Var r = ad::normalize(t, it->second.amplitudes);
    if (!params.config.complex_valued()) return r;
    return ad::polar(t, r, it->second.phases);
}

Var gram_state(Tape& t, ParamLeaves& leaves, const ModelParams& params, std::size_t k,
               const Sentence& gram) {
    Var state = word_state(t, leaves, params, gram.at(0));
    for (std::size_t j = 1; j < gram.size(); ++j) {
        state = ad::kron(t, state, word_state(t, leaves, params, gram[j]));
    }
    if (params.config.uses_entanglement()) {
        for (Var w : leaves.ee.at(k)) state = ad::normalize(t, ad::matvec(t, w, state));
    }
    return state;
}

Var sentence_vector(Tape& t, ParamLeaves& leaves, const ModelParams& params, const Sentence& sentence) {
    if (params.config.variant == Variant::ME) {
        const Sentence words = sentence.empty() ? Sentence{kPad} : sentence;
        std::vector<Var> states;
        for (TokenId tok : words) states.push_back(word_state(t, leaves, params, tok));
        const std::vector<double> weights(states.size(), 1.0 / static_cast<double>(states.size()));
        const Var rho = ad::mixture(t, states, weights);
        return ad::measure_density(t, leaves.banks.at(0), rho);
    }

    std::vector<Var> pooled;
    for (int n : params.config.gram_sizes) {
        const std::size_t k = pipeline_index(params, n);
        std::vector<Var> rows;
        for (const auto& gram : extract_ngrams(sentence, n)) {
            rows.push_back(ad::measure(t, leaves.banks.at(k), gram_state(t, leaves, params, k, gram)));
        }
        pooled.push_back(ad::max_pool(t, rows));
    }
    if (pooled.size() == 1) return pooled.front();
    return ad::concat(t, pooled);
}

Var triplet_loss(Tape& t, ParamLeaves& leaves, const ModelParams& params, const Sentence& question,
                 const Sentence& positive, const Sentence& negative, double margin) {
    const Var q = sentence_vector(t, leaves, params, question);
    const Var pos = ad::cosine(t, q, sentence_vector(t, leaves, params, positive));
    const Var neg = ad::cosine(t, q, sentence_vector(t, leaves, params, negative));
    return ad::hinge(t, pos, neg, margin);
}

}  // namespace qlm::graph
