#include "qlm/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qlm {

namespace {

template <typename T>
std::string join(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (k) out += ',';
        out += std::to_string(xs[k]);
    }
    return out;
}

template <typename T>
std::vector<T> split_list(const std::string& key, const std::string& text) {
    std::vector<T> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = std::min(text.find(',', start), text.size());
        const std::string item = text.substr(start, comma - start);
        if (!item.empty()) {
            try {
                out.push_back(static_cast<T>(std::stoll(item)));
            } catch (const std::exception&) {
                throw ConfigError(key + ": '" + item + "' is not an integer");
            }
        }
        start = comma + 1;
    }
    return out;
}

Index parse_index(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return static_cast<Index>(v);
    } catch (const std::exception&) {
        throw ConfigError(key + ": '" + value + "' is not an integer");
    }
}

}  // namespace

Index gram_dim(Index word_dim, int n) {
    Index r = 1;
    for (int k = 0; k < n; ++k) r *= word_dim;
    return r;
}

std::vector<std::pair<Index, Index>> ee_layer_shapes(const ModelConfig& c, int n) {
    const Index full = gram_dim(c.dim, n);
    std::vector<Index> widths{full};
    for (int k = 0; k + 1 < c.ee_depth; ++k) {
        widths.push_back(c.ee_hidden.empty() ? full : c.ee_hidden[static_cast<std::size_t>(k)]);
    }
    widths.push_back(full);
    std::vector<std::pair<Index, Index>> out;
    for (std::size_t k = 0; k + 1 < widths.size(); ++k) out.emplace_back(widths[k], widths[k + 1]);
    return out;
}

std::vector<std::pair<std::string, std::string>> describe(const ModelConfig& c) {
    return {
        {"variant", std::string(variant_name(c.variant))},
        {"gram_sizes", join(c.gram_sizes)},
        {"dim", std::to_string(c.dim)},
        {"measurements", std::to_string(c.measurements)},
        {"ee_depth", std::to_string(c.ee_depth)},
        {"ee_hidden", join(c.ee_hidden)},
        {"vocab_size", std::to_string(c.vocab_size)},
    };
}

bool apply_setting(ModelConfig& c, const std::string& key, const std::string& value) {
    if (key == "variant") c.variant = parse_variant(value);
    else if (key == "gram_sizes") c.gram_sizes = split_list<int>(key, value);
    else if (key == "dim") c.dim = parse_index(key, value);
    else if (key == "measurements") c.measurements = parse_index(key, value);
    else if (key == "ee_depth") c.ee_depth = static_cast<int>(parse_index(key, value));
    else if (key == "ee_hidden") c.ee_hidden = split_list<Index>(key, value);
    else if (key == "vocab_size") c.vocab_size = parse_index(key, value);
    else return false;
    return true;
}

Variant parse_variant(std::string_view name) {
    if (name == "EE" || name == "ee") return Variant::EE;
    if (name == "SE" || name == "se") return Variant::SE;
    if (name == "ME" || name == "me") return Variant::ME;
    if (name == "EE-Real" || name == "ee-real" || name == "EE_REAL") return Variant::EERealValued;
    throw ConfigError("unknown model variant '" + std::string(name) + "'");
}

std::string_view variant_name(Variant v) {
    switch (v) {
        case Variant::EE: return "EE";
        case Variant::SE: return "SE";
        case Variant::ME: return "ME";
        case Variant::EERealValued: return "EE-Real";
    }
    return "?";
}

void ModelConfig::validate() const {
    if (dim < 2) throw ConfigError("dim must be at least 2");
    if (measurements < 1) throw ConfigError("measurements must be at least 1");
    if (gram_sizes.empty()) throw ConfigError("gram_sizes must not be empty");
    for (int n : gram_sizes) {
        if (n < 1 || n > 3) throw ConfigError("gram sizes must lie in {1, 2, 3}");
    }
    if (ee_depth < 1) throw ConfigError("ee_depth must be at least 1");
    if (!ee_hidden.empty() && ee_hidden.size() != static_cast<std::size_t>(ee_depth - 1)) {
        throw ConfigError("ee_hidden must list ee_depth - 1 widths");
    }
    for (Index h : ee_hidden) {
        if (h < 1) throw ConfigError("ee_hidden widths must be positive");
    }
}

PureState MeasurementBank::vector(Index i) const {
    return PureState(vectors.row(i).transpose());
}

const GramPipeline& ModelParams::pipeline(int n) const {
    if (config.variant == Variant::ME) {
        if (pipelines.empty()) throw ConfigError("model has no measurement pipeline");
        return pipelines.front();
    }
    for (const auto& p : pipelines) {
        if (p.n == n) return p;
    }
    throw ConfigError("model has no pipeline for gram size " + std::to_string(n));
}

PureState embed_word(const EmbeddingTable& table, TokenId token) {
    const Index row = (token >= 0 && token < table.vocab_size()) ? token : kUnk;
    const RVecd r = l2_normalize(table.amplitudes.row(row).transpose());
    CVecd alpha(r.size());
    for (Index j = 0; j < r.size(); ++j) alpha(j) = r(j) * std::polar(1.0, table.phases(row, j));
    return PureState(std::move(alpha));
}

std::vector<Sentence> extract_ngrams(const Sentence& sentence, int n) {
    if (n < 1) throw std::invalid_argument("extract_ngrams: n must be at least 1");
    const std::size_t un = static_cast<std::size_t>(n);
    if (sentence.size() < un) {
        Sentence padded = sentence;
        padded.resize(un, kPad);
        return {padded};
    }
    std::vector<Sentence> out;
    out.reserve(sentence.size() - un + 1);
    for (std::size_t i = 0; i + un <= sentence.size(); ++i) {
        out.emplace_back(sentence.begin() + static_cast<std::ptrdiff_t>(i),
                         sentence.begin() + static_cast<std::ptrdiff_t>(i + un));
    }
    return out;
}

PureState entangle(const EntanglementLayer& layer, const PureState& sep) {
    CVecd x = sep.vec();
    for (const auto& w : layer.weights) x = l2_normalize(cmatvec(w, x));
    if (x.size() != sep.dim()) throw DimensionError("entangle: output dimension differs from input");
    return PureState(std::move(x), sep.factor_dims());
}

PureState gram_state(const ModelParams& params, const GramPipeline& pipe, const Sentence& gram) {
    std::vector<PureState> words;
    words.reserve(gram.size());
    for (TokenId t : gram) words.push_back(embed_word(params.embedding, t));
    PureState sep = product_state(words);
    if (params.config.uses_entanglement()) return entangle(pipe.ee, sep);
    return sep;
}

FeatureMatrix sentence_features(const ModelParams& params, const Sentence& sentence, int n) {
    const GramPipeline& pipe = params.pipeline(n);
    const MeasurementBank& bank = pipe.bank;

    if (params.config.variant == Variant::ME) {
        const Sentence words = sentence.empty() ? Sentence{kPad} : sentence;
        std::vector<PureState> states;
        for (TokenId t : words) states.push_back(embed_word(params.embedding, t));
        const std::vector<double> weights(states.size(), 1.0 / static_cast<double>(states.size()));
        const DensityMatrix rho = mixed_state(states, weights);
        FeatureMatrix fm(1, bank.count());
        for (Index i = 0; i < bank.count(); ++i) {
            fm(0, i) = measure_density(rho, bank.vector(i));
        }
        return fm;
    }

    const auto grams = extract_ngrams(sentence, pipe.n);
    FeatureMatrix fm(static_cast<Index>(grams.size()), bank.count());
    for (std::size_t g = 0; g < grams.size(); ++g) {
        const PureState psi = gram_state(params, pipe, grams[g]);
        const RVecd p = (bank.vectors.conjugate() * psi.vec()).cwiseAbs2();
        fm.row(static_cast<Index>(g)) = p.transpose();
    }
    return fm;
}

RVecd pool(const FeatureMatrix& fm) {
    if (fm.rows() < 1) throw DimensionError("pool: feature matrix has no rows");
    return fm.colwise().maxCoeff().transpose();
}

RVecd sentence_vector(const ModelParams& params, const Sentence& sentence) {
    std::vector<RVecd> parts;
    Index total = 0;
    for (int n : params.config.gram_sizes) {
        parts.push_back(pool(sentence_features(params, sentence, n)));
        total += parts.back().size();
        if (params.config.variant == Variant::ME) break;
    }
    RVecd out(total);
    Index off = 0;
    for (const auto& p : parts) {
        out.segment(off, p.size()) = p;
        off += p.size();
    }
    return out;
}

double match_score(const RVecd& q, const RVecd& a) {
    if (q.size() != a.size()) throw DimensionError("match_score: feature lengths differ");
    const double nq = q.norm();
    const double na = a.norm();
    if (nq == 0.0 || na == 0.0) throw ZeroFeatureError("match_score: zero-norm feature vector");
    return q.dot(a) / (nq * na);
}

double hinge_loss(double c_pos, double c_neg, double margin) {
    return std::max(0.0, margin - c_pos + c_neg);
}

std::int64_t parameter_count(const ModelConfig& config) {
    config.validate();
    const std::int64_t per_entry = config.complex_valued() ? 2 : 1;
    const std::int64_t d = config.dim;
    // Real-valued models keep amplitudes only; phases are pinned at zero.
    std::int64_t total = config.vocab_size * d * per_entry;
    if (config.variant == Variant::ME) {
        return total + config.measurements * d * 2;
    }
    for (int n : config.gram_sizes) {
        const std::int64_t full = gram_dim(config.dim, n);
        if (config.uses_entanglement()) {
            for (auto [in, out] : ee_layer_shapes(config, n)) total += in * out * per_entry;
        }
        total += config.measurements * full * per_entry;
    }
    return total;
}

std::int64_t forward_flops(const ModelConfig& config, Index question_len, Index answer_len) {
    config.validate();
    const std::int64_t d = config.dim;
    const std::int64_t m = config.measurements;

    const auto sentence = [&](std::int64_t len) {
        const std::int64_t words = std::max<std::int64_t>(len, 1);
        if (config.variant == Variant::ME) {
            // embed + mixture + <m|rho|m> per measurement
            return words * d + words * d * d + m * (d * d + d);
        }
        std::int64_t total = 0;
        for (int n : config.gram_sizes) {
            const std::int64_t grams = std::max<std::int64_t>(len - n + 1, 1);
            std::int64_t per_gram = 0;
            for (int k = 2; k <= n; ++k) per_gram += gram_dim(config.dim, k);
            if (config.uses_entanglement()) {
                for (auto [in, out] : ee_layer_shapes(config, n)) per_gram += in * out + out;
            }
            per_gram += m * gram_dim(config.dim, n);
            total += words * d + grams * per_gram + grams * m;
        }
        return total;
    };

    const std::int64_t features =
        config.variant == Variant::ME ? m : m * static_cast<std::int64_t>(config.gram_sizes.size());
    return sentence(question_len) + sentence(answer_len) + 3 * features;
}

}  // namespace qlm
