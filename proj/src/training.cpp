#include "qlm/training.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/QR>
#include <json.hpp>

#include "qlm/graph.hpp"

namespace qlm {

namespace {

std::uint64_t epoch_seed(std::uint64_t seed, int epoch) {
    // splitmix64 finalizer over (seed, epoch)
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(epoch + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

CMatd gaussian(Index rows, Index cols, bool complex, std::mt19937_64& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    CMatd m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            const double re = n01(rng);
            const double im = complex ? n01(rng) : 0.0;
            m(i, j) = {re, im};
        }
    }
    return m;
}

CMatd orthonormal_bank(Index count, Index dim, bool complex, std::mt19937_64& rng) {
    CMatd bank(count, dim);
    Index filled = 0;
    while (filled < count) {
        const CMatd g = gaussian(dim, dim, complex, rng);
        const CMatd q = g.householderQr().householderQ() * CMatd::Identity(dim, dim);
        const Index take = std::min(dim, count - filled);
        bank.middleRows(filled, take) = q.leftCols(take).transpose();
        filled += take;
    }
    if (!complex) bank = bank.real().cast<std::complex<double>>();
    return bank;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": '" + value + "' is not a number");
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": '" + value + "' is not an integer");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError(key + ": '" + value + "' is not a boolean");
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <typename G, typename F>
void for_each_tensor(G& g, F&& f) {
    for (auto& layers : g.ee) {
        for (auto& w : layers) f(w);
    }
    for (auto& b : g.banks) f(b);
}

// p -= lr * step(g) per real coordinate, where step is the identity for SGD and
// g / (sqrt(acc) + eps) for Adagrad after acc += g^2.
struct Updater {
    const TrainConfig& config;

    double step(double g, double& acc) const {
        if (config.optimizer == Optimizer::Sgd) return config.learning_rate * g;
        acc += g * g;
        return config.learning_rate * g / (std::sqrt(acc) + config.adagrad_epsilon);
    }

    void real(Eigen::MatrixXd& p, const Eigen::MatrixXd& g, Eigen::MatrixXd* acc) const {
        for (Index i = 0; i < p.rows(); ++i) {
            for (Index j = 0; j < p.cols(); ++j) {
                double dummy = 0.0;
                p(i, j) -= step(g(i, j), acc ? (*acc)(i, j) : dummy);
            }
        }
    }

    void complex(CMatd& p, const CMatd& g, CMatd* acc) const {
        for (Index i = 0; i < p.rows(); ++i) {
            for (Index j = 0; j < p.cols(); ++j) {
                double are = acc ? (*acc)(i, j).real() : 0.0;
                double aim = acc ? (*acc)(i, j).imag() : 0.0;
                const double dre = step(g(i, j).real(), are);
                const double dim = step(g(i, j).imag(), aim);
                p(i, j) = {p(i, j).real() - dre, p(i, j).imag() - dim};
                if (acc) (*acc)(i, j) = {are, aim};
            }
        }
    }
};

bool params_finite(const ModelParams& p) {
    if (!p.embedding.amplitudes.allFinite() || !p.embedding.phases.allFinite()) return false;
    for (const auto& pipe : p.pipelines) {
        for (const auto& w : pipe.ee.weights) {
            if (!all_finite(w)) return false;
        }
        if (!all_finite(pipe.bank.vectors)) return false;
    }
    return true;
}

}  // namespace

Optimizer parse_optimizer(std::string_view name) {
    if (name == "sgd") return Optimizer::Sgd;
    if (name == "adagrad") return Optimizer::Adagrad;
    throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

std::string_view optimizer_name(Optimizer o) { return o == Optimizer::Sgd ? "sgd" : "adagrad"; }

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
    if (patience < 0) throw ConfigError("patience must be non-negative");
    if (!(adagrad_epsilon > 0.0)) throw ConfigError("adagrad_epsilon must be positive");
}

std::vector<std::pair<std::string, std::string>> describe(const TrainConfig& c) {
    return {
        {"learning_rate", format_double(c.learning_rate)},
        {"batch_size", std::to_string(c.batch_size)},
        {"max_epochs", std::to_string(c.max_epochs)},
        {"patience", std::to_string(c.patience)},
        {"seed", std::to_string(c.seed)},
        {"optimizer", std::string(optimizer_name(c.optimizer))},
        {"adagrad_epsilon", format_double(c.adagrad_epsilon)},
        {"track_train_map", c.track_train_map ? "true" : "false"},
        {"stop_at_train_map", c.stop_at_train_map ? format_double(*c.stop_at_train_map) : "none"},
    };
}

bool apply_setting(TrainConfig& c, const std::string& key, const std::string& value) {
    if (key == "learning_rate") c.learning_rate = parse_double(key, value);
    else if (key == "batch_size") c.batch_size = static_cast<int>(parse_int(key, value));
    else if (key == "max_epochs") c.max_epochs = static_cast<int>(parse_int(key, value));
    else if (key == "patience") c.patience = static_cast<int>(parse_int(key, value));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "optimizer") c.optimizer = parse_optimizer(value);
    else if (key == "adagrad_epsilon") c.adagrad_epsilon = parse_double(key, value);
    else if (key == "track_train_map") c.track_train_map = parse_bool(key, value);
    else if (key == "stop_at_train_map") {
        if (value == "none" || value.empty()) c.stop_at_train_map.reset();
        else c.stop_at_train_map = parse_double(key, value);
    } else return false;
    return true;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    if (config.vocab_size < 2) throw ConfigError("vocab_size must cover the PAD and UNK rows");
    const bool cplx = config.complex_valued();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);

    ModelParams p;
    p.config = config;
    p.embedding.amplitudes.resize(config.vocab_size, config.dim);
    p.embedding.phases = Eigen::MatrixXd::Zero(config.vocab_size, config.dim);
    for (Index i = 0; i < config.vocab_size; ++i) {
        for (Index j = 0; j < config.dim; ++j) {
            p.embedding.amplitudes(i, j) = n01(rng);
            if (cplx) p.embedding.phases(i, j) = n01(rng);
        }
    }

    if (config.variant == Variant::ME) {
        GramPipeline pipe;
        pipe.n = config.gram_sizes.front();
        pipe.ee.n = pipe.n;
        pipe.ee.word_dim = config.dim;
        pipe.bank.vectors = orthonormal_bank(config.measurements, config.dim, true, rng);
        p.pipelines.push_back(std::move(pipe));
        return p;
    }
    for (int n : config.gram_sizes) {
        GramPipeline pipe;
        pipe.n = n;
        pipe.ee.n = n;
        pipe.ee.word_dim = config.dim;
        if (config.uses_entanglement()) {
            for (auto [in, out] : ee_layer_shapes(config, n)) pipe.ee.weights.push_back(gaussian(out, in, cplx, rng));
        }
        pipe.bank.vectors = orthonormal_bank(config.measurements, gram_dim(config.dim, n), cplx, rng);
        p.pipelines.push_back(std::move(pipe));
    }
    return p;
}

ParamGrads ParamGrads::zeros_like(const ModelParams& params) {
    ParamGrads g;
    g.amplitudes = Eigen::MatrixXd::Zero(params.embedding.amplitudes.rows(), params.embedding.amplitudes.cols());
    g.phases = Eigen::MatrixXd::Zero(params.embedding.phases.rows(), params.embedding.phases.cols());
    for (const auto& pipe : params.pipelines) {
        std::vector<CMatd> layers;
        for (const auto& w : pipe.ee.weights) layers.push_back(CMatd::Zero(w.rows(), w.cols()));
        g.ee.push_back(std::move(layers));
        g.banks.push_back(CMatd::Zero(pipe.bank.vectors.rows(), pipe.bank.vectors.cols()));
    }
    return g;
}

bool ParamGrads::all_zero() const {
    bool zero = amplitudes.isZero(0.0) && phases.isZero(0.0);
    for_each_tensor(*this, [&](const CMatd& m) { zero = zero && m.isZero(0.0); });
    return zero;
}

bool ParamGrads::all_finite() const {
    bool ok = amplitudes.allFinite() && phases.allFinite();
    for_each_tensor(*this, [&](const CMatd& m) { ok = ok && qlm::all_finite(m); });
    return ok;
}

LossAndGrads batch_gradient(const ModelParams& params, std::span<const Triplet> batch) {
    if (batch.empty()) throw std::invalid_argument("batch_gradient: empty batch");
    LossAndGrads out{0.0, ParamGrads::zeros_like(params)};
    const bool cplx = params.config.complex_valued();
    std::vector<std::size_t> bad;

    for (std::size_t b = 0; b < batch.size(); ++b) {
        const Triplet& tr = batch[b];
        ad::Tape tape;
        graph::ParamLeaves leaves = graph::ParamLeaves::bind(tape, params);
        double value = 0.0;
        ad::Var loss;
        try {
            loss = graph::triplet_loss(tape, leaves, params, tr.question, tr.positive, tr.negative);
            value = tape.value(loss)(0, 0).real();
        } catch (const NumericalError&) {
            value = std::numeric_limits<double>::quiet_NaN();
        }
        if (!std::isfinite(value)) {
            bad.push_back(b);
            continue;
        }
        out.loss += value;
        if (value == 0.0) continue;

        tape.backward(loss);
        for (const auto& [tok, w] : leaves.words) {
            out.grads.amplitudes.row(tok) += tape.grad(w.amplitudes).col(0).real().transpose();
            if (cplx) out.grads.phases.row(tok) += tape.grad(w.phases).col(0).real().transpose();
        }
        for (std::size_t k = 0; k < leaves.ee.size(); ++k) {
            for (std::size_t l = 0; l < leaves.ee[k].size(); ++l) out.grads.ee[k][l] += tape.grad(leaves.ee[k][l]);
            out.grads.banks[k] += tape.grad(leaves.banks[k]);
        }
    }
    if (!bad.empty()) {
        std::string ids;
        for (std::size_t b : bad) {
            if (!ids.empty()) ids += ", ";
            ids += "#" + std::to_string(b) + " (question " + std::to_string(batch[b].question_index) + ")";
        }
        throw NumericalError("non-finite loss for batch triplets " + ids);
    }

    const double scale = 1.0 / static_cast<double>(batch.size());
    out.loss *= scale;
    out.grads.amplitudes *= scale;
    out.grads.phases *= scale;
    for_each_tensor(out.grads, [&](CMatd& m) { m *= scale; });
    if (!out.grads.all_finite()) throw NumericalError("non-finite gradient in batch");
    return out;
}

double train_step(TrainState& state, const TrainConfig& config, std::span<const Triplet> batch) {
    const LossAndGrads lg = batch_gradient(state.params, batch);
    ModelParams& p = state.params;
    const bool cplx = p.config.complex_valued();
    if (config.optimizer == Optimizer::Adagrad && !state.adagrad) state.adagrad = ParamGrads::zeros_like(p);
    ParamGrads* acc = state.adagrad && config.optimizer == Optimizer::Adagrad ? &*state.adagrad : nullptr;
    const Updater up{config};

    up.real(p.embedding.amplitudes, lg.grads.amplitudes, acc ? &acc->amplitudes : nullptr);
    if (cplx) up.real(p.embedding.phases, lg.grads.phases, acc ? &acc->phases : nullptr);
    for (std::size_t k = 0; k < p.pipelines.size(); ++k) {
        auto& pipe = p.pipelines[k];
        for (std::size_t l = 0; l < pipe.ee.weights.size(); ++l) {
            up.complex(pipe.ee.weights[l], lg.grads.ee[k][l], acc ? &acc->ee[k][l] : nullptr);
        }
        up.complex(pipe.bank.vectors, lg.grads.banks[k], acc ? &acc->banks[k] : nullptr);
        for (Index i = 0; i < pipe.bank.count(); ++i) {
            if (lg.grads.banks[k].row(i).isZero(0.0)) continue;
            const double n = pipe.bank.vectors.row(i).norm();
            if (!(n > kNormFloor)) throw DegenerateStateError("measurement vector " + std::to_string(i) + " collapsed");
            pipe.bank.vectors.row(i) /= n;
        }
    }
    if (!params_finite(p)) throw NumericalError("parameters became non-finite at step " + std::to_string(state.steps));
    ++state.steps;
    return lg.loss;
}

std::string to_json_line(const EpochRecord& r) {
    nlohmann::json j;
    j["epoch"] = r.epoch;
    j["loss"] = r.loss;
    j["dev_map"] = r.dev_map ? nlohmann::json(*r.dev_map) : nlohmann::json(nullptr);
    j["dev_mrr"] = r.dev_mrr ? nlohmann::json(*r.dev_mrr) : nlohmann::json(nullptr);
    j["train_map"] = r.train_map ? nlohmann::json(*r.train_map) : nlohmann::json(nullptr);
    j["selection_map"] = r.selection_map;
    j["improved"] = r.improved;
    j["wall_time"] = r.wall_time;
    return j.dump();
}

FitResult fit(const QACorpus& corpus, ModelConfig model, const TrainConfig& config, const FitHooks& hooks,
              std::optional<TrainState> resume) {
    config.validate();
    const auto vocab = static_cast<Index>(corpus.vocab.size());
    if (model.vocab_size == 0) model.vocab_size = vocab;
    if (model.vocab_size != vocab) {
        throw ConfigError("model vocab_size " + std::to_string(model.vocab_size) + " differs from corpus vocabulary " +
                          std::to_string(vocab));
    }

    FitResult res;
    if (resume) {
        res.state = std::move(*resume);
    } else {
        res.state.params = init_params(model, config.seed);
        res.state.best_params = res.state.params;
    }
    TrainState& st = res.state;
    const std::size_t per_epoch = count_positive_pairs(corpus);
    const bool has_dev = !corpus.dev.empty();
    const auto start = std::chrono::steady_clock::now();

    if (st.epochs_since_best > config.patience) {
        res.stop_reason = "early stop";
        return res;
    }
    res.stop_reason = "max epochs";
    while (st.epoch < config.max_epochs) {
        const auto triplets = sample_triplets(corpus, epoch_seed(config.seed, st.epoch), per_epoch);
        double loss_sum = 0.0;
        const auto bs = static_cast<std::size_t>(config.batch_size);
        for (std::size_t off = 0; off < triplets.size(); off += bs) {
            const std::size_t len = std::min(bs, triplets.size() - off);
            loss_sum += train_step(st, config, std::span<const Triplet>(triplets).subspan(off, len)) *
                        static_cast<double>(len);
        }
        ++st.epoch;

        EpochRecord rec;
        rec.epoch = st.epoch;
        rec.loss = loss_sum / static_cast<double>(triplets.size());
        if (has_dev) {
            const EvalResult dev = evaluate(st.params, corpus.dev);
            rec.dev_map = dev.map;
            rec.dev_mrr = dev.mrr;
        }
        if (config.track_train_map || !has_dev || config.stop_at_train_map) {
            rec.train_map = evaluate(st.params, corpus.train).map;
        }
        rec.selection_map = has_dev ? *rec.dev_map : *rec.train_map;
        rec.improved = rec.selection_map > st.best_score;
        if (rec.improved) {
            st.best_score = rec.selection_map;
            st.best_params = st.params;
            st.epochs_since_best = 0;
        } else {
            ++st.epochs_since_best;
        }
        rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        res.log.push_back(rec);
        if (hooks.on_epoch) hooks.on_epoch(st, rec);

        if (config.stop_at_train_map && *rec.train_map >= *config.stop_at_train_map) {
            res.stop_reason = "train MAP target reached";
            break;
        }
        if (st.epochs_since_best > config.patience) {
            res.stop_reason = "early stop";
            break;
        }
    }
    return res;
}

std::map<std::string, CMatd> optimizer_extras(const TrainState& state) {
    std::map<std::string, CMatd> out;
    if (!state.adagrad) return out;
    const ParamGrads& a = *state.adagrad;
    out["adagrad.amplitudes"] = a.amplitudes.cast<std::complex<double>>();
    out["adagrad.phases"] = a.phases.cast<std::complex<double>>();
    for (std::size_t k = 0; k < a.ee.size(); ++k) {
        for (std::size_t l = 0; l < a.ee[k].size(); ++l) {
            out["adagrad.ee." + std::to_string(k) + "." + std::to_string(l)] = a.ee[k][l];
        }
        out["adagrad.bank." + std::to_string(k)] = a.banks[k];
    }
    return out;
}

void restore_optimizer(TrainState& state, const std::map<std::string, CMatd>& extras) {
    if (!extras.count("adagrad.amplitudes")) {
        state.adagrad.reset();
        return;
    }
    ParamGrads a = ParamGrads::zeros_like(state.params);
    const auto get = [&](const std::string& name, Index rows, Index cols) -> const CMatd& {
        auto it = extras.find(name);
        if (it == extras.end()) throw DataError("checkpoint lacks optimizer tensor '" + name + "'");
        if (it->second.rows() != rows || it->second.cols() != cols) {
            throw DataError("optimizer tensor '" + name + "' has the wrong shape");
        }
        return it->second;
    };
    a.amplitudes = get("adagrad.amplitudes", a.amplitudes.rows(), a.amplitudes.cols()).real();
    a.phases = get("adagrad.phases", a.phases.rows(), a.phases.cols()).real();
    for (std::size_t k = 0; k < a.ee.size(); ++k) {
        for (std::size_t l = 0; l < a.ee[k].size(); ++l) {
            a.ee[k][l] = get("adagrad.ee." + std::to_string(k) + "." + std::to_string(l), a.ee[k][l].rows(),
                             a.ee[k][l].cols());
        }
        a.banks[k] = get("adagrad.bank." + std::to_string(k), a.banks[k].rows(), a.banks[k].cols());
    }
    state.adagrad = std::move(a);
}

}  // namespace qlm
