#pragma once

// Parameter initialization, triplet gradient steps and the epoch loop with
// early stopping on dev MAP.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qlm/data.hpp"
#include "qlm/eval.hpp"
#include "qlm/model.hpp"

namespace qlm {

enum class Optimizer { Sgd, Adagrad };

Optimizer parse_optimizer(std::string_view name);
std::string_view optimizer_name(Optimizer o);

struct TrainConfig {
    double learning_rate = 0.1;
    int batch_size = 32;
    int max_epochs = 50;
    int patience = 10;              // non-improving epochs tolerated before stopping
    std::uint64_t seed = 0;
    Optimizer optimizer = Optimizer::Sgd;
    double adagrad_epsilon = 1e-8;
    bool track_train_map = false;   // evaluate the train split after every epoch
    std::optional<double> stop_at_train_map;  // stop once train MAP reaches this

    /// Throws ConfigError on non-positive rate, batch or epoch count, or negative patience.
    void validate() const;
};

std::vector<std::pair<std::string, std::string>> describe(const TrainConfig& c);
bool apply_setting(TrainConfig& c, const std::string& key, const std::string& value);

/// Embedding rows and EE weights drawn from N(0, 1) per real coordinate. Bank
/// rows are the columns of ceil(M / K) independent random unitaries (QR of a
/// Gaussian matrix), truncated to M, where K is the bank dimension. Real-valued
/// variants draw real values and keep phases at zero.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

/// Gradient (or optimizer accumulator) shaped like ModelParams.
struct ParamGrads {
    Eigen::MatrixXd amplitudes;
    Eigen::MatrixXd phases;
    std::vector<std::vector<CMatd>> ee;
    std::vector<CMatd> banks;

    static ParamGrads zeros_like(const ModelParams& params);
    bool all_zero() const;
    bool all_finite() const;
};

struct LossAndGrads {
    double loss = 0.0;  // mean over the batch
    ParamGrads grads;   // gradient of the mean loss
};

/// Mean hinge loss over `batch` and its gradient. Throws NumericalError naming
/// the offending triplets when a loss is not finite.
LossAndGrads batch_gradient(const ModelParams& params, std::span<const Triplet> batch);

struct TrainState {
    ModelParams params;
    ModelParams best_params;
    int epoch = 0;                    // completed epochs
    double best_score = -1.0;         // best selection MAP so far
    int epochs_since_best = 0;
    std::uint64_t steps = 0;
    std::optional<ParamGrads> adagrad;  // squared-gradient sums, per real coordinate
};

/// One optimizer update from `batch`; returns the batch loss. Measurement rows
/// that moved are re-normalized to unit norm; rows with zero gradient and all
/// other parameters with zero gradient are left bit-identical under SGD.
double train_step(TrainState& state, const TrainConfig& config, std::span<const Triplet> batch);

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;  // mean batch loss
    std::optional<double> dev_map;
    std::optional<double> dev_mrr;
    std::optional<double> train_map;
    double selection_map = 0.0;  // dev MAP, or train MAP without a dev split
    bool improved = false;
    double wall_time = 0.0;      // seconds since fit() started
};

/// One NDJSON line (no trailing newline).
std::string to_json_line(const EpochRecord& r);

struct FitHooks {
    std::function<void(const TrainState&, const EpochRecord&)> on_epoch;
};

struct FitResult {
    TrainState state;
    std::vector<EpochRecord> log;
    std::string stop_reason;
};

/// Trains until max_epochs, early stopping, or the train MAP target. Each epoch
/// draws count_positive_pairs triplets with a seed derived from (seed, epoch).
/// With `resume` the loop continues from the given state.
FitResult fit(const QACorpus& corpus, ModelConfig model, const TrainConfig& config,
              const FitHooks& hooks = {}, std::optional<TrainState> resume = std::nullopt);

/// Adagrad accumulators as named tensors for checkpoint extras, and back.
std::map<std::string, CMatd> optimizer_extras(const TrainState& state);
void restore_optimizer(TrainState& state, const std::map<std::string, CMatd>& extras);

}  // namespace qlm
