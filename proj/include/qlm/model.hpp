#pragma once

// The QLM-EE network as plain (non-differentiable) functions over quantum
// states: word embedding, N-gram composition, entanglement embedding,
// measurement, max-pooling and cosine matching. The differentiable twin used
// for training lives in graph.hpp and must agree with these to rounding.

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qlm/complex_core.hpp"
#include "qlm/data.hpp"
#include "qlm/quantum.hpp"

namespace qlm {

/// EE: entanglement embedding. SE: measure the separable product state.
/// ME: measure the uniform mixture of the sentence's word states.
/// EERealValued: EE with every parameter confined to the reals.
enum class Variant { EE, SE, ME, EERealValued };

Variant parse_variant(std::string_view name);
std::string_view variant_name(Variant v);

struct ModelConfig {
    Variant variant = Variant::EE;
    std::vector<int> gram_sizes{2};
    Index dim = 8;                  // word embedding dimension D
    Index measurements = 500;       // M per gram size
    int ee_depth = 1;               // number of linear+normalize layers
    std::vector<Index> ee_hidden;   // ee_depth - 1 intermediate widths; default D^n
    Index vocab_size = 0;

    /// Throws ConfigError on D < 2, M < 1, empty or out-of-range gram sizes, or
    /// a hidden width list of the wrong length.
    void validate() const;
    bool complex_valued() const { return variant != Variant::EERealValued; }
    bool uses_entanglement() const { return variant == Variant::EE || variant == Variant::EERealValued; }
};

/// D^n.
Index gram_dim(Index word_dim, int n);

/// (input, output) width of every EE layer for gram size n. Hidden widths
/// default to D^n; the last layer always returns to D^n.
std::vector<std::pair<Index, Index>> ee_layer_shapes(const ModelConfig& c, int n);

/// Key/value view of the config, in a fixed order.
std::vector<std::pair<std::string, std::string>> describe(const ModelConfig& c);

/// Sets one model key; returns false for keys that are not model settings.
bool apply_setting(ModelConfig& c, const std::string& key, const std::string& value);

/// Amplitude and phase rows per vocabulary entry.
struct EmbeddingTable {
    Eigen::MatrixXd amplitudes;  // vocab x D
    Eigen::MatrixXd phases;      // vocab x D, radians

    Index vocab_size() const { return amplitudes.rows(); }
    Index dim() const { return amplitudes.cols(); }
};

/// Stack of linear maps, each followed by L2 normalization.
struct EntanglementLayer {
    int n = 1;
    Index word_dim = 0;
    std::vector<CMatd> weights;
};

/// Measurement vectors stored as rows.
struct MeasurementBank {
    CMatd vectors;  // M x dim

    Index count() const { return vectors.rows(); }
    Index dim() const { return vectors.cols(); }
    PureState vector(Index i) const;
};

/// One parallel N-gram branch. For the ME variant `n` is nominal: the bank
/// has dimension D and measures the sentence's mixed state.
struct GramPipeline {
    int n = 1;
    EntanglementLayer ee;  // empty weights for SE and ME
    MeasurementBank bank;
};

struct ModelParams {
    ModelConfig config;
    EmbeddingTable embedding;
    std::vector<GramPipeline> pipelines;

    const GramPipeline& pipeline(int n) const;
};

/// L x M matrix of measurement probabilities.
using FeatureMatrix = Eigen::MatrixXd;

inline constexpr double kHingeMargin = 0.1;

/// Word state r_j e^{i phi_j} with the amplitude row L2-normalized. Token ids
/// outside the table use the UNK row.
PureState embed_word(const EmbeddingTable& table, TokenId token);

/// Contiguous windows of `n` tokens with stride 1. Sentences shorter than n are
/// right-padded with kPad to a single window; an empty sentence yields one
/// all-pad window.
std::vector<Sentence> extract_ngrams(const Sentence& sentence, int n);

/// Applies each weight matrix followed by normalization. Throws
/// DegenerateStateError when an intermediate collapses below the norm floor.
PureState entangle(const EntanglementLayer& layer, const PureState& sep);

/// Variant-dependent representation of one n-gram before measurement.
PureState gram_state(const ModelParams& params, const GramPipeline& pipe, const Sentence& gram);

/// Feature matrix of `sentence` through the branch for gram size `n`.
FeatureMatrix sentence_features(const ModelParams& params, const Sentence& sentence, int n);

/// Column-wise max: one value per measurement vector.
RVecd pool(const FeatureMatrix& fm);

/// Pooled features of every branch, concatenated in gram_sizes order.
RVecd sentence_vector(const ModelParams& params, const Sentence& sentence);

/// Cosine similarity; throws ZeroFeatureError for a zero-norm input.
double match_score(const RVecd& q, const RVecd& a);

/// max(0, margin - c_pos + c_neg).
double hinge_loss(double c_pos, double c_neg, double margin = kHingeMargin);

/// Trainable real parameter count; complex entries count twice.
std::int64_t parameter_count(const ModelConfig& config);

/// Analytic multiply-add count of one forward pass of one QA pair.
std::int64_t forward_flops(const ModelConfig& config, Index question_len, Index answer_len);

}  // namespace qlm
