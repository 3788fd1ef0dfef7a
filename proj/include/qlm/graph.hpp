#pragma once

// Differentiable forward pass of the model on an autodiff tape. Values agree
// with the plain functions in model.hpp to rounding.

#include <unordered_map>
#include <vector>

#include "qlm/model.hpp"
#include "qlm/tape.hpp"

namespace qlm::graph {

/// Tape leaves for the parameters touched by one forward pass. Word leaves are
/// created on first use, so a tape only records rows that influence the loss.
struct ParamLeaves {
    struct Word {
        ad::Var amplitudes;  // D x 1, real
        ad::Var phases;      // D x 1, real; unused by real-valued variants
    };
    std::unordered_map<TokenId, Word> words;
    std::vector<std::vector<ad::Var>> ee;  // per pipeline, per layer
    std::vector<ad::Var> banks;            // per pipeline

    static ParamLeaves bind(ad::Tape& t, const ModelParams& params);
};

/// Unit word state on the tape; out-of-range ids use the UNK row.
ad::Var word_state(ad::Tape& t, ParamLeaves& leaves, const ModelParams& params, TokenId token);

/// Pre-measurement state of one gram through pipeline index `k`.
ad::Var gram_state(ad::Tape& t, ParamLeaves& leaves, const ModelParams& params, std::size_t k,
                   const Sentence& gram);

/// Pooled and concatenated features of `sentence`, as a real column.
ad::Var sentence_vector(ad::Tape& t, ParamLeaves& leaves, const ModelParams& params,
                        const Sentence& sentence);

/// Hinge loss of one (question, positive, negative) triplet.
ad::Var triplet_loss(ad::Tape& t, ParamLeaves& leaves, const ModelParams& params,
                     const Sentence& question, const Sentence& positive, const Sentence& negative,
                     double margin = kHingeMargin);

}  // namespace qlm::graph
