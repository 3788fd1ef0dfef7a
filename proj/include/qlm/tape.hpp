#pragma once

// Reverse-mode automatic differentiation over dense complex blocks.
//
// Gradient convention: for a real scalar loss L and a complex entry
// z = x + iy, the stored gradient is dL/dx + i dL/dy. Real-valued nodes keep
// a zero imaginary part in both value and gradient. With this convention a
// holomorphic linear map y = A z pulls back as g_z = A^H g_y.
//
// Node ids are assigned in creation order, which is a topological order, so
// backward() replays adjoints by walking ids from last to first. A tape is
// single-threaded; use one tape per worker.

#include <functional>
#include <span>
#include <vector>

#include "qlm/complex_core.hpp"

namespace qlm::ad {

using Block = CMatd;

struct Var {
    std::size_t id = 0;
};

class Tape {
  public:
    /// Records an input block. `real` marks values that live on the reals; their
    /// gradients are projected to the real axis.
    Var leaf(Block value, bool real = false);

    const Block& value(Var v) const { return nodes_.at(v.id).value; }
    bool is_real(Var v) const { return nodes_.at(v.id).real; }

    /// Gradient accumulated on `v` by the last backward(); zero block if `v` did
    /// not influence the loss.
    Block grad(Var v) const;

    /// Seeds d loss / d loss = seed and propagates adjoints to every node.
    /// Rejects anything but a 1x1 real node.
    void backward(Var loss, double seed = 1.0);

    std::size_t size() const { return nodes_.size(); }

    // Used by op implementations.
    using Backward = std::function<void(Tape&, const Block& out_grad)>;
    Var push(Block value, bool real, Backward back);
    void accumulate(Var v, const Block& g);

  private:
    struct Node {
        Block value;
        Block grad;
        bool real = false;
        Backward back;
    };
    std::vector<Node> nodes_;
};

// Differentiable primitives. Vectors are n x 1 blocks.

/// y = W v.
Var matvec(Tape& t, Var w, Var v);

/// y = a (x) b.
Var kron(Tape& t, Var a, Var b);

/// y = v / ||v||; throws DegenerateStateError below the norm floor.
Var normalize(Tape& t, Var v);

/// y_j = r_j e^{i phi_j} for real r, phi.
Var polar(Tape& t, Var r, Var phi);

/// p_i = |<m_i|psi>|^2 where m_i is row i of `bank`. Real output, M x 1.
Var measure(Tape& t, Var bank, Var psi);

/// rho = sum_k w_k |s_k><s_k|.
Var mixture(Tape& t, std::span<const Var> states, std::span<const double> weights);

/// p_i = Re <m_i| rho |m_i>. Real output, M x 1.
Var measure_density(Tape& t, Var bank, Var rho);

/// Elementwise max over equally-shaped real vectors; ties go to the first.
Var max_pool(Tape& t, std::span<const Var> rows);

/// Vertical concatenation of vectors.
Var concat(Tape& t, std::span<const Var> parts);

/// Cosine similarity of two real vectors; throws ZeroFeatureError on zero norm.
Var cosine(Tape& t, Var a, Var b);

/// max(0, margin - pos + neg).
Var hinge(Tape& t, Var pos, Var neg, double margin);

}  // namespace qlm::ad
