#pragma once

#include <span>
#include <vector>

#include "qlm/complex_core.hpp"

namespace qlm {

/// Tolerance on sum |amplitude|^2 = 1 for a pure state.
inline constexpr double kUnitNormTol = 1e-9;

/// Unit-norm complex vector together with its tensor-product factorization.
class PureState {
  public:
    PureState() = default;

    /// Validates unit norm and that the factor dimensions multiply to the vector
    /// dimension. An empty factor list means a single factor of full dimension.
    explicit PureState(CVecd amplitudes, std::vector<Index> factor_dims = {});

    /// Normalizes `raw` first; throws DegenerateStateError for a zero vector.
    static PureState from_unnormalized(const CVecd& raw, std::vector<Index> factor_dims = {});

    /// Computational basis ket |k> of dimension `dim`.
    static PureState basis(Index dim, Index k);

    const CVecd& vec() const { return vec_; }
    Index dim() const { return vec_.size(); }
    const std::vector<Index>& factor_dims() const { return factor_dims_; }

  private:
    CVecd vec_;
    std::vector<Index> factor_dims_;
};

/// Hermitian, positive semidefinite, unit-trace matrix.
class DensityMatrix {
  public:
    explicit DensityMatrix(CMatd mat);
    const CMatd& mat() const { return mat_; }
    Index dim() const { return mat_.rows(); }

  private:
    CMatd mat_;
};

/// Bipartition of a state space into left (leading factors) and right parts.
struct SchmidtSplit {
    Index left_dim = 0;
    Index right_dim = 0;
};

/// Chained tensor product of unit states; factor lists are concatenated.
PureState product_state(std::span<const PureState> words);

/// |<a|b>|^2.
double fidelity(const PureState& a, const PureState& b);

/// Probability |<m|state>|^2 of collapsing `state` onto `m`.
double measure_pure(const PureState& state, const PureState& m);

/// rho = sum_k w_k |s_k><s_k|. Weights must be non-negative and sum to one.
DensityMatrix mixed_state(std::span<const PureState> words, std::span<const double> weights);

/// <m|rho|m>; rounding noise below 1e-10 is clamped to zero.
double measure_density(const DensityMatrix& rho, const PureState& m);

/// Singular values of the state reshaped to left_dim x right_dim, descending.
RVecd schmidt_coefficients(const PureState& state, SchmidtSplit split);

/// -sum l^2 ln l^2 over the Schmidt coefficients (nats), 0 ln 0 := 0.
double entanglement_entropy(const PureState& state, SchmidtSplit split);

/// Split between the first n-1 word factors and the last one: [D^(n-1), D].
SchmidtSplit last_word_split(Index word_dim, int n);

}  // namespace qlm
