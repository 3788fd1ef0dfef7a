#include "qlm/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qlm/svd.hpp"

namespace qlm {

namespace {

Index product_of(const std::vector<Index>& dims) {
    return std::accumulate(dims.begin(), dims.end(), Index{1}, std::multiplies<>{});
}

void require_same_dim(const PureState& a, const PureState& b, const char* what) {
    if (a.dim() != b.dim()) {
        throw DimensionError(std::string(what) + ": state dimensions " + std::to_string(a.dim()) +
                             " and " + std::to_string(b.dim()) + " differ");
    }
}

}  // namespace

PureState::PureState(CVecd amplitudes, std::vector<Index> factor_dims)
    : vec_(std::move(amplitudes)), factor_dims_(std::move(factor_dims)) {
    if (vec_.size() == 0) throw DimensionError("PureState: empty vector");
    if (!vec_.allFinite()) throw NumericalError("PureState: non-finite amplitude");
    if (factor_dims_.empty()) factor_dims_ = {vec_.size()};
    if (product_of(factor_dims_) != vec_.size()) {
        throw DimensionError("PureState: factor dimensions do not multiply to " +
                             std::to_string(vec_.size()));
    }
    const double n2 = vec_.squaredNorm();
    if (std::abs(n2 - 1.0) > kUnitNormTol) {
        throw DegenerateStateError("PureState: squared norm " + std::to_string(n2) + " is not 1");
    }
}

PureState PureState::from_unnormalized(const CVecd& raw, std::vector<Index> factor_dims) {
    return PureState(l2_normalize(raw), std::move(factor_dims));
}

PureState PureState::basis(Index dim, Index k) {
    CVecd v = CVecd::Zero(dim);
    v(k) = 1.0;
    return PureState(std::move(v));
}

DensityMatrix::DensityMatrix(CMatd mat) : mat_(std::move(mat)) {
    if (mat_.rows() != mat_.cols() || mat_.rows() == 0) {
        throw DimensionError("DensityMatrix: matrix must be square and non-empty");
    }
    if (!mat_.allFinite()) throw NumericalError("DensityMatrix: non-finite entry");
    const double tr = mat_.trace().real();
    if (std::abs(tr - 1.0) > 1e-8 || std::abs(mat_.trace().imag()) > 1e-8) {
        throw NumericalError("DensityMatrix: trace " + std::to_string(tr) + " is not 1");
    }
    if ((mat_ - mat_.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
        throw NumericalError("DensityMatrix: matrix is not Hermitian");
    }
}

PureState product_state(std::span<const PureState> words) {
    if (words.empty()) throw DimensionError("product_state: no word states");
    CVecd acc = words.front().vec();
    std::vector<Index> dims = words.front().factor_dims();
    for (std::size_t k = 1; k < words.size(); ++k) {
        acc = kron(acc, words[k].vec());
        dims.insert(dims.end(), words[k].factor_dims().begin(), words[k].factor_dims().end());
    }
    // Not renormalized: exact inputs give bit-exact products.
    return PureState(std::move(acc), std::move(dims));
}

double fidelity(const PureState& a, const PureState& b) {
    require_same_dim(a, b, "fidelity");
    return std::norm(inner(a.vec(), b.vec()));
}

double measure_pure(const PureState& state, const PureState& m) {
    require_same_dim(state, m, "measure_pure");
    return std::norm(inner(m.vec(), state.vec()));
}

DensityMatrix mixed_state(std::span<const PureState> words, std::span<const double> weights) {
    if (words.empty()) throw DimensionError("mixed_state: no word states");
    if (words.size() != weights.size()) {
        throw DimensionError("mixed_state: " + std::to_string(words.size()) + " states but " +
                             std::to_string(weights.size()) + " weights");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("mixed_state: negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("mixed_state: weights sum to " + std::to_string(total));
    }
    const Index d = words.front().dim();
    CMatd rho = CMatd::Zero(d, d);
    for (std::size_t k = 0; k < words.size(); ++k) {
        require_same_dim(words.front(), words[k], "mixed_state");
        rho += weights[k] * (words[k].vec() * words[k].vec().adjoint());
    }
    return DensityMatrix(std::move(rho));
}

double measure_density(const DensityMatrix& rho, const PureState& m) {
    if (rho.dim() != m.dim()) throw DimensionError("measure_density: dimensions differ");
    const std::complex<double> p = m.vec().dot(rho.mat() * m.vec());
    if (p.real() < 0.0) {
        if (p.real() < -1e-10) {
            throw NumericalError("measure_density: negative probability " + std::to_string(p.real()));
        }
        return 0.0;
    }
    return p.real();
}

RVecd schmidt_coefficients(const PureState& state, SchmidtSplit split) {
    if (split.left_dim <= 0 || split.right_dim <= 0 ||
        split.left_dim * split.right_dim != state.dim()) {
        throw DimensionError("schmidt_coefficients: split " + std::to_string(split.left_dim) + "x" +
                             std::to_string(split.right_dim) + " does not match state dimension " +
                             std::to_string(state.dim()));
    }
    // Row-major reshape: amplitude index i * right + j.
    CMatd m(split.left_dim, split.right_dim);
    for (Index i = 0; i < split.left_dim; ++i) {
        for (Index j = 0; j < split.right_dim; ++j) m(i, j) = state.vec()(i * split.right_dim + j);
    }
    return singular_values<double>(m);
}

double entanglement_entropy(const PureState& state, SchmidtSplit split) {
    const RVecd lambda = schmidt_coefficients(state, split);
    const RVecd p = lambda.cwiseAbs2() / lambda.squaredNorm();
    double s = 0.0;
    for (Index i = 0; i < p.size(); ++i) {
        if (p(i) > 0.0) s -= p(i) * std::log(p(i));
    }
    const double upper = std::log(static_cast<double>(std::min(split.left_dim, split.right_dim)));
    return std::clamp(s, 0.0, upper);
}

SchmidtSplit last_word_split(Index word_dim, int n) {
    if (n < 2) throw std::invalid_argument("last_word_split: need at least two words");
    Index left = 1;
    for (int k = 0; k < n - 1; ++k) left *= word_dim;
    return SchmidtSplit{left, word_dim};
}

}  // namespace qlm
