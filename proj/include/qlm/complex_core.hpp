#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <string>

#include "qlm/errors.hpp"

namespace qlm {

using Index = Eigen::Index;

template <typename T>
using CVec = Eigen::Matrix<std::complex<T>, Eigen::Dynamic, 1>;

template <typename T>
using CMat = Eigen::Matrix<std::complex<T>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename T>
using RVec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using CVecd = CVec<double>;
using CMatd = CMat<double>;
using RVecd = RVec<double>;

/// Norm floor below which a vector is treated as the zero state.
inline constexpr double kNormFloor = 1e-12;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
    return x.allFinite();
}

/// Complex matrix-vector product with shape checking.
template <typename DerivedM, typename DerivedV>
auto cmatvec(const Eigen::MatrixBase<DerivedM>& m, const Eigen::MatrixBase<DerivedV>& v) {
    using Scalar = typename DerivedM::Scalar;
    if (m.cols() != v.size()) {
        throw DimensionError("cmatvec: matrix has " + std::to_string(m.cols()) +
                             " columns but vector has dimension " + std::to_string(v.size()));
    }
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out = m * v;
    return out;
}

/// Kronecker product of two column vectors; entry (i * b.size() + j) = a[i] * b[j].
template <typename DerivedA, typename DerivedB>
auto kron(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    using Scalar = typename Eigen::ScalarBinaryOpTraits<typename DerivedA::Scalar,
                                                        typename DerivedB::Scalar>::ReturnType;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(a.size() * b.size());
    for (Index i = 0; i < a.size(); ++i) {
        out.segment(i * b.size(), b.size()) = a(i) * b;
    }
    return out;
}

/// Returns v / ||v||_2. Throws NumericalError for a non-finite norm and
/// DegenerateStateError when ||v|| <= kNormFloor.
template <typename Derived>
auto l2_normalize(const Eigen::MatrixBase<Derived>& v) {
    using Scalar = typename Derived::Scalar;
    const auto norm = v.norm();
    if (!std::isfinite(norm)) throw NumericalError("l2_normalize: non-finite vector norm");
    if (!(norm > kNormFloor)) {
        throw DegenerateStateError("l2_normalize: vector norm " + std::to_string(norm) +
                                   " is below the floor");
    }
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out = v / norm;
    return out;
}

/// Conjugate-linear in the first argument: sum_i conj(a_i) b_i.
template <typename DerivedA, typename DerivedB>
auto inner(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    if (a.size() != b.size()) {
        throw DimensionError("inner: dimensions " + std::to_string(a.size()) + " and " +
                             std::to_string(b.size()) + " differ");
    }
    return a.dot(b);
}

}  // namespace qlm
