#pragma once

// One-sided (Hestenes) Jacobi SVD for dense complex matrices.
//
// The routine orthogonalizes the columns of a working copy of the input by
// plane rotations until every column pair has relative overlap below the
// tolerance. Column norms are then the singular values, normalized columns
// the left singular vectors, and the accumulated rotations the right ones.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "qlm/complex_core.hpp"

namespace qlm {

struct SvdOptions {
    int max_sweeps = 100;
    double tolerance = 1e-12;
};

/// Thin decomposition m = u * diag(s) * v^H with k = min(rows, cols) columns.
template <typename T>
struct SvdResult {
    CMat<T> u;
    RVec<T> s;  // descending, non-negative
    CMat<T> v;
    int sweeps = 0;
};

namespace detail {

// Fills columns of q whose norm is zero with unit vectors orthogonal to all
// other columns (Gram-Schmidt against the canonical basis).
template <typename T>
void complete_orthonormal(CMat<T>& q, const std::vector<bool>& valid) {
    const Index rows = q.rows();
    for (Index c = 0; c < q.cols(); ++c) {
        if (valid[static_cast<std::size_t>(c)]) continue;
        for (Index e = 0; e < rows; ++e) {
            CVec<T> cand = CVec<T>::Zero(rows);
            cand(e) = T(1);
            for (int pass = 0; pass < 2; ++pass) {
                for (Index o = 0; o < q.cols(); ++o) {
                    if (o == c || (!valid[static_cast<std::size_t>(o)] && o > c)) continue;
                    cand -= q.col(o).dot(cand) * q.col(o);
                }
            }
            const T n = cand.norm();
            if (n > T(1e-6)) {
                q.col(c) = cand / n;
                break;
            }
        }
    }
}

template <typename T>
SvdResult<T> jacobi_tall(CMat<T> a, const SvdOptions& opt) {
    using C = std::complex<T>;
    const Index n = a.cols();
    CMat<T> v = CMat<T>::Identity(n, n);

    // Columns this small relative to the whole matrix are rounding noise.
    const T negligible = a.squaredNorm() * std::numeric_limits<T>::epsilon() *
                         std::numeric_limits<T>::epsilon();

    int sweep = 0;
    T worst = T(0);
    for (; sweep < opt.max_sweeps; ++sweep) {
        worst = T(0);
        for (Index p = 0; p + 1 < n; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                const T alpha = a.col(p).squaredNorm();
                const T beta = a.col(q).squaredNorm();
                const C gamma = a.col(p).dot(a.col(q));
                const T g = std::abs(gamma);
                if (alpha <= negligible || beta <= negligible || g == T(0)) continue;
                const T rel = g / std::sqrt(alpha * beta);
                worst = std::max(worst, rel);
                if (rel < T(opt.tolerance)) continue;

                // Rotate (a_p, e^{-i theta} a_q), where gamma = |gamma| e^{i theta},
                // with the real Jacobi angle for that now-real overlap.
                const C phase = std::conj(gamma) / g;
                const T zeta = (beta - alpha) / (T(2) * g);
                const T t = (zeta >= T(0) ? T(1) : T(-1)) /
                            (std::abs(zeta) + std::sqrt(T(1) + zeta * zeta));
                const T c = T(1) / std::sqrt(T(1) + t * t);
                const T s = c * t;

                CVec<T> ap = a.col(p);
                CVec<T> aq = a.col(q) * phase;
                a.col(p) = c * ap - s * aq;
                a.col(q) = s * ap + c * aq;

                CVec<T> vp = v.col(p);
                CVec<T> vq = v.col(q) * phase;
                v.col(p) = c * vp - s * vq;
                v.col(q) = s * vp + c * vq;
            }
        }
        if (worst < T(opt.tolerance)) break;
    }
    if (sweep == opt.max_sweeps) {
        std::ostringstream msg;
        msg << "svd: no convergence after " << opt.max_sweeps
            << " sweeps; largest relative column overlap " << worst << " for a " << a.rows()
            << "x" << a.cols() << " matrix";
        throw NumericalError(msg.str());
    }

    RVec<T> norms(n);
    for (Index j = 0; j < n; ++j) norms(j) = a.col(j).norm();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index x, Index y) { return norms(x) > norms(y); });

    SvdResult<T> out;
    out.sweeps = sweep + 1;
    out.s.resize(n);
    out.u.resize(a.rows(), n);
    out.v.resize(n, n);
    const T scale = norms.size() > 0 ? norms.maxCoeff() : T(0);
    std::vector<bool> valid(static_cast<std::size_t>(n), true);
    for (Index k = 0; k < n; ++k) {
        const Index j = order[static_cast<std::size_t>(k)];
        out.s(k) = norms(j);
        out.v.col(k) = v.col(j);
        if (norms(j) > std::numeric_limits<T>::epsilon() * std::max(scale, T(1)) * T(a.rows())) {
            out.u.col(k) = a.col(j) / norms(j);
        } else {
            out.u.col(k).setZero();
            valid[static_cast<std::size_t>(k)] = false;
        }
    }
    complete_orthonormal(out.u, valid);
    return out;
}

}  // namespace detail

/// Singular value decomposition of an arbitrary dense complex matrix.
template <typename T>
SvdResult<T> svd(const CMat<T>& m, const SvdOptions& opt = {}) {
    if (!m.allFinite()) throw NumericalError("svd: matrix has non-finite entries");
    if (m.rows() >= m.cols()) return detail::jacobi_tall<T>(m, opt);
    SvdResult<T> t = detail::jacobi_tall<T>(m.adjoint(), opt);
    std::swap(t.u, t.v);
    return t;
}

/// Singular values only, descending.
template <typename T>
RVec<T> singular_values(const CMat<T>& m, const SvdOptions& opt = {}) {
    return svd<T>(m, opt).s;
}

}  // namespace qlm
