#include "qlm/tape.hpp"

#include <cmath>
#include <string>

namespace qlm::ad {

namespace {

void require_shape(const Block& b, Index rows, Index cols, const char* what) {
    if (b.rows() != rows || b.cols() != cols) {
        throw DimensionError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                             std::to_string(cols) + ", got " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()));
    }
}

void require_vector(const Block& b, const char* what) {
    if (b.cols() != 1) throw DimensionError(std::string(what) + ": operand is not a column vector");
}

}  // namespace

Var Tape::leaf(Block value, bool real) { return push(std::move(value), real, nullptr); }

Var Tape::push(Block value, bool real, Backward back) {
    if (real) value = value.real().cast<std::complex<double>>();
    nodes_.push_back(Node{std::move(value), Block{}, real, std::move(back)});
    return Var{nodes_.size() - 1};
}

void Tape::accumulate(Var v, const Block& g) {
    Node& n = nodes_.at(v.id);
    if (n.grad.size() == 0) {
        n.grad = Block::Zero(n.value.rows(), n.value.cols());
    }
    n.grad += g;
}

Block Tape::grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    if (n.grad.size() == 0) return Block::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

void Tape::backward(Var loss, double seed) {
    const Node& l = nodes_.at(loss.id);
    if (!l.real || l.value.rows() != 1 || l.value.cols() != 1) {
        throw std::invalid_argument("backward: loss must be a real 1x1 node");
    }
    for (auto& n : nodes_) n.grad.resize(0, 0);
    accumulate(loss, Block::Constant(1, 1, seed));

    for (std::size_t id = loss.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (n.grad.size() == 0) continue;
        if (n.real) n.grad = n.grad.real().cast<std::complex<double>>();
        if (n.back) {
            const Block g = n.grad;
            n.back(*this, g);
        }
    }
}

Var matvec(Tape& t, Var w, Var v) {
    const Block& W = t.value(w);
    const Block& x = t.value(v);
    require_vector(x, "matvec");
    if (W.cols() != x.rows()) throw DimensionError("matvec: inner dimensions differ");
    Block y = W * x;
    return t.push(std::move(y), false, [w, v](Tape& tp, const Block& g) {
        const Block& W = tp.value(w);
        const Block& x = tp.value(v);
        tp.accumulate(v, W.adjoint() * g);
        tp.accumulate(w, g * x.adjoint());
    });
}

Var kron(Tape& t, Var a, Var b) {
    const Block& A = t.value(a);
    const Block& B = t.value(b);
    require_vector(A, "kron");
    require_vector(B, "kron");
    const Index nb = B.rows();
    Block y(A.rows() * nb, 1);
    for (Index i = 0; i < A.rows(); ++i) y.block(i * nb, 0, nb, 1) = A(i, 0) * B;
    return t.push(std::move(y), false, [a, b](Tape& tp, const Block& g) {
        const Block& A = tp.value(a);
        const Block& B = tp.value(b);
        const Index nb = B.rows();
        Block ga = Block::Zero(A.rows(), 1);
        Block gb = Block::Zero(nb, 1);
        for (Index i = 0; i < A.rows(); ++i) {
            auto gi = g.block(i * nb, 0, nb, 1);
            ga(i, 0) = B.col(0).dot(gi.col(0));
            gb += std::conj(A(i, 0)) * gi;
        }
        tp.accumulate(a, ga);
        tp.accumulate(b, gb);
    });
}

Var normalize(Tape& t, Var v) {
    const Block& x = t.value(v);
    require_vector(x, "normalize");
    const double n = x.norm();
    if (!std::isfinite(n)) throw NumericalError("normalize: non-finite state norm");
    if (!(n > kNormFloor)) {
        throw DegenerateStateError("normalize: state norm " + std::to_string(n) +
                                   " fell below the floor");
    }
    Block y = x / n;
    const bool real = t.is_real(v);
    return t.push(std::move(y), real, [v, n](Tape& tp, const Block& g) {
        const Block y = tp.value(v) / n;
        const double radial = y.col(0).dot(g.col(0)).real();
        tp.accumulate(v, (g - y * radial) / n);
    });
}

Var polar(Tape& t, Var r, Var phi) {
    const Block& R = t.value(r);
    const Block& P = t.value(phi);
    require_vector(R, "polar");
    require_shape(P, R.rows(), 1, "polar");
    Block y(R.rows(), 1);
    for (Index j = 0; j < R.rows(); ++j) y(j, 0) = R(j, 0).real() * std::polar(1.0, P(j, 0).real());
    return t.push(std::move(y), false, [r, phi](Tape& tp, const Block& g) {
        const Block& R = tp.value(r);
        const Block& P = tp.value(phi);
        Block gr(R.rows(), 1), gp(R.rows(), 1);
        for (Index j = 0; j < R.rows(); ++j) {
            const std::complex<double> z = std::conj(g(j, 0)) * std::polar(1.0, P(j, 0).real());
            gr(j, 0) = z.real();
            gp(j, 0) = -R(j, 0).real() * z.imag();
        }
        tp.accumulate(r, gr);
        tp.accumulate(phi, gp);
    });
}

Var measure(Tape& t, Var bank, Var psi) {
    const Block& B = t.value(bank);
    const Block& x = t.value(psi);
    require_vector(x, "measure");
    if (B.cols() != x.rows()) throw DimensionError("measure: bank and state dimensions differ");
    Block amp = B.conjugate() * x;
    Block p = amp.cwiseAbs2().cast<std::complex<double>>();
    return t.push(std::move(p), true, [bank, psi, amp](Tape& tp, const Block& g) {
        const Block& B = tp.value(bank);
        const Block& x = tp.value(psi);
        const Block ga = 2.0 * (g.real().array() * amp.array()).matrix();
        tp.accumulate(psi, B.transpose() * ga);
        tp.accumulate(bank, ga.conjugate() * x.transpose());
    });
}

Var mixture(Tape& t, std::span<const Var> states, std::span<const double> weights) {
    if (states.empty() || states.size() != weights.size()) {
        throw DimensionError("mixture: need one weight per state");
    }
    const Index d = t.value(states[0]).rows();
    Block rho = Block::Zero(d, d);
    for (std::size_t k = 0; k < states.size(); ++k) {
        const Block& s = t.value(states[k]);
        require_shape(s, d, 1, "mixture");
        rho += weights[k] * (s * s.adjoint());
    }
    std::vector<Var> st(states.begin(), states.end());
    std::vector<double> w(weights.begin(), weights.end());
    return t.push(std::move(rho), false, [st, w](Tape& tp, const Block& g) {
        const Block herm = g + g.adjoint();
        for (std::size_t k = 0; k < st.size(); ++k) {
            tp.accumulate(st[k], w[k] * (herm * tp.value(st[k])));
        }
    });
}

Var measure_density(Tape& t, Var bank, Var rho) {
    const Block& B = t.value(bank);
    const Block& R = t.value(rho);
    if (R.rows() != R.cols() || B.cols() != R.rows()) {
        throw DimensionError("measure_density: bank and density matrix dimensions differ");
    }
    const Block x = R * B.transpose();  // column i = rho m_i
    Block p(B.rows(), 1);
    for (Index i = 0; i < B.rows(); ++i) {
        p(i, 0) = (B.row(i).conjugate() * x.col(i))(0, 0).real();
    }
    return t.push(std::move(p), true, [bank, rho](Tape& tp, const Block& g) {
        const Block& B = tp.value(bank);
        const Block& R = tp.value(rho);
        const Eigen::VectorXd gp = g.col(0).real();
        // g_rho = sum_i gp_i m_i m_i^H, with m_i = B.row(i)^T.
        tp.accumulate(rho, B.transpose() * gp.cast<std::complex<double>>().asDiagonal() * B.conjugate());
        const Block herm = R + R.adjoint();
        Block gb = (herm * B.transpose()).transpose();
        for (Index i = 0; i < B.rows(); ++i) gb.row(i) *= gp(i);
        tp.accumulate(bank, gb);
    });
}

Var max_pool(Tape& t, std::span<const Var> rows) {
    if (rows.empty()) throw DimensionError("max_pool: no rows");
    const Index m = t.value(rows[0]).rows();
    Block out = t.value(rows[0]);
    std::vector<std::size_t> arg(static_cast<std::size_t>(m), 0);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const Block& v = t.value(rows[r]);
        require_shape(v, m, 1, "max_pool");
        for (Index j = 0; j < m; ++j) {
            if (v(j, 0).real() > out(j, 0).real()) {
                out(j, 0) = v(j, 0);
                arg[static_cast<std::size_t>(j)] = r;
            }
        }
    }
    std::vector<Var> rs(rows.begin(), rows.end());
    return t.push(std::move(out), true, [rs, arg, m](Tape& tp, const Block& g) {
        std::vector<Block> parts(rs.size());
        for (Index j = 0; j < m; ++j) {
            const std::size_t r = arg[static_cast<std::size_t>(j)];
            if (parts[r].size() == 0) parts[r] = Block::Zero(m, 1);
            parts[r](j, 0) = g(j, 0);
        }
        for (std::size_t r = 0; r < rs.size(); ++r) {
            if (parts[r].size() != 0) tp.accumulate(rs[r], parts[r]);
        }
    });
}

Var concat(Tape& t, std::span<const Var> parts) {
    if (parts.empty()) throw DimensionError("concat: nothing to concatenate");
    Index total = 0;
    bool real = true;
    for (Var p : parts) {
        require_vector(t.value(p), "concat");
        total += t.value(p).rows();
        real = real && t.is_real(p);
    }
    Block out(total, 1);
    Index off = 0;
    for (Var p : parts) {
        out.block(off, 0, t.value(p).rows(), 1) = t.value(p);
        off += t.value(p).rows();
    }
    std::vector<Var> ps(parts.begin(), parts.end());
    return t.push(std::move(out), real, [ps](Tape& tp, const Block& g) {
        Index off = 0;
        for (Var p : ps) {
            const Index n = tp.value(p).rows();
            tp.accumulate(p, g.block(off, 0, n, 1));
            off += n;
        }
    });
}

Var cosine(Tape& t, Var a, Var b) {
    const Eigen::VectorXd x = t.value(a).col(0).real();
    const Eigen::VectorXd y = t.value(b).col(0).real();
    if (x.size() != y.size()) throw DimensionError("cosine: lengths differ");
    const double nx = x.norm();
    const double ny = y.norm();
    if (nx == 0.0 || ny == 0.0) throw ZeroFeatureError("cosine: zero-norm feature vector");
    const double c = x.dot(y) / (nx * ny);
    return t.push(Block::Constant(1, 1, c), true, [a, b, x, y, nx, ny, c](Tape& tp, const Block& g) {
        const double gc = g(0, 0).real();
        const Eigen::VectorXd ga = gc * (y / (nx * ny) - c * x / (nx * nx));
        const Eigen::VectorXd gb = gc * (x / (nx * ny) - c * y / (ny * ny));
        tp.accumulate(a, ga.cast<std::complex<double>>());
        tp.accumulate(b, gb.cast<std::complex<double>>());
    });
}

Var hinge(Tape& t, Var pos, Var neg, double margin) {
    const double raw = margin - t.value(pos)(0, 0).real() + t.value(neg)(0, 0).real();
    const bool active = raw > 0.0;
    return t.push(Block::Constant(1, 1, active ? raw : 0.0), true,
                  [pos, neg, active](Tape& tp, const Block& g) {
                      if (!active) return;
                      tp.accumulate(pos, -g);
                      tp.accumulate(neg, g);
                  });
}

}  // namespace qlm::ad
