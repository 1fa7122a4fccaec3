#include "cfts/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cfts::ad {

namespace {

void require_matrix(const Tensor& t, const char* who) {
    if (t.rank() != 2) throw ShapeError(std::string(who) + ": expected matrix");
}

}  // namespace

Tape::Id Tape::push(Tensor value, std::function<void(Tape&)> pull) {
    Node n;
    n.value = std::move(value);
    n.pull = std::move(pull);
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size()) - 1;
}

Tape::Id Tape::leaf(Tensor value) {
    Id id = push(std::move(value), nullptr);
    nodes_[id].leaf = true;
    return id;
}

Tape::Id Tape::constant(Tensor value) { return push(std::move(value), nullptr); }

Tensor& Tape::grad_buf(Id id) {
    Node& n = nodes_[id];
    if (!n.has_grad) {
        n.grad = Tensor(n.value.shape);
        n.has_grad = true;
    }
    return n.grad;
}

void Tape::add_to_grad(Id id, const Tensor& g) {
    Tensor& buf = grad_buf(id);
    for (std::size_t i = 0; i < buf.data.size(); ++i) buf.data[i] += g.data[i];
}

const Tensor& Tape::grad(Id id) const {
    const Node& n = nodes_[id];
    if (!swept_) throw ContractError("grad() before backward()");
    if (!n.has_grad) throw ContractError("gradient not retained for this node");
    return n.grad;
}

void Tape::backward(Id out) {
    if (!nodes_[out].value.is_scalar()) throw ContractError("backward: output must be scalar");
    if (swept_) throw ContractError("backward: tape already swept");
    grad_buf(out).data[0] = 1.0;
    for (Id id = static_cast<Id>(nodes_.size()) - 1; id >= 0; --id) {
        Node& n = nodes_[id];
        if (n.has_grad && n.pull) n.pull(*this);
    }
    // Leaves keep their gradients (zero if the output never touched them);
    // intermediate gradient buffers are dropped.
    for (Id id = 0; id < static_cast<Id>(nodes_.size()); ++id) {
        Node& n = nodes_[id];
        if (n.leaf) {
            if (!n.has_grad) {
                n.grad = Tensor(n.value.shape);
                n.has_grad = true;
            }
        } else if (n.has_grad) {
            n.grad = Tensor();
            n.has_grad = false;
        }
    }
    swept_ = true;
}

// ---------------------------------------------------------------------------

Tape::Id Tape::add(Id a, Id b) {
    if (!val(a).same_shape(val(b))) throw ShapeError("add: shape mismatch");
    Tensor out = val(a);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += val(b).data[i];
    Id self = push(std::move(out), nullptr);
    nodes_[self].pull = [self, a, b](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        t.add_to_grad(a, g);
        t.add_to_grad(b, g);
    };
    return self;
}

Tape::Id Tape::sub(Id a, Id b) {
    if (!val(a).same_shape(val(b))) throw ShapeError("sub: shape mismatch");
    Tensor out = val(a);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= val(b).data[i];
    Id self = push(std::move(out), nullptr);
    nodes_[self].pull = [self, a, b](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        t.add_to_grad(a, g);
        Tensor& gb = t.grad_buf(b);
        for (std::size_t i = 0; i < gb.data.size(); ++i) gb.data[i] -= g.data[i];
    };
    return self;
}

Tape::Id Tape::mul(Id a, Id b) {
    if (!val(a).same_shape(val(b))) throw ShapeError("mul: shape mismatch");
    Tensor out = val(a);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= val(b).data[i];
    Id self = push(std::move(out), nullptr);
    nodes_[self].pull = [self, a, b](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& va = t.val(a);
        const Tensor& vb = t.val(b);
        Tensor& ga = t.grad_buf(a);
        Tensor& gb = t.grad_buf(b);
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            ga.data[i] += g.data[i] * vb.data[i];
            gb.data[i] += g.data[i] * va.data[i];
        }
    };
    return self;
}

Tape::Id Tape::scale(Id a, double c) {
    Tensor out = val(a);
    for (double& v : out.data) v *= c;
    Id self = push(std::move(out), nullptr);
    nodes_[self].pull = [self, a, c](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += c * g.data[i];
    };
    return self;
}

Tape::Id Tape::add_scalar(Id a, double c) {
    Tensor out = val(a);
    for (double& v : out.data) v += c;
    Id self = push(std::move(out), nullptr);
    nodes_[self].pull = [self, a](Tape& t) { t.add_to_grad(a, t.nodes_[self].grad); };
    return self;
}

Tape::Id Tape::add_rowvec(Id a, Id v) {
    require_matrix(val(a), "add_rowvec");
    const Tensor& m = val(a);
    const Tensor& r = val(v);
    if (r.numel() != static_cast<std::size_t>(m.cols()))
        throw ShapeError("add_rowvec: vector width mismatch");
    Tensor out = m;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) out.at(i, j) += r.data[j];
    Id self = push(std::move(out), nullptr);
    nodes_[self].pull = [self, a, v](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        t.add_to_grad(a, g);
        Tensor& gv = t.grad_buf(v);
        const int rows = g.shape[0], cols = g.shape[1];
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) gv.data[j] += g.at(i, j);
    };
    return self;
}

namespace {
// C += A * B, row-major, ikj order.
void gemm_acc(const Tensor& A, const Tensor& B, Tensor& C) {
    const int m = A.shape[0], k = A.shape[1], n = B.shape[1];
    for (int i = 0; i < m; ++i) {
        const double* arow = &A.data[static_cast<std::size_t>(i) * k];
        double* crow = &C.data[static_cast<std::size_t>(i) * n];
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = &B.data[static_cast<std::size_t>(p) * n];
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}
// C += A * B^T
void gemm_nt_acc(const Tensor& A, const Tensor& B, Tensor& C) {
    const int m = A.shape[0], k = A.shape[1], n = B.shape[0];
    for (int i = 0; i < m; ++i) {
        const double* arow = &A.data[static_cast<std::size_t>(i) * k];
        double* crow = &C.data[static_cast<std::size_t>(i) * n];
        for (int j = 0; j < n; ++j) {
            const double* brow = &B.data[static_cast<std::size_t>(j) * k];
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
            crow[j] += s;
        }
    }
}
// C += A^T * B
void gemm_tn_acc(const Tensor& A, const Tensor& B, Tensor& C) {
    const int m = A.shape[1], k = A.shape[0], n = B.shape[1];
    for (int p = 0; p < k; ++p) {
        const double* arow = &A.data[static_cast<std::size_t>(p) * m];
        const double* brow = &B.data[static_cast<std::size_t>(p) * n];
        for (int i = 0; i < m; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* crow = &C.data[static_cast<std::size_t>(i) * n];
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}
}  // namespace

Tape::Id Tape::matmul(Id a, Id b) {
    require_matrix(val(a), "matmul");
    require_matrix(val(b), "matmul");
    if (val(a).cols() != val(b).rows()) throw ShapeError("matmul: inner dimension mismatch");
    Tensor out({val(a).rows(), val(b).cols()});
    gemm_acc(val(a), val(b), out);
    Id self = push(std::move(out), nullptr);
    nodes_[self].pull = [self, a, b](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        gemm_nt_acc(g, t.val(b), t.grad_buf(a));  // dA += G B^T
        gemm_tn_acc(t.val(a), g, t.grad_buf(b));  // dB += A^T G
    };
    return self;
}

Tape::Id Tape::matmul_nt(Id a, Id b) {
    require_matrix(val(a), "matmul_nt");
    require_matrix(val(b), "matmul_nt");
    if (val(a).cols() != val(b).cols()) throw ShapeError("matmul_nt: inner dimension mismatch");
    Tensor out({val(a).rows(), val(b).rows()});
    gemm_nt_acc(val(a), val(b), out);
    Id self = push(std::move(out), nullptr);
    nodes_[self].pull = [self, a, b](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        gemm_acc(g, t.val(b), t.grad_buf(a));     // dA += G B
        gemm_tn_acc(g, t.val(a), t.grad_buf(b));  // dB += G^T A
    };
    return self;
}

Tape::Id Tape::concat_cols(const std::vector<Id>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    const int rows = val(parts[0]).rows();
    int cols = 0;
    for (Id p : parts) {
        require_matrix(val(p), "concat_cols");
        if (val(p).rows() != rows) throw ShapeError("concat_cols: row count mismatch");
        cols += val(p).cols();
    }
    Tensor out({rows, cols});
    int off = 0;
    for (Id p : parts) {
        const Tensor& v = val(p);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < v.cols(); ++j) out.at(i, off + j) = v.at(i, j);
        off += v.cols();
    }
    Id self = push(std::move(out), nullptr);
    std::vector<Id> ps = parts;
    nodes_[self].pull = [self, ps](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const int rows = g.shape[0];
        int off = 0;
        for (Id p : ps) {
            Tensor& gp = t.grad_buf(p);
            const int c = gp.shape[1];
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < c; ++j) gp.at(i, j) += g.at(i, off + j);
            off += c;
        }
    };
    return self;
}

Tape::Id Tape::vstack(const std::vector<Id>& parts) {
    if (parts.empty()) throw ShapeError("vstack: no inputs");
    const int cols = val(parts[0]).cols();
    int rows = 0;
    for (Id p : parts) {
        require_matrix(val(p), "vstack");
        if (val(p).cols() != cols) throw ShapeError("vstack: column count mismatch");
        rows += val(p).rows();
    }
    Tensor out({rows, cols});
    int off = 0;
    for (Id p : parts) {
        const Tensor& v = val(p);
        std::copy(v.data.begin(), v.data.end(), out.data.begin() + static_cast<std::size_t>(off) * cols);
        off += v.rows();
    }
    Id self = push(std::move(out), nullptr);
    std::vector<Id> ps = parts;
    nodes_[self].pull = [self, ps](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const int cols = g.shape[1];
        int off = 0;
        for (Id p : ps) {
            Tensor& gp = t.grad_buf(p);
            const int r = gp.shape[0];
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < cols; ++j) gp.at(i, j) += g.at(off + i, j);
            off += r;
        }
    };
    return self;
}

Tape::Id Tape::slice_rows(Id a, int r0, int r1) {
    require_matrix(val(a), "slice_rows");
    const Tensor& v = val(a);
    if (r0 < 0 || r1 > v.rows() || r0 >= r1) throw std::out_of_range("slice_rows: bad range");
    Tensor out({r1 - r0, v.cols()});
    std::copy(v.data.begin() + static_cast<std::size_t>(r0) * v.cols(),
              v.data.begin() + static_cast<std::size_t>(r1) * v.cols(), out.data.begin());
    Id self = push(std::move(out), nullptr);
    nodes_[self].pull = [self, a, r0](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_buf(a);
        const int cols = g.shape[1];
        for (int i = 0; i < g.shape[0]; ++i)
            for (int j = 0; j < cols; ++j) ga.at(r0 + i, j) += g.at(i, j);
    };
    return self;
}

Tape::Id Tape::gather_rows(Id a, std::vector<int> idx) {
    require_matrix(val(a), "gather_rows");
    const Tensor& v = val(a);
    Tensor out({static_cast<int>(idx.size()), v.cols()});
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= v.rows()) throw std::out_of_range("gather_rows: index");
        for (int j = 0; j < v.cols(); ++j) out.at(static_cast<int>(i), j) = v.at(idx[i], j);
    }
    Id self = push(std::move(out), nullptr);
    nodes_[self].pull = [self, a, idx = std::move(idx)](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (int j = 0; j < g.shape[1]; ++j) ga.at(idx[i], j) += g.at(static_cast<int>(i), j);
    };
    return self;
}

Tape::Id Tape::sigmoid(Id a) {
    Tensor out = val(a);
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    Id self = push(std::move(out), nullptr);
    nodes_[self].pull = [self, a](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& y = t.val(self);
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < g.data.size(); ++i)
            ga.data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
    };
    return self;
}

Tape::Id Tape::tanh_(Id a) {
    Tensor out = val(a);
    for (double& v : out.data) v = std::tanh(v);
    Id self = push(std::move(out), nullptr);
    nodes_[self].pull = [self, a](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& y = t.val(self);
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < g.data.size(); ++i)
            ga.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
    };
    return self;
}

Tape::Id Tape::relu(Id a) {
    Tensor out = val(a);
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    Id self = push(std::move(out), nullptr);
    nodes_[self].pull = [self, a](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& x = t.val(a);
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < g.data.size(); ++i)
            if (x.data[i] > 0.0) ga.data[i] += g.data[i];
    };
    return self;
}

Tape::Id Tape::exp_(Id a) {
    Tensor out = val(a);
    for (double& v : out.data) v = std::exp(v);
    Id self = push(std::move(out), nullptr);
    nodes_[self].pull = [self, a](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& y = t.val(self);
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] * y.data[i];
    };
    return self;
}

Tape::Id Tape::log_(Id a) {
    Tensor out = val(a);
    for (double& v : out.data) {
        if (v <= 0.0) throw DomainError("log of non-positive value");
        v = std::log(v);
    }
    Id self = push(std::move(out), nullptr);
    nodes_[self].pull = [self, a](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& x = t.val(a);
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] / x.data[i];
    };
    return self;
}

Tape::Id Tape::softmax_rows(Id a) {
    require_matrix(val(a), "softmax_rows");
    Tensor out = val(a);
    const int rows = out.rows(), cols = out.cols();
    for (int i = 0; i < rows; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < cols; ++j) mx = std::max(mx, out.at(i, j));
        double z = 0.0;
        for (int j = 0; j < cols; ++j) {
            const double e = std::isinf(out.at(i, j)) && out.at(i, j) < 0
                                 ? 0.0
                                 : std::exp(out.at(i, j) - mx);
            out.at(i, j) = e;
            z += e;
        }
        for (int j = 0; j < cols; ++j) out.at(i, j) /= z;
    }
    Id self = push(std::move(out), nullptr);
    nodes_[self].pull = [self, a](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& y = t.val(self);
        Tensor& ga = t.grad_buf(a);
        const int rows = g.shape[0], cols = g.shape[1];
        for (int i = 0; i < rows; ++i) {
            double dot = 0.0;
            for (int j = 0; j < cols; ++j) dot += g.at(i, j) * y.at(i, j);
            for (int j = 0; j < cols; ++j) ga.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
        }
    };
    return self;
}

Tape::Id Tape::layer_norm_rows(Id x, Id gain, Id bias, double eps) {
    require_matrix(val(x), "layer_norm_rows");
    const Tensor& v = val(x);
    const int rows = v.rows(), cols = v.cols();
    if (val(gain).numel() != static_cast<std::size_t>(cols) ||
        val(bias).numel() != static_cast<std::size_t>(cols))
        throw ShapeError("layer_norm_rows: gain/bias width mismatch");
    Tensor out({rows, cols});
    Tensor xhat({rows, cols});
    Tensor inv_std({rows, 1});
    for (int i = 0; i < rows; ++i) {
        double mu = 0.0;
        for (int j = 0; j < cols; ++j) mu += v.at(i, j);
        mu /= cols;
        double var = 0.0;
        for (int j = 0; j < cols; ++j) {
            const double d = v.at(i, j) - mu;
            var += d * d;
        }
        var /= cols;
        const double inv = 1.0 / std::sqrt(var + eps);
        inv_std.at(i, 0) = inv;
        for (int j = 0; j < cols; ++j) {
            const double xh = (v.at(i, j) - mu) * inv;
            xhat.at(i, j) = xh;
            out.at(i, j) = xh * val(gain).data[j] + val(bias).data[j];
        }
    }
    Id self = push(std::move(out), nullptr);
    nodes_[self].pull = [self, x, gain, bias, xhat = std::move(xhat),
                         inv_std = std::move(inv_std)](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const int rows = g.shape[0], cols = g.shape[1];
        Tensor& gx = t.grad_buf(x);
        Tensor& gg = t.grad_buf(gain);
        Tensor& gb = t.grad_buf(bias);
        const Tensor& w = t.val(gain);
        for (int i = 0; i < rows; ++i) {
            const double inv = inv_std.at(i, 0);
            double sum_dxh = 0.0, sum_dxh_xh = 0.0;
            for (int j = 0; j < cols; ++j) {
                const double dxh = g.at(i, j) * w.data[j];
                sum_dxh += dxh;
                sum_dxh_xh += dxh * xhat.at(i, j);
                gg.data[j] += g.at(i, j) * xhat.at(i, j);
                gb.data[j] += g.at(i, j);
            }
            for (int j = 0; j < cols; ++j) {
                const double dxh = g.at(i, j) * w.data[j];
                gx.at(i, j) +=
                    inv * (dxh - sum_dxh / cols - xhat.at(i, j) * sum_dxh_xh / cols);
            }
        }
    };
    return self;
}

Tape::Id Tape::mean_all(Id a) {
    const Tensor& v = val(a);
    if (v.numel() == 0) throw DomainError("mean of empty tensor");
    double s = 0.0;
    for (double x : v.data) s += x;
    const double n = static_cast<double>(v.numel());
    Id self = push(Tensor::scalar(s / n), nullptr);
    nodes_[self].pull = [self, a, n](Tape& t) {
        const double g = t.nodes_[self].grad.data[0] / n;
        Tensor& ga = t.grad_buf(a);
        for (double& x : ga.data) x += g;
    };
    return self;
}

Tape::Id Tape::sum_all(Id a) {
    const Tensor& v = val(a);
    double s = 0.0;
    for (double x : v.data) s += x;
    Id self = push(Tensor::scalar(s), nullptr);
    nodes_[self].pull = [self, a](Tape& t) {
        const double g = t.nodes_[self].grad.data[0];
        Tensor& ga = t.grad_buf(a);
        for (double& x : ga.data) x += g;
    };
    return self;
}

Tape::Id Tape::mul_mask(Id a, Tensor mask) {
    if (!val(a).same_shape(mask)) throw ShapeError("mul_mask: shape mismatch");
    Tensor out = val(a);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= mask.data[i];
    Id self = push(std::move(out), nullptr);
    nodes_[self].pull = [self, a, mask = std::move(mask)](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] * mask.data[i];
    };
    return self;
}

Tape::Id Tape::add_const(Id a, Tensor c) {
    if (!val(a).same_shape(c)) throw ShapeError("add_const: shape mismatch");
    Tensor out = val(a);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += c.data[i];
    Id self = push(std::move(out), nullptr);
    nodes_[self].pull = [self, a](Tape& t) { t.add_to_grad(a, t.nodes_[self].grad); };
    return self;
}

Tape::Id Tape::mse_against(Id a, Tensor target) {
    if (!val(a).same_shape(target)) throw ShapeError("mse_against: shape mismatch");
    if (target.numel() == 0) throw DomainError("mse_against: empty target");
    const Tensor& v = val(a);
    double s = 0.0;
    for (std::size_t i = 0; i < v.data.size(); ++i) {
        const double d = v.data[i] - target.data[i];
        s += d * d;
    }
    const double n = static_cast<double>(v.numel());
    Id self = push(Tensor::scalar(s / n), nullptr);
    nodes_[self].pull = [self, a, target = std::move(target), n](Tape& t) {
        const double g = t.nodes_[self].grad.data[0];
        const Tensor& v = t.val(a);
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < v.data.size(); ++i)
            ga.data[i] += g * 2.0 * (v.data[i] - target.data[i]) / n;
    };
    return self;
}

Tape::Id Tape::plan_distance(Id x, Id y, Tensor plan, double eps) {
    require_matrix(val(x), "plan_distance");
    require_matrix(val(y), "plan_distance");
    const Tensor& X = val(x);
    const Tensor& Y = val(y);
    if (X.cols() != Y.cols()) throw ShapeError("plan_distance: dimension mismatch");
    if (plan.rank() != 2 || plan.rows() != X.rows() || plan.cols() != Y.rows())
        throw ShapeError("plan_distance: plan shape mismatch");
    const int d = X.cols();
    double total = 0.0;
    for (int i = 0; i < X.rows(); ++i) {
        for (int j = 0; j < Y.rows(); ++j) {
            const double p = plan.at(i, j);
            if (p == 0.0) continue;
            double ssq = eps * eps;
            for (int c = 0; c < d; ++c) {
                const double diff = X.at(i, c) - Y.at(j, c);
                ssq += diff * diff;
            }
            total += p * std::sqrt(ssq);
        }
    }
    Id self = push(Tensor::scalar(total), nullptr);
    nodes_[self].pull = [self, x, y, plan = std::move(plan), eps](Tape& t) {
        const double g = t.nodes_[self].grad.data[0];
        const Tensor& X = t.val(x);
        const Tensor& Y = t.val(y);
        Tensor& gx = t.grad_buf(x);
        Tensor& gy = t.grad_buf(y);
        const int d = X.shape[1];
        for (int i = 0; i < X.shape[0]; ++i) {
            for (int j = 0; j < Y.shape[0]; ++j) {
                const double p = plan.at(i, j);
                if (p == 0.0) continue;
                double ssq = eps * eps;
                for (int c = 0; c < d; ++c) {
                    const double diff = X.at(i, c) - Y.at(j, c);
                    ssq += diff * diff;
                }
                const double coeff = g * p / std::sqrt(ssq);
                for (int c = 0; c < d; ++c) {
                    const double diff = X.at(i, c) - Y.at(j, c);
                    gx.at(i, c) += coeff * diff;
                    gy.at(j, c) -= coeff * diff;
                }
            }
        }
    };
    return self;
}

std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                      std::vector<double> x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        x[i] = x0 + h;
        const double fp = f(x);
        x[i] = x0 - h;
        const double fm = f(x);
        x[i] = x0;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

}  // namespace cfts::ad
