#pragma once

#include <cmath>
#include <vector>

#include "cfts/tensor.hpp"

namespace cfts::optim {

// Bias-corrected adaptive-moment optimizer over a flat parameter list.
class Adam {
public:
    Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(std::vector<Tensor>& params, const std::vector<Tensor>& grads) {
        if (params.size() != grads.size()) throw ShapeError("adam: param/grad count mismatch");
        if (m_.empty()) {
            m_.reserve(params.size());
            v_.reserve(params.size());
            for (const auto& p : params) {
                m_.emplace_back(p.shape);
                v_.emplace_back(p.shape);
            }
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (!params[i].same_shape(grads[i])) throw ShapeError("adam: grad shape mismatch");
            auto& p = params[i].data;
            const auto& g = grads[i].data;
            auto& m = m_[i].data;
            auto& v = v_[i].data;
            for (std::size_t j = 0; j < p.size(); ++j) {
                m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
                v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
                const double mhat = m[j] / bc1;
                const double vhat = v[j] / bc2;
                p[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    long step_count() const { return t_; }
    double learning_rate() const { return lr_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Tensor> m_, v_;
};

}  // namespace cfts::optim
