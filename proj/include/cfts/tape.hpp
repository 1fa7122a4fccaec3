#pragma once

#include <functional>
#include <vector>

#include "cfts/tensor.hpp"

namespace cfts::ad {

// Reverse-mode tape.  Every op appends one node holding the forward value and
// a pull-back closure; ids are topologically ordered by construction so the
// backward sweep is a single reverse pass.  A tape is single-owner for the
// duration of one forward/backward pair.
class Tape {
public:
    using Id = int;

    Id leaf(Tensor value);       // parameter: gradient retained after backward
    Id constant(Tensor value);   // input / buffer: no gradient kept

    const Tensor& val(Id id) const { return nodes_[id].value; }
    const Tensor& grad(Id id) const;
    bool is_leaf(Id id) const { return nodes_[id].leaf; }
    std::size_t size() const { return nodes_.size(); }

    // ---- primitives (each records an exact adjoint rule) -------------------
    Id add(Id a, Id b);
    Id sub(Id a, Id b);
    Id mul(Id a, Id b);                       // elementwise
    Id scale(Id a, double c);
    Id add_scalar(Id a, double c);
    Id add_rowvec(Id a, Id v);                // (m x n) + (1 x n), broadcast over rows
    Id matmul(Id a, Id b);                    // (m x k)(k x n)
    Id matmul_nt(Id a, Id b);                 // (m x k)(n x k)^T -> (m x n)
    Id concat_cols(const std::vector<Id>& parts);
    Id vstack(const std::vector<Id>& parts);  // stack matrices with equal column count
    Id slice_rows(Id a, int r0, int r1);      // rows [r0, r1)
    Id gather_rows(Id a, std::vector<int> idx);
    Id sigmoid(Id a);
    Id tanh_(Id a);
    Id relu(Id a);
    Id exp_(Id a);
    Id log_(Id a);
    Id softmax_rows(Id a);                    // -inf entries get weight 0
    Id layer_norm_rows(Id x, Id gain, Id bias, double eps = 1e-5);
    Id mean_all(Id a);
    Id sum_all(Id a);
    Id mul_mask(Id a, Tensor mask);           // elementwise by constant (dropout)
    Id add_const(Id a, Tensor c);             // elementwise add of constant (masks, posenc)
    Id mse_against(Id a, Tensor target);      // mean((a - t)^2) -> scalar
    // sum_ij plan[i][j] * sqrt(|x_i - y_j|^2 + eps^2); plan held constant
    // (envelope gradient for transport losses).
    Id plan_distance(Id x, Id y, Tensor plan, double eps = 1e-9);

    // Seeds d(out)/d(out) = 1 and runs the reverse sweep.  out must be scalar.
    // Gradients of non-leaf nodes are freed afterwards.
    void backward(Id out);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool leaf = false;
        bool has_grad = false;
        std::function<void(Tape&)> pull;  // accumulate into parents' grads
    };

    Id push(Tensor value, std::function<void(Tape&)> pull);
    Tensor& grad_buf(Id id);
    void add_to_grad(Id id, const Tensor& g);

    std::vector<Node> nodes_;
    bool swept_ = false;

    friend struct GradAccess;
};

// Central-difference gradient of a scalar-valued function of a flat parameter
// vector.  Test oracle; independent of the tape's adjoint rules.
std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                      std::vector<double> x, double h = 1e-5);

}  // namespace cfts::ad
