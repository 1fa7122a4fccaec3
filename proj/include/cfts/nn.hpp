#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfts/rng.hpp"
#include "cfts/tape.hpp"

namespace cfts::nn {

using ad::Tape;

enum class EncoderKind { Recurrent, Attention };
enum class Mode { Train, Eval };

struct ModelConfig {
    EncoderKind encoder = EncoderKind::Attention;
    int cov_dim = 2;       // maskable covariate channels per step
    int treat_dim = 2;     // previous-treatment channels per step (never masked)
    int treat_onehot = 4;  // joint (chemo, radio) one-hot fed to the outcome head
    int hidden = 32;
    int layers = 1;
    int heads = 2;
    int head_hidden = 32;
    double dropout = 0.1;

    int input_dim() const { return cov_dim + treat_dim; }
};

// Parameter index bundles.  Indices refer to Model::params; Bound maps them to
// tape ids for one forward/backward pass.
struct GruLayer {
    int wxz, whz, bz, wxr, whr, br, wxh, whh, bh;
};
struct AttnHead {
    int wq, wk, wv;
};
struct AttnLayer {
    std::vector<AttnHead> heads;
    int wo, bo, ln1_g, ln1_b, wf1, bf1, wf2, bf2, ln2_g, ln2_b;
};
struct HeadMlp {
    int w1, b1, w2, b2;
};

struct Model;

struct Bound {
    Tape* tape = nullptr;
    std::vector<Tape::Id> ids;  // parallel to Model::params
    Tape::Id operator[](int param_index) const { return ids[param_index]; }
};

// Per-batch input panel: equal-length sequences, one entry per unit.
struct BatchInputs {
    std::vector<Tensor> cov;      // (T x cov_dim), standardized (and possibly masked)
    std::vector<Tensor> prev_tr;  // (T x treat_dim)
    std::vector<Tensor> cur_tr;   // (T x treat_onehot)
    std::vector<Tensor> target;   // (T x 1), standardized next-step outcomes
    int units() const { return static_cast<int>(cov.size()); }
    int horizon() const { return cov.empty() ? 0 : cov[0].rows(); }
};

struct EncodeResult {
    // Exactly one layout is populated, matching the encoder variant.
    std::vector<Tape::Id> step_reps;         // Recurrent: [T], each (B x hidden)
    std::vector<Tape::Id> unit_reps;         // Attention: [B], each (T x hidden)
    std::vector<Tensor> final_attention;     // Attention: [B], head-averaged (T x T)
    bool step_major() const { return !step_reps.empty(); }
};

struct Model {
    ModelConfig cfg;
    std::vector<std::string> names;
    std::vector<Tensor> params;

    std::vector<GruLayer> gru_layers;
    int in_w = -1, in_b = -1;  // attention input projection
    std::vector<AttnLayer> attn_layers;
    HeadMlp head{};

    static Model init(const ModelConfig& cfg, std::uint64_t seed);

    Bound bind(Tape& tape) const;
    std::size_t n_params() const;

    // Runs the encoder causally over the batch.  Train mode applies inverted
    // dropout driven by dropout_rng; eval mode is deterministic.
    EncodeResult encode(Tape& tape, const Bound& b, const BatchInputs& in, Mode mode,
                        Rng* dropout_rng) const;

    // (n x hidden) reps + (n x treat_onehot) one-hots -> (n x 1) predictions.
    Tape::Id predict(Tape& tape, const Bound& b, Tape::Id reps, const Tensor& onehot, Mode mode,
                     Rng* dropout_rng) const;

    // Representation matrix (B x hidden) for one timestep.
    Tape::Id rep_at(Tape& tape, const EncodeResult& enc, int t, int units) const;

    // Predictions for the whole batch, (B*T x 1); ordering matches
    // flatten_targets() for the same variant.
    Tape::Id predict_all(Tape& tape, const Bound& b, const EncodeResult& enc,
                         const BatchInputs& in, Mode mode, Rng* dropout_rng) const;
    Tensor flatten_targets(const BatchInputs& in) const;

private:
    Tape::Id t_add_in(Tape& tape, const Bound& b, Tape::Id x) const;
};

// Standalone cell/block ops (also used by the encoder internals).
Tape::Id gru_cell(Tape& t, Tape::Id x, Tape::Id h_prev, const Bound& b, const GruLayer& w);

struct AttnBlockOut {
    Tape::Id out;
    std::vector<Tape::Id> head_attention;  // softmax nodes, one per head
};
AttnBlockOut attention_block(Tape& t, Tape::Id seq, const Bound& b, const AttnLayer& w,
                             const Tensor& causal_mask, double dropout, Rng* rng);

// Strictly causal additive mask: 0 on j <= i, -inf above the diagonal.
Tensor causal_mask(int n);
Tensor sinusoidal_positions(int n, int dim);
Tensor dropout_mask(const std::vector<int>& shape, double rate, Rng& rng);

}  // namespace cfts::nn
