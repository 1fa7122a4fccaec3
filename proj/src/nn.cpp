#include "cfts/nn.hpp"

#include <cmath>
#include <limits>

namespace cfts::nn {

namespace {

Tensor glorot(int rows, int cols, Rng& rng) {
    Tensor w({rows, cols});
    const double s = std::sqrt(6.0 / (rows + cols));
    for (double& v : w.data) v = rng.uniform(-s, s);
    return w;
}

}  // namespace

Tensor causal_mask(int n) {
    Tensor m({n, n});
    const double ninf = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) m.at(i, j) = ninf;
    return m;
}

Tensor sinusoidal_positions(int n, int dim) {
    Tensor p({n, dim});
    for (int t = 0; t < n; ++t) {
        for (int j = 0; j < dim; ++j) {
            const double rate = std::pow(10000.0, -2.0 * (j / 2) / dim);
            p.at(t, j) = (j % 2 == 0) ? std::sin(t * rate) : std::cos(t * rate);
        }
    }
    return p;
}

Tensor dropout_mask(const std::vector<int>& shape, double rate, Rng& rng) {
    Tensor m(shape, 1.0);
    if (rate <= 0.0) return m;
    const double keep = 1.0 - rate;
    for (double& v : m.data) v = rng.bernoulli(rate) ? 0.0 : 1.0 / keep;
    return m;
}

std::size_t Model::n_params() const {
    std::size_t n = 0;
    for (const auto& p : params) n += p.numel();
    return n;
}

Model Model::init(const ModelConfig& cfg, std::uint64_t seed) {
    Model m;
    m.cfg = cfg;
    if (cfg.hidden <= 0 || cfg.layers <= 0) throw ConfigError("encoder width/depth must be positive");
    if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) throw ConfigError("dropout_rate must be in [0,1)");
    Rng rng = Rng::stream(seed, {0x6d6f64656cULL});
    auto add = [&m](const std::string& name, Tensor t) {
        m.names.push_back(name);
        m.params.push_back(std::move(t));
        return static_cast<int>(m.params.size()) - 1;
    };
    const int H = cfg.hidden;
    if (cfg.encoder == EncoderKind::Recurrent) {
        for (int l = 0; l < cfg.layers; ++l) {
            const int in = l == 0 ? cfg.input_dim() : H;
            const std::string p = "gru" + std::to_string(l) + ".";
            GruLayer g;
            g.wxz = add(p + "wxz", glorot(in, H, rng));
            g.whz = add(p + "whz", glorot(H, H, rng));
            g.bz = add(p + "bz", Tensor({1, H}));
            g.wxr = add(p + "wxr", glorot(in, H, rng));
            g.whr = add(p + "whr", glorot(H, H, rng));
            g.br = add(p + "br", Tensor({1, H}));
            g.wxh = add(p + "wxh", glorot(in, H, rng));
            g.whh = add(p + "whh", glorot(H, H, rng));
            g.bh = add(p + "bh", Tensor({1, H}));
            m.gru_layers.push_back(g);
        }
    } else {
        if (H % cfg.heads != 0) throw ConfigError("hidden width must divide by head count");
        const int dh = H / cfg.heads;
        m.in_w = add("in.w", glorot(cfg.input_dim(), H, rng));
        m.in_b = add("in.b", Tensor({1, H}));
        for (int l = 0; l < cfg.layers; ++l) {
            const std::string p = "attn" + std::to_string(l) + ".";
            AttnLayer a;
            for (int h = 0; h < cfg.heads; ++h) {
                const std::string q = p + "h" + std::to_string(h) + ".";
                AttnHead ah;
                ah.wq = add(q + "wq", glorot(H, dh, rng));
                ah.wk = add(q + "wk", glorot(H, dh, rng));
                ah.wv = add(q + "wv", glorot(H, dh, rng));
                a.heads.push_back(ah);
            }
            a.wo = add(p + "wo", glorot(H, H, rng));
            a.bo = add(p + "bo", Tensor({1, H}));
            a.ln1_g = add(p + "ln1.g", Tensor({1, H}, 1.0));
            a.ln1_b = add(p + "ln1.b", Tensor({1, H}));
            a.wf1 = add(p + "wf1", glorot(H, 2 * H, rng));
            a.bf1 = add(p + "bf1", Tensor({1, 2 * H}));
            a.wf2 = add(p + "wf2", glorot(2 * H, H, rng));
            a.bf2 = add(p + "bf2", Tensor({1, H}));
            a.ln2_g = add(p + "ln2.g", Tensor({1, H}, 1.0));
            a.ln2_b = add(p + "ln2.b", Tensor({1, H}));
            m.attn_layers.push_back(a);
        }
    }
    m.head.w1 = add("head.w1", glorot(H + cfg.treat_onehot, cfg.head_hidden, rng));
    m.head.b1 = add("head.b1", Tensor({1, cfg.head_hidden}));
    m.head.w2 = add("head.w2", glorot(cfg.head_hidden, 1, rng));
    m.head.b2 = add("head.b2", Tensor({1, 1}));
    return m;
}

Bound Model::bind(Tape& tape) const {
    Bound b;
    b.tape = &tape;
    b.ids.reserve(params.size());
    for (const auto& p : params) b.ids.push_back(tape.leaf(p));
    return b;
}

Tape::Id gru_cell(Tape& t, Tape::Id x, Tape::Id h_prev, const Bound& b, const GruLayer& w) {
    auto gate = [&](int wx, int wh, int bias) {
        return t.add_rowvec(t.add(t.matmul(x, b[wx]), t.matmul(h_prev, b[wh])), b[bias]);
    };
    Tape::Id z = t.sigmoid(gate(w.wxz, w.whz, w.bz));
    Tape::Id r = t.sigmoid(gate(w.wxr, w.whr, w.br));
    Tape::Id rh = t.mul(r, h_prev);
    Tape::Id cand =
        t.tanh_(t.add_rowvec(t.add(t.matmul(x, b[w.wxh]), t.matmul(rh, b[w.whh])), b[w.bh]));
    // h' = h + z * (cand - h)
    return t.add(h_prev, t.mul(z, t.sub(cand, h_prev)));
}

AttnBlockOut attention_block(Tape& t, Tape::Id seq, const Bound& b, const AttnLayer& w,
                             const Tensor& mask, double dropout, Rng* rng) {
    const int T = t.val(seq).rows();
    if (mask.rank() != 2 || mask.rows() != T || mask.cols() != T)
        throw ShapeError("attention_block: mask/sequence length mismatch");
    for (int i = 0; i < T; ++i)
        for (int j = i + 1; j < T; ++j)
            if (mask.at(i, j) == 0.0) throw ShapeError("attention_block: mask not causal");
    AttnBlockOut out;
    std::vector<Tape::Id> ctxs;
    for (const AttnHead& h : w.heads) {
        Tape::Id q = t.matmul(seq, b[h.wq]);
        Tape::Id k = t.matmul(seq, b[h.wk]);
        Tape::Id v = t.matmul(seq, b[h.wv]);
        const int dh = t.val(q).cols();
        Tape::Id scores = t.add_const(t.scale(t.matmul_nt(q, k), 1.0 / std::sqrt(double(dh))), mask);
        Tape::Id attn = t.softmax_rows(scores);
        out.head_attention.push_back(attn);
        ctxs.push_back(t.matmul(attn, v));
    }
    Tape::Id merged = t.add_rowvec(t.matmul(t.concat_cols(ctxs), b[w.wo]), b[w.bo]);
    if (dropout > 0.0 && rng)
        merged = t.mul_mask(merged, dropout_mask(t.val(merged).shape, dropout, *rng));
    Tape::Id z1 = t.layer_norm_rows(t.add(seq, merged), b[w.ln1_g], b[w.ln1_b]);
    Tape::Id f = t.add_rowvec(
        t.matmul(t.relu(t.add_rowvec(t.matmul(z1, b[w.wf1]), b[w.bf1])), b[w.wf2]), b[w.bf2]);
    if (dropout > 0.0 && rng) f = t.mul_mask(f, dropout_mask(t.val(f).shape, dropout, *rng));
    out.out = t.layer_norm_rows(t.add(z1, f), b[w.ln2_g], b[w.ln2_b]);
    return out;
}

EncodeResult Model::encode(Tape& tape, const Bound& b, const BatchInputs& in, Mode mode,
                           Rng* dropout_rng) const {
    const int B = in.units();
    const int T = in.horizon();
    if (B == 0 || T == 0) throw ShapeError("encode: empty batch");
    for (int u = 0; u < B; ++u) {
        if (in.cov[u].rows() != T || in.prev_tr[u].rows() != T)
            throw ShapeError("encode: sequence length mismatch");
        if (in.cov[u].cols() != cfg.cov_dim || in.prev_tr[u].cols() != cfg.treat_dim)
            throw ShapeError("encode: channel width mismatch");
    }
    const double drop = mode == Mode::Train ? cfg.dropout : 0.0;
    Rng* rng = mode == Mode::Train ? dropout_rng : nullptr;
    EncodeResult enc;
    if (cfg.encoder == EncoderKind::Recurrent) {
        // Batched step-major processing: x_t stacked over units.
        std::vector<Tape::Id> xs(T);
        for (int t = 0; t < T; ++t) {
            Tensor x({B, cfg.input_dim()});
            for (int u = 0; u < B; ++u) {
                for (int j = 0; j < cfg.cov_dim; ++j) x.at(u, j) = in.cov[u].at(t, j);
                for (int j = 0; j < cfg.treat_dim; ++j)
                    x.at(u, cfg.cov_dim + j) = in.prev_tr[u].at(t, j);
            }
            xs[t] = tape.constant(std::move(x));
        }
        std::vector<Tape::Id> seq = xs;
        for (std::size_t l = 0; l < gru_layers.size(); ++l) {
            Tape::Id h = tape.constant(Tensor({B, cfg.hidden}));
            for (int t = 0; t < T; ++t) {
                h = gru_cell(tape, seq[t], h, b, gru_layers[l]);
                if (drop > 0.0 && rng)
                    seq[t] = tape.mul_mask(h, dropout_mask({B, cfg.hidden}, drop, *rng));
                else
                    seq[t] = h;
                // Next step consumes the un-dropped state; dropout only feeds
                // the next layer / head.
            }
        }
        enc.step_reps = std::move(seq);
    } else {
        const Tensor mask = causal_mask(T);
        const Tensor pos = sinusoidal_positions(T, cfg.hidden);
        for (int u = 0; u < B; ++u) {
            Tensor x({T, cfg.input_dim()});
            for (int t = 0; t < T; ++t) {
                for (int j = 0; j < cfg.cov_dim; ++j) x.at(t, j) = in.cov[u].at(t, j);
                for (int j = 0; j < cfg.treat_dim; ++j)
                    x.at(t, cfg.cov_dim + j) = in.prev_tr[u].at(t, j);
            }
            Tape::Id z = tape.add_const(
                t_add_in(tape, b, tape.constant(std::move(x))), pos);
            std::vector<Tape::Id> last_attn;
            for (const AttnLayer& layer : attn_layers) {
                AttnBlockOut blk = attention_block(tape, z, b, layer, mask, drop, rng);
                z = blk.out;
                last_attn = blk.head_attention;
            }
            enc.unit_reps.push_back(z);
            // Head-averaged final-layer attention, exposed for audits.
            Tensor avg({T, T});
            for (Tape::Id aid : last_attn)
                for (std::size_t i = 0; i < avg.data.size(); ++i)
                    avg.data[i] += tape.val(aid).data[i] / last_attn.size();
            enc.final_attention.push_back(std::move(avg));
        }
    }
    return enc;
}

Tape::Id Model::t_add_in(Tape& tape, const Bound& b, Tape::Id x) const {
    return tape.add_rowvec(tape.matmul(x, b[in_w]), b[in_b]);
}

Tape::Id Model::predict(Tape& tape, const Bound& b, Tape::Id reps, const Tensor& onehot, Mode mode,
                        Rng* dropout_rng) const {
    if (onehot.rank() != 2 || onehot.rows() != tape.val(reps).rows() ||
        onehot.cols() != cfg.treat_onehot)
        throw ShapeError("predict: treatment encoding shape mismatch");
    const double drop = mode == Mode::Train ? cfg.dropout : 0.0;
    Tape::Id x = tape.concat_cols({reps, tape.constant(onehot)});
    Tape::Id h1 = tape.relu(tape.add_rowvec(tape.matmul(x, b[head.w1]), b[head.b1]));
    if (drop > 0.0 && dropout_rng)
        h1 = tape.mul_mask(h1, dropout_mask(tape.val(h1).shape, drop, *dropout_rng));
    return tape.add_rowvec(tape.matmul(h1, b[head.w2]), b[head.b2]);
}

Tape::Id Model::rep_at(Tape& tape, const EncodeResult& enc, int t, int units) const {
    if (enc.step_major()) return enc.step_reps.at(t);
    std::vector<Tape::Id> rows;
    rows.reserve(units);
    for (int u = 0; u < units; ++u) rows.push_back(tape.slice_rows(enc.unit_reps[u], t, t + 1));
    return tape.vstack(rows);
}

Tape::Id Model::predict_all(Tape& tape, const Bound& b, const EncodeResult& enc,
                            const BatchInputs& in, Mode mode, Rng* dropout_rng) const {
    const int B = in.units();
    const int T = in.horizon();
    std::vector<Tape::Id> parts;
    if (enc.step_major()) {
        for (int t = 0; t < T; ++t) {
            Tensor onehot({B, cfg.treat_onehot});
            for (int u = 0; u < B; ++u)
                for (int j = 0; j < cfg.treat_onehot; ++j) onehot.at(u, j) = in.cur_tr[u].at(t, j);
            parts.push_back(predict(tape, b, enc.step_reps[t], onehot, mode, dropout_rng));
        }
    } else {
        for (int u = 0; u < B; ++u)
            parts.push_back(predict(tape, b, enc.unit_reps[u], in.cur_tr[u], mode, dropout_rng));
    }
    return tape.vstack(parts);
}

Tensor Model::flatten_targets(const BatchInputs& in) const {
    const int B = in.units();
    const int T = in.horizon();
    Tensor out({B * T, 1});
    int r = 0;
    if (cfg.encoder == EncoderKind::Recurrent) {
        for (int t = 0; t < T; ++t)
            for (int u = 0; u < B; ++u) out.at(r++, 0) = in.target[u].at(t, 0);
    } else {
        for (int u = 0; u < B; ++u)
            for (int t = 0; t < T; ++t) out.at(r++, 0) = in.target[u].at(t, 0);
    }
    return out;
}

}  // namespace cfts::nn
