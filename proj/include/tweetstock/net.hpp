#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tweetstock/binio.hpp"
#include "tweetstock/embed.hpp"
#include "tweetstock/error.hpp"
#include "tweetstock/matrix.hpp"
#include "tweetstock/rng.hpp"
#include "tweetstock/textprep.hpp"

namespace tweetstock {

inline constexpr double kLossEpsilon = 1e-12;

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

enum class Direction { uni, bi };

inline Direction parse_direction(std::string_view name) {
    if (name == "uni") return Direction::uni;
    if (name == "bi") return Direction::bi;
    throw DataError("unknown direction: " + std::string(name));
}

inline const char* direction_name(Direction d) {
    return d == Direction::uni ? "uni" : "bi";
}

struct NetConfig {
    int hidden_units = 100;
    double dropout_rate = 0.2;
    Direction direction = Direction::uni;
    int num_layers = 1;
    std::uint64_t seed = 0;
    bool forget_bias_one = false;

    void validate() const {
        if (hidden_units < 1)
            throw DataError("hidden units must be >= 1, got " + std::to_string(hidden_units));
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
            throw DataError("dropout rate must lie in [0, 1), got " + std::to_string(dropout_rate));
        if (num_layers != 1 && num_layers != 2)
            throw DataError("layer count must be 1 or 2, got " + std::to_string(num_layers));
    }
};

/// One recurrent cell's weights. W has shape (4h) x (in + h); its row
/// blocks are the input, forget, output, and candidate gates in that
/// order, and each row consumes the concatenation [x_k; h_{k-1}].
struct LstmParams {
    Matrix W;
    Vector b; // 4h, same block order
};

struct CellState {
    Vector c;
    Vector h;
};

struct DenseParams {
    Vector w;
    double b = 0.0;
};

/// Weights for one layer; `bwd` drives the right-to-left scan and is
/// empty in unidirectional configurations.
struct LayerParams {
    LstmParams fwd;
    LstmParams bwd;
};

namespace detail {

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace detail

/// One recurrence step: gate activations from W·[x; h_prev] + b, then
/// c = f⊙c_prev + i⊙g and h = o⊙tanh(c).
inline CellState cell_step(std::span<const double> x, const CellState& prev,
                           const LstmParams& params) {
    const std::size_t h = prev.h.size();
    if (params.b.size() != 4 * h || prev.c.size() != h || params.W.rows() != 4 * h ||
        params.W.cols() != x.size() + h)
        throw DataError("cell step dimension mismatch: W is " + std::to_string(params.W.rows()) +
                        "x" + std::to_string(params.W.cols()) + " for input " +
                        std::to_string(x.size()) + " and hidden " + std::to_string(h));
    if (!detail::all_finite(x) || !detail::all_finite(prev.c) || !detail::all_finite(prev.h))
        throw NumericError("non-finite input to cell step");

    Vector z(x.size() + h);
    std::copy(x.begin(), x.end(), z.begin());
    std::copy(prev.h.begin(), prev.h.end(), z.begin() + static_cast<std::ptrdiff_t>(x.size()));
    Vector a(4 * h);
    matvec(params.W, z, a);

    CellState out;
    out.c.resize(h);
    out.h.resize(h);
    for (std::size_t j = 0; j < h; ++j) {
        const double iv = sigmoid(a[j] + params.b[j]);
        const double fv = sigmoid(a[h + j] + params.b[h + j]);
        const double ov = sigmoid(a[2 * h + j] + params.b[2 * h + j]);
        const double gv = std::tanh(a[3 * h + j] + params.b[3 * h + j]);
        out.c[j] = fv * prev.c[j] + iv * gv;
        out.h[j] = ov * std::tanh(out.c[j]);
    }
    return out;
}

namespace detail {

/// Gate activations and states for every step of one scan, indexed by
/// time step regardless of scan direction.
struct ScanCache {
    std::vector<Vector> i, f, o, g, c, tanh_c, h;

    void resize(std::size_t steps, std::size_t hidden) {
        for (auto* arr : {&i, &f, &o, &g, &c, &tanh_c, &h})
            arr->assign(steps, Vector(hidden, 0.0));
    }
};

inline void run_scan(const std::vector<Vector>& inputs, const LstmParams& params, bool reverse,
                     ScanCache& cache) {
    const std::size_t steps = inputs.size();
    const std::size_t h = params.b.size() / 4;
    if (params.b.size() != 4 * h || h == 0 || params.W.rows() != 4 * h ||
        params.W.cols() != inputs.front().size() + h)
        throw DataError("scan dimension mismatch: W is " + std::to_string(params.W.rows()) + "x" +
                        std::to_string(params.W.cols()) + " for input " +
                        std::to_string(inputs.front().size()));
    const std::size_t in_dim = params.W.cols() - h;
    cache.resize(steps, h);

    Vector z(in_dim + h, 0.0);
    Vector a(4 * h, 0.0);
    const Vector zero(h, 0.0);
    for (std::size_t m = 0; m < steps; ++m) {
        const std::size_t k = reverse ? steps - 1 - m : m;
        const Vector& hp = m == 0 ? zero : cache.h[reverse ? k + 1 : k - 1];
        const Vector& cp = m == 0 ? zero : cache.c[reverse ? k + 1 : k - 1];
        std::copy(inputs[k].begin(), inputs[k].end(), z.begin());
        std::copy(hp.begin(), hp.end(), z.begin() + static_cast<std::ptrdiff_t>(in_dim));
        matvec(params.W, z, a);
        for (std::size_t j = 0; j < h; ++j) {
            const double iv = sigmoid(a[j] + params.b[j]);
            const double fv = sigmoid(a[h + j] + params.b[h + j]);
            const double ov = sigmoid(a[2 * h + j] + params.b[2 * h + j]);
            const double gv = std::tanh(a[3 * h + j] + params.b[3 * h + j]);
            const double cv = fv * cp[j] + iv * gv;
            cache.i[k][j] = iv;
            cache.f[k][j] = fv;
            cache.o[k][j] = ov;
            cache.g[k][j] = gv;
            cache.c[k][j] = cv;
            cache.tanh_c[k][j] = std::tanh(cv);
            cache.h[k][j] = ov * cache.tanh_c[k][j];
        }
    }
}

/// Exact reverse-mode pass through one scan. d_h_ext[k] is the gradient
/// arriving at the step-k output from the layers above; weight and bias
/// gradients accumulate into d_w/d_b and input gradients into d_inputs.
inline void backprop_scan(const std::vector<Vector>& inputs, const ScanCache& cache,
                          const LstmParams& params, bool reverse,
                          const std::vector<Vector>& d_h_ext, Matrix& d_w, Vector& d_b,
                          std::vector<Vector>& d_inputs) {
    const std::size_t steps = inputs.size();
    const std::size_t h = params.b.size() / 4;
    const std::size_t in_dim = params.W.cols() - h;

    Vector dh(h), dc(h), da(4 * h);
    Vector dh_carry(h, 0.0), dc_carry(h, 0.0);
    Vector z(in_dim + h), dz(in_dim + h);
    const Vector zero(h, 0.0);

    for (std::size_t m = steps; m-- > 0;) {
        const std::size_t k = reverse ? steps - 1 - m : m;
        const Vector& hp = m == 0 ? zero : cache.h[reverse ? k + 1 : k - 1];
        const Vector& cp = m == 0 ? zero : cache.c[reverse ? k + 1 : k - 1];

        for (std::size_t j = 0; j < h; ++j) {
            dh[j] = d_h_ext[k][j] + dh_carry[j];
            const double t = cache.tanh_c[k][j];
            dc[j] = dc_carry[j] + dh[j] * cache.o[k][j] * (1.0 - t * t);

            const double iv = cache.i[k][j];
            const double fv = cache.f[k][j];
            const double ov = cache.o[k][j];
            const double gv = cache.g[k][j];
            da[j] = dc[j] * gv * iv * (1.0 - iv);
            da[h + j] = dc[j] * cp[j] * fv * (1.0 - fv);
            da[2 * h + j] = dh[j] * t * ov * (1.0 - ov);
            da[3 * h + j] = dc[j] * iv * (1.0 - gv * gv);
            dc_carry[j] = dc[j] * fv;
        }

        std::copy(inputs[k].begin(), inputs[k].end(), z.begin());
        std::copy(hp.begin(), hp.end(), z.begin() + static_cast<std::ptrdiff_t>(in_dim));
        outer_add(d_w, da, z);
        for (std::size_t r = 0; r < 4 * h; ++r) d_b[r] += da[r];

        std::fill(dz.begin(), dz.end(), 0.0);
        matvec_transpose_add(params.W, da, dz);
        for (std::size_t j = 0; j < in_dim; ++j) d_inputs[k][j] += dz[j];
        std::copy(dz.begin() + static_cast<std::ptrdiff_t>(in_dim), dz.end(), dh_carry.begin());
    }
}

} // namespace detail

/// One layer's per-step outputs: the left-to-right scan's hidden states,
/// concatenated with the right-to-left scan's when bidirectional (2h wide).
inline std::vector<Vector> layer_forward(const std::vector<Vector>& inputs, int hidden_units,
                                         Direction direction, const LayerParams& params) {
    if (inputs.empty()) throw DataError("layer forward needs a non-empty sequence");
    const std::size_t h = static_cast<std::size_t>(hidden_units);

    detail::ScanCache fwd;
    detail::run_scan(inputs, params.fwd, false, fwd);

    std::vector<Vector> out(inputs.size());
    if (direction == Direction::uni) {
        for (std::size_t k = 0; k < inputs.size(); ++k) out[k] = fwd.h[k];
        return out;
    }

    detail::ScanCache bwd;
    detail::run_scan(inputs, params.bwd, true, bwd);
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        out[k].resize(2 * h);
        std::copy(fwd.h[k].begin(), fwd.h[k].end(), out[k].begin());
        std::copy(bwd.h[k].begin(), bwd.h[k].end(), out[k].begin() + static_cast<std::ptrdiff_t>(h));
    }
    return out;
}

// --- dropout ----------------------------------------------------------------

enum class RunMode { train, infer };

inline void check_dropout_rate(double rate) {
    if (!(rate >= 0.0 && rate < 1.0))
        throw DataError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
}

/// Multiplier vector for inverted dropout: dropped entries are 0 and
/// survivors 1/(1-rate), so the expectation matches inference.
inline Vector dropout_mask(std::size_t size, double rate, Rng& rng) {
    check_dropout_rate(rate);
    Vector mask(size, 1.0);
    if (rate == 0.0) return mask;
    const double keep_scale = 1.0 / (1.0 - rate);
    for (double& m : mask) m = rng.uniform01() < rate ? 0.0 : keep_scale;
    return mask;
}

inline Vector dropout_apply(const Vector& v, double rate, RunMode mode, Rng& rng) {
    check_dropout_rate(rate);
    if (mode == RunMode::infer || rate == 0.0) return v;
    const Vector mask = dropout_mask(v.size(), rate, rng);
    Vector out(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) out[j] = v[j] * mask[j];
    return out;
}

/// Pre-drawn per-layer, per-step output masks for one sample, so the
/// backward pass (and external gradient checks) reuse the exact masks the
/// forward pass applied.
struct DropoutPlan {
    std::vector<std::vector<Vector>> masks; // [layer][step] multipliers
};

// --- model ------------------------------------------------------------------

struct Model {
    NetConfig config;
    EmbeddingMatrix embeddings;
    std::vector<LayerParams> layers;
    DenseParams dense;

    std::size_t output_width() const {
        return static_cast<std::size_t>(config.hidden_units) *
               (config.direction == Direction::bi ? 2 : 1);
    }
    std::size_t layer_input_dim(std::size_t layer) const {
        return layer == 0 ? embeddings.dim() : output_width();
    }
};

inline DropoutPlan make_dropout_plan(const Model& model, std::size_t steps, Rng& rng) {
    DropoutPlan plan;
    plan.masks.resize(static_cast<std::size_t>(model.config.num_layers));
    for (auto& layer_masks : plan.masks) {
        layer_masks.reserve(steps);
        for (std::size_t k = 0; k < steps; ++k)
            layer_masks.push_back(
                dropout_mask(model.output_width(), model.config.dropout_rate, rng));
    }
    return plan;
}

namespace detail {

inline Matrix glorot_matrix(std::size_t rows, std::size_t cols, std::size_t fan_in,
                            std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.uniform(-limit, limit);
    return m;
}

inline LstmParams init_lstm_params(std::size_t in_dim, std::size_t h, bool forget_bias_one,
                                   Rng& rng) {
    LstmParams p;
    p.W = glorot_matrix(4 * h, in_dim + h, in_dim + h, 4 * h, rng);
    p.b.assign(4 * h, 0.0);
    if (forget_bias_one)
        for (std::size_t j = h; j < 2 * h; ++j) p.b[j] = 1.0;
    return p;
}

} // namespace detail

inline Model init_model(const NetConfig& config, EmbeddingMatrix embeddings) {
    config.validate();
    Model model;
    model.config = config;
    model.embeddings = std::move(embeddings);

    const std::size_t h = static_cast<std::size_t>(config.hidden_units);
    for (int l = 0; l < config.num_layers; ++l) {
        const std::size_t in_dim = model.layer_input_dim(static_cast<std::size_t>(l));
        LayerParams lp;
        Rng fwd_rng(derive_seed(config.seed, "lstm-fwd", static_cast<std::uint64_t>(l)));
        lp.fwd = detail::init_lstm_params(in_dim, h, config.forget_bias_one, fwd_rng);
        if (config.direction == Direction::bi) {
            Rng bwd_rng(derive_seed(config.seed, "lstm-bwd", static_cast<std::uint64_t>(l)));
            lp.bwd = detail::init_lstm_params(in_dim, h, config.forget_bias_one, bwd_rng);
        }
        model.layers.push_back(std::move(lp));
    }

    Rng dense_rng(derive_seed(config.seed, "dense"));
    const std::size_t width = model.output_width();
    const double limit = std::sqrt(6.0 / static_cast<double>(width + 1));
    model.dense.w.resize(width);
    for (double& v : model.dense.w) v = dense_rng.uniform(-limit, limit);
    model.dense.b = 0.0;
    return model;
}

// --- output node and loss -----------------------------------------------------

inline double output_node(std::span<const double> h_final, const DenseParams& params) {
    if (h_final.size() != params.w.size())
        throw DataError("output node dimension mismatch: " + std::to_string(h_final.size()) +
                        " vs " + std::to_string(params.w.size()));
    return sigmoid(dot(params.w, h_final) + params.b);
}

/// Threshold rule: probability >= 0.5 is class 1.
inline int classify(double probability) { return probability >= 0.5 ? 1 : 0; }

inline double bce_loss(std::span<const double> probs, std::span<const int> labels) {
    if (probs.size() != labels.size())
        throw DataError("loss inputs differ in length: " + std::to_string(probs.size()) + " vs " +
                        std::to_string(labels.size()));
    if (probs.empty()) throw DataError("loss needs at least one sample");
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = std::clamp(probs[i], kLossEpsilon, 1.0 - kLossEpsilon);
        sum -= labels[i] == 1 ? std::log(p) : std::log1p(-p);
    }
    return sum / static_cast<double>(probs.size());
}

// --- forward / backward --------------------------------------------------------

/// Everything the backward pass needs from one sample's forward pass.
struct ForwardCache {
    std::vector<std::vector<Vector>> inputs;  // [layer][step] layer inputs
    std::vector<detail::ScanCache> fwd, bwd;  // per-layer scans
    std::vector<std::vector<Vector>> dropped; // [layer][step] masked outputs
    const DropoutPlan* plan = nullptr;        // masks used, null in inference
    Vector head;
    double z = 0.0;
    double prob = 0.0;
};

/// Runs the full network on one padded sequence. With a dropout plan the
/// plan's masks scale each layer's per-step outputs (training mode);
/// without one the pass is deterministic inference.
inline void forward_sample(const Model& model, const std::vector<int>& indices,
                           const DropoutPlan* plan, ForwardCache& cache) {
    if (indices.empty()) throw DataError("forward pass needs a non-empty sequence");
    const std::size_t steps = indices.size();
    const std::size_t layers = model.layers.size();
    const std::size_t h = static_cast<std::size_t>(model.config.hidden_units);
    const std::size_t width = model.output_width();
    if (plan && plan->masks.size() != layers)
        throw DataError("dropout plan layer count mismatch");

    cache.inputs.assign(layers, {});
    cache.fwd.assign(layers, {});
    cache.bwd.assign(layers, {});
    cache.dropped.assign(layers, {});
    cache.plan = plan;

    cache.inputs[0] = lookup(indices, model.embeddings);
    for (std::size_t l = 0; l < layers; ++l) {
        const LayerParams& params = model.layers[l];
        detail::run_scan(cache.inputs[l], params.fwd, false, cache.fwd[l]);
        if (model.config.direction == Direction::bi)
            detail::run_scan(cache.inputs[l], params.bwd, true, cache.bwd[l]);

        auto& dropped = cache.dropped[l];
        dropped.assign(steps, Vector(width, 0.0));
        for (std::size_t k = 0; k < steps; ++k) {
            std::copy(cache.fwd[l].h[k].begin(), cache.fwd[l].h[k].end(), dropped[k].begin());
            if (model.config.direction == Direction::bi)
                std::copy(cache.bwd[l].h[k].begin(), cache.bwd[l].h[k].end(),
                          dropped[k].begin() + static_cast<std::ptrdiff_t>(h));
            if (plan) {
                const Vector& mask = plan->masks[l][k];
                if (mask.size() != width) throw DataError("dropout mask width mismatch");
                for (std::size_t j = 0; j < width; ++j) dropped[k][j] *= mask[j];
            }
        }
        if (l + 1 < layers) cache.inputs[l + 1] = dropped;
    }

    // Each scan's final state: the left-to-right scan ends at the last
    // step, the right-to-left scan at the first.
    cache.head.assign(width, 0.0);
    const auto& top = cache.dropped[layers - 1];
    std::copy(top[steps - 1].begin(), top[steps - 1].begin() + static_cast<std::ptrdiff_t>(h),
              cache.head.begin());
    if (model.config.direction == Direction::bi)
        std::copy(top[0].begin() + static_cast<std::ptrdiff_t>(h), top[0].end(),
                  cache.head.begin() + static_cast<std::ptrdiff_t>(h));

    cache.z = dot(model.dense.w, cache.head) + model.dense.b;
    cache.prob = sigmoid(cache.z);
}

inline double predict(const Model& model, const std::vector<int>& indices) {
    ForwardCache cache;
    forward_sample(model, indices, nullptr, cache);
    return cache.prob;
}

struct LayerGrads {
    Matrix fwd_w;
    Vector fwd_b;
    Matrix bwd_w;
    Vector bwd_b;
};

struct ModelGrads {
    Matrix embedding;
    std::vector<LayerGrads> layers;
    Vector dense_w;
    double dense_b = 0.0;
};

inline ModelGrads make_grads_like(const Model& model) {
    ModelGrads g;
    g.embedding = Matrix(model.embeddings.values.rows(), model.embeddings.values.cols());
    for (const LayerParams& lp : model.layers) {
        LayerGrads lg;
        lg.fwd_w = Matrix(lp.fwd.W.rows(), lp.fwd.W.cols());
        lg.fwd_b.assign(lp.fwd.b.size(), 0.0);
        if (model.config.direction == Direction::bi) {
            lg.bwd_w = Matrix(lp.bwd.W.rows(), lp.bwd.W.cols());
            lg.bwd_b.assign(lp.bwd.b.size(), 0.0);
        }
        g.layers.push_back(std::move(lg));
    }
    g.dense_w.assign(model.dense.w.size(), 0.0);
    return g;
}

inline void scale_grads(ModelGrads& g, double s) {
    for (double& v : g.embedding.data()) v *= s;
    for (LayerGrads& lg : g.layers) {
        for (double& v : lg.fwd_w.data()) v *= s;
        for (double& v : lg.fwd_b) v *= s;
        for (double& v : lg.bwd_w.data()) v *= s;
        for (double& v : lg.bwd_b) v *= s;
    }
    for (double& v : g.dense_w) v *= s;
    g.dense_b *= s;
}

/// Accumulates one sample's exact loss gradients (unscaled; callers
/// average over the batch). Walks the dense head, then each layer's scans
/// in reverse, then the embedding rows.
inline void backward_sample(const Model& model, const ForwardCache& cache,
                            const std::vector<int>& indices, int label, ModelGrads& grads) {
    const std::size_t steps = indices.size();
    const std::size_t layers = model.layers.size();
    const std::size_t h = static_cast<std::size_t>(model.config.hidden_units);
    const std::size_t width = model.output_width();
    const bool bi = model.config.direction == Direction::bi;

    // d(loss)/dz collapses to prob - label; a clamped probability has zero
    // gradient, matching the clamped loss.
    const double y = static_cast<double>(label);
    double dz = 0.0;
    if (cache.prob > kLossEpsilon && cache.prob < 1.0 - kLossEpsilon) dz = cache.prob - y;

    axpy(dz, cache.head, grads.dense_w);
    grads.dense_b += dz;

    std::vector<Vector> d_dropped(steps, Vector(width, 0.0));
    for (std::size_t j = 0; j < h; ++j) d_dropped[steps - 1][j] = dz * model.dense.w[j];
    if (bi)
        for (std::size_t j = h; j < width; ++j) d_dropped[0][j] = dz * model.dense.w[j];

    std::vector<Vector> d_fwd(steps, Vector(h, 0.0));
    std::vector<Vector> d_bwd;
    if (bi) d_bwd.assign(steps, Vector(h, 0.0));

    for (std::size_t l = layers; l-- > 0;) {
        for (std::size_t k = 0; k < steps; ++k) {
            if (cache.plan) {
                const Vector& mask = cache.plan->masks[l][k];
                for (std::size_t j = 0; j < width; ++j) d_dropped[k][j] *= mask[j];
            }
            std::copy(d_dropped[k].begin(), d_dropped[k].begin() + static_cast<std::ptrdiff_t>(h),
                      d_fwd[k].begin());
            if (bi)
                std::copy(d_dropped[k].begin() + static_cast<std::ptrdiff_t>(h),
                          d_dropped[k].end(), d_bwd[k].begin());
        }

        const std::size_t in_dim = model.layer_input_dim(l);
        std::vector<Vector> d_inputs(steps, Vector(in_dim, 0.0));
        detail::backprop_scan(cache.inputs[l], cache.fwd[l], model.layers[l].fwd, false, d_fwd,
                              grads.layers[l].fwd_w, grads.layers[l].fwd_b, d_inputs);
        if (bi)
            detail::backprop_scan(cache.inputs[l], cache.bwd[l], model.layers[l].bwd, true, d_bwd,
                                  grads.layers[l].bwd_w, grads.layers[l].bwd_b, d_inputs);

        if (l == 0) {
            accumulate_embedding_grads(indices, d_inputs, grads.embedding);
        } else {
            d_dropped = std::move(d_inputs);
        }
    }
}

struct BatchResult {
    double loss = 0.0;
    ModelGrads grads;
};

/// Forward and backward over a batch; loss and gradients are averaged.
/// `plans` supplies one dropout plan per sample (null for no dropout).
inline BatchResult batch_gradients(const Model& model,
                                   std::span<const LabeledSequence* const> batch,
                                   const std::vector<DropoutPlan>* plans) {
    if (batch.empty()) throw DataError("gradient batch is empty");
    if (plans && plans->size() != batch.size())
        throw DataError("need one dropout plan per batch sample");

    BatchResult result;
    result.grads = make_grads_like(model);
    ForwardCache cache;
    double loss_sum = 0.0;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        const LabeledSequence& seq = *batch[s];
        forward_sample(model, seq.indices, plans ? &(*plans)[s] : nullptr, cache);
        const double p = std::clamp(cache.prob, kLossEpsilon, 1.0 - kLossEpsilon);
        loss_sum -= seq.label == 1 ? std::log(p) : std::log1p(-p);
        backward_sample(model, cache, seq.indices, seq.label, result.grads);
    }
    const double inv_m = 1.0 / static_cast<double>(batch.size());
    result.loss = loss_sum * inv_m;
    scale_grads(result.grads, inv_m);
    return result;
}

// --- SGD ------------------------------------------------------------------------

namespace detail {

inline bool grads_finite(const ModelGrads& g) {
    if (!all_finite(g.embedding.data())) return false;
    for (const LayerGrads& lg : g.layers)
        if (!all_finite(lg.fwd_w.data()) || !all_finite(lg.fwd_b) ||
            !all_finite(lg.bwd_w.data()) || !all_finite(lg.bwd_b))
            return false;
    return all_finite(g.dense_w) && std::isfinite(g.dense_b);
}

} // namespace detail

/// In-place theta -= lr * grad on every trainable tensor. The padding
/// embedding row is never touched; a non-finite gradient aborts before
/// any tensor is modified.
inline void sgd_step(Model& model, const ModelGrads& grads, double learning_rate) {
    if (!(learning_rate > 0.0))
        throw DataError("learning rate must be positive, got " + std::to_string(learning_rate));
    if (!detail::grads_finite(grads)) throw NumericError("non-finite gradient; step aborted");

    if (model.embeddings.trainable) {
        for (std::size_t r = 1; r < model.embeddings.values.rows(); ++r)
            axpy(-learning_rate, grads.embedding.row(r), model.embeddings.values.row(r));
    }
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        axpy(-learning_rate, grads.layers[l].fwd_w.data(), model.layers[l].fwd.W.data());
        axpy(-learning_rate, grads.layers[l].fwd_b, model.layers[l].fwd.b);
        if (model.config.direction == Direction::bi) {
            axpy(-learning_rate, grads.layers[l].bwd_w.data(), model.layers[l].bwd.W.data());
            axpy(-learning_rate, grads.layers[l].bwd_b, model.layers[l].bwd.b);
        }
    }
    axpy(-learning_rate, grads.dense_w, model.dense.w);
    model.dense.b -= learning_rate * grads.dense_b;
}

// --- checkpoint ---------------------------------------------------------------

/// Binary layout: u64 header {embedding dim p, hidden units h, direction
/// (0 uni / 1 bi), layer count, vocabulary size V}, then the tensors in
/// fixed order: embedding rows 1..V, per layer the forward W and b then
/// (bidirectional only) the backward W and b, then dense w and b. A JSON
/// sidecar at <path>.json records config and seed.
inline void save_model(const std::filesystem::path& path, const Model& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model checkpoint: " + path.string());
    detail::write_u64(out, model.embeddings.dim());
    detail::write_u64(out, static_cast<std::uint64_t>(model.config.hidden_units));
    detail::write_u64(out, model.config.direction == Direction::bi ? 1 : 0);
    detail::write_u64(out, static_cast<std::uint64_t>(model.config.num_layers));
    detail::write_u64(out, model.embeddings.vocab_size());

    for (std::size_t r = 1; r <= model.embeddings.vocab_size(); ++r)
        detail::write_f64_span(out, model.embeddings.values.row(r));
    for (const LayerParams& lp : model.layers) {
        detail::write_f64_span(out, lp.fwd.W.data());
        detail::write_f64_span(out, lp.fwd.b);
        if (model.config.direction == Direction::bi) {
            detail::write_f64_span(out, lp.bwd.W.data());
            detail::write_f64_span(out, lp.bwd.b);
        }
    }
    detail::write_f64_span(out, model.dense.w);
    detail::write_f64(out, model.dense.b);
    if (!out) throw IoError("failed writing model checkpoint: " + path.string());

    nlohmann::ordered_json sidecar;
    sidecar["hidden_units"] = model.config.hidden_units;
    sidecar["dropout_rate"] = model.config.dropout_rate;
    sidecar["direction"] = direction_name(model.config.direction);
    sidecar["num_layers"] = model.config.num_layers;
    sidecar["seed"] = model.config.seed;
    sidecar["forget_bias_one"] = model.config.forget_bias_one;
    sidecar["embedding_dim"] = model.embeddings.dim();
    sidecar["vocab_size"] = model.embeddings.vocab_size();
    std::ofstream side(path.string() + ".json", std::ios::binary);
    if (!side) throw IoError("cannot write checkpoint sidecar: " + path.string() + ".json");
    side << sidecar.dump(2) << '\n';
}

inline Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model checkpoint: " + path.string());

    const std::uint64_t p = detail::read_u64(in, "embedding dim");
    const std::uint64_t h = detail::read_u64(in, "hidden units");
    const std::uint64_t dir = detail::read_u64(in, "direction");
    const std::uint64_t layers = detail::read_u64(in, "layer count");
    const std::uint64_t v = detail::read_u64(in, "vocabulary size");
    if (p < 1 || h < 1 || dir > 1 || (layers != 1 && layers != 2))
        throw DataError("model checkpoint header is invalid: " + path.string());

    Model model;
    model.config.hidden_units = static_cast<int>(h);
    model.config.direction = dir == 1 ? Direction::bi : Direction::uni;
    model.config.num_layers = static_cast<int>(layers);
    model.config.dropout_rate = 0.0;

    const std::filesystem::path sidecar_path = path.string() + ".json";
    if (std::filesystem::exists(sidecar_path)) {
        std::ifstream side(sidecar_path, std::ios::binary);
        auto sidecar = nlohmann::ordered_json::parse(side, nullptr, false);
        if (!sidecar.is_discarded()) {
            model.config.dropout_rate = sidecar.value("dropout_rate", 0.0);
            model.config.seed = sidecar.value("seed", std::uint64_t{0});
            model.config.forget_bias_one = sidecar.value("forget_bias_one", false);
        }
    }

    model.embeddings.values = Matrix(static_cast<std::size_t>(v) + 1, static_cast<std::size_t>(p));
    for (std::size_t r = 1; r <= v; ++r)
        detail::read_f64_span(in, model.embeddings.values.row(r), "embedding row");

    const std::size_t hs = static_cast<std::size_t>(h);
    for (std::uint64_t l = 0; l < layers; ++l) {
        const std::size_t in_dim =
            l == 0 ? static_cast<std::size_t>(p)
                   : hs * (model.config.direction == Direction::bi ? 2 : 1);
        LayerParams lp;
        lp.fwd.W = Matrix(4 * hs, in_dim + hs);
        detail::read_f64_span(in, lp.fwd.W.data(), "layer weights");
        lp.fwd.b.resize(4 * hs);
        detail::read_f64_span(in, lp.fwd.b, "layer biases");
        if (model.config.direction == Direction::bi) {
            lp.bwd.W = Matrix(4 * hs, in_dim + hs);
            detail::read_f64_span(in, lp.bwd.W.data(), "layer weights");
            lp.bwd.b.resize(4 * hs);
            detail::read_f64_span(in, lp.bwd.b, "layer biases");
        }
        model.layers.push_back(std::move(lp));
    }

    const std::size_t width = hs * (model.config.direction == Direction::bi ? 2 : 1);
    model.dense.w.resize(width);
    detail::read_f64_span(in, model.dense.w, "dense weights");
    model.dense.b = detail::read_f64(in, "dense bias");
    if (in.peek() != std::char_traits<char>::eof())
        throw DataError("model checkpoint has trailing bytes: " + path.string());
    return model;
}

} // namespace tweetstock
