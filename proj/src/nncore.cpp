#include "snakesim/nncore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace snakesim::nncore {

// ---------------------------------------------------------------------------
// LayerGraph
// ---------------------------------------------------------------------------

std::vector<std::size_t> LayerGraph::dense_positions() const {
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].kind == LayerKind::Dense) pos.push_back(i);
    }
    return pos;
}

std::size_t LayerGraph::input_dim() const {
    for (const auto& l : layers) {
        if (l.kind == LayerKind::Dense) return l.in_dim;
    }
    return 0;
}

std::size_t LayerGraph::num_classes() const {
    std::size_t k = 0;
    for (const auto& l : layers) {
        if (l.kind == LayerKind::Dense) k = l.out_dim;
    }
    return k;
}

void LayerGraph::validate() const {
    if (layers.empty()) throw ConfigError("graph: no layers");
    if (layers.back().kind != LayerKind::SoftmaxXentHead) {
        throw ConfigError("graph: last layer must be the softmax cross-entropy head");
    }
    std::size_t dense_count = 0;
    std::size_t current_dim = 0;
    bool have_dim = false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        switch (l.kind) {
            case LayerKind::Dense:
                if (l.in_dim == 0 || l.out_dim == 0) throw ConfigError("graph: dense layer with zero dim");
                if (have_dim && l.in_dim != current_dim) {
                    throw ConfigError("graph: layer " + std::to_string(i) + " in_dim " +
                                      std::to_string(l.in_dim) + " does not match previous out_dim " +
                                      std::to_string(current_dim));
                }
                current_dim = l.out_dim;
                have_dim = true;
                ++dense_count;
                break;
            case LayerKind::Relu:
                break;
            case LayerKind::SoftmaxXentHead:
                if (i + 1 != layers.size()) throw ConfigError("graph: head must be last");
                break;
        }
    }
    if (dense_count < 3) {
        throw ConfigError("graph: need at least 3 parameterized layers (first, middle, last), got " +
                          std::to_string(dense_count));
    }
}

LayerGraph make_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden, std::size_t num_classes) {
    LayerGraph g;
    std::size_t d = input_dim;
    for (std::size_t h : hidden) {
        g.layers.push_back({LayerKind::Dense, d, h});
        g.layers.push_back({LayerKind::Relu, 0, 0});
        d = h;
    }
    g.layers.push_back({LayerKind::Dense, d, num_classes});
    g.layers.push_back({LayerKind::SoftmaxXentHead, 0, 0});
    return g;
}

// ---------------------------------------------------------------------------
// ParameterSet
// ---------------------------------------------------------------------------

std::size_t ParameterSet::num_params() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

std::size_t ParameterSet::num_updated_params() const {
    std::size_t n = 0;
    for (const auto& l : layers) {
        if (l.updated) n += l.weights.size() + l.bias.size();
    }
    return n;
}

std::vector<std::size_t> ParameterSet::updated_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].updated) idx.push_back(i);
    }
    return idx;
}

void ParameterSet::check_shapes(const LayerGraph& graph) const {
    const auto pos = graph.dense_positions();
    if (pos.size() != layers.size()) {
        throw DimensionError("params: " + std::to_string(layers.size()) + " layers for a graph with " +
                             std::to_string(pos.size()) + " dense layers");
    }
    for (std::size_t p = 0; p < pos.size(); ++p) {
        const auto& desc = graph.layers[pos[p]];
        require_shape(layers[p].weights, desc.out_dim, desc.in_dim, "params layer " + std::to_string(p));
        if (layers[p].bias.size() != desc.out_dim) {
            throw DimensionError("params layer " + std::to_string(p) + ": bias size " +
                                 std::to_string(layers[p].bias.size()) + " vs out_dim " +
                                 std::to_string(desc.out_dim));
        }
    }
}

ParameterSet init_params(const LayerGraph& graph, std::uint64_t seed) {
    // Deliberately does not call graph.validate(): tiny nets (fewer than 3
    // dense layers) are legal for nncore; the protocol layers enforce the
    // first/middle/last structure where it matters.
    ParameterSet params;
    std::size_t p = 0;
    for (std::size_t pos : graph.dense_positions()) {
        const auto& desc = graph.layers[pos];
        Rng rng(derive_seed(seed, 0x1000 + p));
        LayerParams lp;
        lp.weights = Matrix(desc.out_dim, desc.in_dim);
        const double limit = std::sqrt(6.0 / static_cast<double>(desc.in_dim));
        for (auto& w : lp.weights.data) w = rng.uniform(-limit, limit);
        lp.bias.assign(desc.out_dim, 0.0);
        params.layers.push_back(std::move(lp));
        ++p;
    }
    return params;
}

std::uint64_t hash_layer(const LayerParams& lp) {
    std::uint64_t h = hash_matrix(lp.weights);
    h = hash_doubles(lp.bias.data(), lp.bias.size(), h);
    return h;
}

std::uint64_t hash_params(const ParameterSet& params) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& lp : params.layers) {
        h = hash_matrix(lp.weights, h);
        h = hash_doubles(lp.bias.data(), lp.bias.size(), h);
    }
    return h;
}

OptimizerState init_optimizer(OptimizerAlgo algo, const ParameterSet& params) {
    OptimizerState st;
    st.algo = algo;
    if (algo == OptimizerAlgo::Adam) {
        for (std::size_t i = 0; i < params.layers.size(); ++i) {
            const auto& lp = params.layers[i];
            if (!lp.updated) continue;
            AdamMoments m;
            m.m_weights = Matrix(lp.weights.rows, lp.weights.cols);
            m.v_weights = Matrix(lp.weights.rows, lp.weights.cols);
            m.m_bias.assign(lp.bias.size(), 0.0);
            m.v_bias.assign(lp.bias.size(), 0.0);
            st.moments.emplace(i, std::move(m));
        }
    }
    return st;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

Matrix forward(const ParameterSet& params, const LayerGraph& graph, const Matrix& batch,
               ActivationCache* cache) {
    params.check_shapes(graph);
    if (batch.cols != graph.input_dim()) {
        throw DimensionError("forward: batch has " + std::to_string(batch.cols) +
                             " features, graph expects " + std::to_string(graph.input_dim()));
    }
    Matrix x = batch;
    if (cache) {
        cache->inputs.clear();
        cache->inputs.reserve(graph.layers.size());
    }
    std::size_t p = 0;
    for (const auto& desc : graph.layers) {
        if (cache) cache->inputs.push_back(x);
        switch (desc.kind) {
            case LayerKind::Dense: {
                const auto& lp = params.layers[p++];
                Matrix y = matmul_a_bt(x, lp.weights);
                for (std::size_t r = 0; r < y.rows; ++r) {
                    for (std::size_t c = 0; c < y.cols; ++c) y(r, c) += lp.bias[c];
                }
                x = std::move(y);
                break;
            }
            case LayerKind::Relu:
                for (auto& v : x.data) v = v > 0.0 ? v : 0.0;
                break;
            case LayerKind::SoftmaxXentHead:
                // Identity in the forward direction; the loss is computed
                // separately from the logits.
                break;
        }
    }
    if (cache) cache->logits = x;
    return x;
}

Matrix softmax(const Matrix& logits, double temperature) {
    Matrix p(logits.rows, logits.cols);
    for (std::size_t r = 0; r < logits.rows; ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < logits.cols; ++c) mx = std::max(mx, logits(r, c) / temperature);
        double sum = 0.0;
        for (std::size_t c = 0; c < logits.cols; ++c) {
            const double e = std::exp(logits(r, c) / temperature - mx);
            p(r, c) = e;
            sum += e;
        }
        for (std::size_t c = 0; c < logits.cols; ++c) p(r, c) /= sum;
    }
    return p;
}

double softmax_xent(const Matrix& logits, const std::vector<std::size_t>& labels, Matrix* d_logits) {
    if (labels.size() != logits.rows) {
        throw DimensionError("softmax_xent: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(logits.rows) + " rows");
    }
    for (std::size_t lbl : labels) {
        if (lbl >= logits.cols) {
            throw InputError("softmax_xent: label " + std::to_string(lbl) + " out of range for K=" +
                             std::to_string(logits.cols));
        }
    }
    const Matrix p = softmax(logits);
    const double inv_b = 1.0 / static_cast<double>(logits.rows);
    double loss = 0.0;
    for (std::size_t r = 0; r < logits.rows; ++r) {
        loss -= std::log(std::max(p(r, labels[r]), 1e-300));
    }
    loss *= inv_b;
    if (d_logits) {
        *d_logits = p;
        for (std::size_t r = 0; r < logits.rows; ++r) {
            (*d_logits)(r, labels[r]) -= 1.0;
        }
        for (auto& v : d_logits->data) v *= inv_b;
    }
    return loss;
}

GradientSet backward_from_logits(const ParameterSet& params, const LayerGraph& graph,
                                 const ActivationCache& cache, const Matrix& d_logits) {
    params.check_shapes(graph);
    if (cache.inputs.size() != graph.layers.size()) {
        throw DimensionError("backward: activation cache does not match graph");
    }
    const auto dense_pos = graph.dense_positions();
    // Index of the first dense layer whose weight gradient we need; gradients
    // do not have to flow below it.
    std::size_t lowest_updated = params.layers.size();
    for (std::size_t p = 0; p < params.layers.size(); ++p) {
        if (params.layers[p].updated) {
            lowest_updated = p;
            break;
        }
    }

    GradientSet grads;
    Matrix grad = d_logits;
    std::size_t p = params.layers.size();
    for (std::size_t i = graph.layers.size(); i-- > 0;) {
        const auto& desc = graph.layers[i];
        switch (desc.kind) {
            case LayerKind::SoftmaxXentHead:
                break;  // gradient already starts at the logits
            case LayerKind::Relu: {
                const Matrix& x = cache.inputs[i];
                if (!grad.same_shape(x)) throw DimensionError("backward: relu shape mismatch");
                for (std::size_t k = 0; k < grad.data.size(); ++k) {
                    if (x.data[k] <= 0.0) grad.data[k] = 0.0;
                }
                break;
            }
            case LayerKind::Dense: {
                --p;
                if (lowest_updated == params.layers.size() || p < lowest_updated) {
                    // No updated layer at or below this point: nothing left to do.
                    return grads;
                }
                const auto& lp = params.layers[p];
                const Matrix& x = cache.inputs[i];
                if (grad.rows != x.rows || grad.cols != lp.weights.rows) {
                    throw DimensionError("backward: dense grad shape mismatch at layer " + std::to_string(p));
                }
                if (lp.updated) {
                    LayerGrad lg;
                    lg.d_weights = matmul_at_b(grad, x);  // out_dim x in_dim
                    lg.d_bias.assign(lp.weights.rows, 0.0);
                    for (std::size_t r = 0; r < grad.rows; ++r) {
                        for (std::size_t c = 0; c < grad.cols; ++c) lg.d_bias[c] += grad(r, c);
                    }
                    grads.by_layer.emplace(p, std::move(lg));
                }
                if (p == lowest_updated) return grads;
                grad = matmul(grad, lp.weights);  // gradient w.r.t. the layer input
                break;
            }
        }
    }
    return grads;
}

BackwardResult backward(const ParameterSet& params, const LayerGraph& graph, const ActivationCache& cache,
                        const std::vector<std::size_t>& labels) {
    BackwardResult out;
    Matrix d_logits;
    out.loss = softmax_xent(cache.logits, labels, &d_logits);
    out.grads = backward_from_logits(params, graph, cache, d_logits);
    return out;
}

// ---------------------------------------------------------------------------
// Clipping and optimizer step
// ---------------------------------------------------------------------------

double global_grad_norm(const GradientSet& grads) {
    double sq = 0.0;
    for (const auto& [idx, lg] : grads.by_layer) {
        (void)idx;
        for (double v : lg.d_weights.data) sq += v * v;
        for (double v : lg.d_bias) sq += v * v;
    }
    return std::sqrt(sq);
}

GradientSet clip_global_norm(GradientSet grads, double max_norm) {
    if (max_norm <= 0.0) throw InputError("clip_global_norm: max_norm must be > 0");
    const double norm = global_grad_norm(grads);
    if (norm <= max_norm) return grads;
    const double scale = max_norm / norm;
    for (auto& [idx, lg] : grads.by_layer) {
        (void)idx;
        for (double& v : lg.d_weights.data) v *= scale;
        for (double& v : lg.d_bias) v *= scale;
    }
    return grads;
}

void optimizer_step(ParameterSet& params, const GradientSet& grads, OptimizerState& state, double lr) {
    if (lr <= 0.0) throw InputError("optimizer_step: lr must be > 0");
    for (const auto& [idx, lg] : grads.by_layer) {
        if (idx >= params.layers.size() || !params.layers[idx].updated) {
            throw ContractViolation("optimizer_step: gradient for non-updated layer " + std::to_string(idx));
        }
        (void)lg;
    }
    state.step_count += 1;
    if (state.algo == OptimizerAlgo::Sgd) {
        for (const auto& [idx, lg] : grads.by_layer) {
            auto& lp = params.layers[idx];
            for (std::size_t k = 0; k < lp.weights.data.size(); ++k) lp.weights.data[k] -= lr * lg.d_weights.data[k];
            for (std::size_t k = 0; k < lp.bias.size(); ++k) lp.bias[k] -= lr * lg.d_bias[k];
        }
        return;
    }
    // Adam with bias correction.
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    for (const auto& [idx, lg] : grads.by_layer) {
        auto& lp = params.layers[idx];
        auto it = state.moments.find(idx);
        if (it == state.moments.end()) {
            throw ContractViolation("optimizer_step: missing Adam moments for layer " + std::to_string(idx));
        }
        auto& mom = it->second;
        auto update = [&](double* w, double* m, double* v, const double* g, std::size_t n) {
            for (std::size_t k = 0; k < n; ++k) {
                m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
                v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
                const double mhat = m[k] / bc1;
                const double vhat = v[k] / bc2;
                w[k] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
            }
        };
        update(lp.weights.data.data(), mom.m_weights.data.data(), mom.v_weights.data.data(),
               lg.d_weights.data.data(), lp.weights.data.size());
        update(lp.bias.data(), mom.m_bias.data(), mom.v_bias.data(), lg.d_bias.data(), lp.bias.size());
    }
}

// ---------------------------------------------------------------------------
// Quantization
// ---------------------------------------------------------------------------

QuantTensor quantize_tensor(const double* x, std::size_t n) {
    QuantTensor qt;
    qt.q.resize(n);
    if (n == 0) return qt;
    double lo = x[0], hi = x[0];
    for (std::size_t i = 1; i < n; ++i) {
        lo = std::min(lo, x[i]);
        hi = std::max(hi, x[i]);
    }
    if (hi == lo) {
        // Degenerate range: store zeros, keep the constant as offset.
        qt.scale = 1.0;
        qt.offset = lo;
        std::fill(qt.q.begin(), qt.q.end(), 0);
        return qt;
    }
    qt.scale = (hi - lo) / 255.0;
    qt.offset = lo;
    for (std::size_t i = 0; i < n; ++i) {
        // nearbyint rounds half to even under the default FP environment.
        double level = std::nearbyint((x[i] - lo) / qt.scale);
        level = std::clamp(level, 0.0, 255.0);
        qt.q[i] = static_cast<std::uint8_t>(level);
    }
    return qt;
}

void dequantize_tensor(const QuantTensor& qt, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = qt.offset + qt.scale * static_cast<double>(qt.q[i]);
    }
}

void quantize_layer(LayerParams& layer) {
    if (layer.updated) {
        throw ContractViolation("quantize_layer: layer is marked updated");
    }
    if (layer.storage == StorageMode::Quantized8) return;
    layer.q_weights = quantize_tensor(layer.weights.data.data(), layer.weights.data.size());
    layer.q_bias = quantize_tensor(layer.bias.data(), layer.bias.size());
    dequantize_tensor(*layer.q_weights, layer.weights.data.data(), layer.weights.data.size());
    dequantize_tensor(*layer.q_bias, layer.bias.data(), layer.bias.size());
    layer.storage = StorageMode::Quantized8;
}

void quantize_frozen(ParameterSet& params) {
    for (auto& lp : params.layers) {
        if (!lp.updated) quantize_layer(lp);
    }
}

void dequantize_layer(LayerParams& layer) {
    layer.q_weights.reset();
    layer.q_bias.reset();
    layer.storage = StorageMode::FullPrecision;
}

}  // namespace snakesim::nncore
