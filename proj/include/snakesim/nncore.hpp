#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "snakesim/matrix.hpp"
#include "snakesim/rng.hpp"

namespace snakesim::nncore {

// ---------------------------------------------------------------------------
// Model description
// ---------------------------------------------------------------------------

enum class LayerKind { Dense, Relu, SoftmaxXentHead };

struct LayerDesc {
    LayerKind kind;
    std::size_t in_dim = 0;   // dense only
    std::size_t out_dim = 0;  // dense only
};

// Ordered description of a feed-forward net. Dense layers are the
// "parameterized" layers; the net always ends in a softmax cross-entropy head.
struct LayerGraph {
    std::vector<LayerDesc> layers;

    // Positions (into `layers`) of the dense layers, in forward order.
    std::vector<std::size_t> dense_positions() const;
    std::size_t num_param_layers() const { return dense_positions().size(); }
    std::size_t input_dim() const;
    std::size_t num_classes() const;

    // Throws ConfigError unless shapes chain and there are >= 3 dense layers
    // (first, at least one middle, last).
    void validate() const;
};

// input_dim -> hidden[0] -> ... -> hidden[n-1] -> num_classes, ReLU between
// dense layers, softmax cross-entropy head on top.
LayerGraph make_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden, std::size_t num_classes);

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

enum class StorageMode { FullPrecision, Quantized8 };

// 8-bit affine quantization state for one tensor: x ~= offset + scale * q.
struct QuantTensor {
    std::vector<std::uint8_t> q;
    double scale = 1.0;
    double offset = 0.0;
};

struct LayerParams {
    Matrix weights;  // out_dim x in_dim
    Vector bias;     // out_dim
    bool updated = true;
    StorageMode storage = StorageMode::FullPrecision;
    // Present iff storage == Quantized8. `weights`/`bias` then hold the
    // dequantized values so the compute path stays uniform.
    std::optional<QuantTensor> q_weights;
    std::optional<QuantTensor> q_bias;
};

// One entry per parameterized layer of the owning graph, in forward order.
struct ParameterSet {
    std::vector<LayerParams> layers;

    std::size_t num_params() const;
    std::size_t num_updated_params() const;
    std::vector<std::size_t> updated_indices() const;
    void check_shapes(const LayerGraph& graph) const;
};

// He-uniform init from the given seed; all layers updated, full precision.
ParameterSet init_params(const LayerGraph& graph, std::uint64_t seed);

std::uint64_t hash_layer(const LayerParams& lp);
std::uint64_t hash_params(const ParameterSet& params);

// ---------------------------------------------------------------------------
// Gradients and optimizer
// ---------------------------------------------------------------------------

struct LayerGrad {
    Matrix d_weights;
    Vector d_bias;
};

// Keyed by parameterized-layer index; holds entries only for updated layers.
struct GradientSet {
    std::map<std::size_t, LayerGrad> by_layer;

    bool empty() const { return by_layer.empty(); }
};

enum class OptimizerAlgo { Sgd, Adam };

struct AdamMoments {
    Matrix m_weights, v_weights;
    Vector m_bias, v_bias;
};

// Moment state exists only for updated layers (that is the memory contract).
struct OptimizerState {
    OptimizerAlgo algo = OptimizerAlgo::Sgd;
    std::uint64_t step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::map<std::size_t, AdamMoments> moments;
};

OptimizerState init_optimizer(OptimizerAlgo algo, const ParameterSet& params);

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

struct ActivationCache {
    // Input to every layer of the graph (same indexing as graph.layers),
    // plus the final logits.
    std::vector<Matrix> inputs;
    Matrix logits;
};

// Full forward pass; frozen layers still execute. Throws DimensionError on
// shape mismatch.
Matrix forward(const ParameterSet& params, const LayerGraph& graph, const Matrix& batch,
               ActivationCache* cache = nullptr);

// Mean softmax cross-entropy and its gradient w.r.t. the logits.
// Throws InputError if a label is outside [0, K).
double softmax_xent(const Matrix& logits, const std::vector<std::size_t>& labels, Matrix* d_logits = nullptr);

// Row-wise softmax at temperature T.
Matrix softmax(const Matrix& logits, double temperature = 1.0);

// Backprop from an explicit logit gradient. Weight gradients are produced
// only for updated layers; frozen layers contribute activation gradients
// only, and the first dense layer's input gradient is never formed.
GradientSet backward_from_logits(const ParameterSet& params, const LayerGraph& graph,
                                 const ActivationCache& cache, const Matrix& d_logits);

// Convenience: task loss + gradients in one call.
struct BackwardResult {
    double loss = 0.0;
    GradientSet grads;
};
BackwardResult backward(const ParameterSet& params, const LayerGraph& graph, const ActivationCache& cache,
                        const std::vector<std::size_t>& labels);

// ---------------------------------------------------------------------------
// Gradient clipping, optimizer step, quantization
// ---------------------------------------------------------------------------

double global_grad_norm(const GradientSet& grads);

// Scale all entries jointly so the global L2 norm is at most max_norm.
// Requires max_norm > 0; empty gradients pass through.
GradientSet clip_global_norm(GradientSet grads, double max_norm);

// Applies one SGD or Adam step in place. Only updated layers change; Adam
// advances its step count even when the gradient is zero. lr must be > 0.
void optimizer_step(ParameterSet& params, const GradientSet& grads, OptimizerState& state, double lr);

// Per-tensor affine 8-bit quantization (round half to even). Degenerate
// constant tensors store scale 1 with the constant as offset.
QuantTensor quantize_tensor(const double* x, std::size_t n);
void dequantize_tensor(const QuantTensor& qt, double* out, std::size_t n);

// Quantizes every frozen layer in place; `weights`/`bias` are replaced by
// their dequantized images so later forwards see the quantization error.
// Throws ContractViolation if asked to quantize an updated layer via
// quantize_layer, and skips updated layers in quantize_frozen.
void quantize_layer(LayerParams& layer);
void quantize_frozen(ParameterSet& params);

// Restores a quantized layer to full-precision storage (values unchanged;
// they were already the dequantized image).
void dequantize_layer(LayerParams& layer);

}  // namespace snakesim::nncore
