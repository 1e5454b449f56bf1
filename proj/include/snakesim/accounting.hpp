#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "snakesim/nncore.hpp"

namespace snakesim::accounting {

// Byte/FLOP model constants. Model tensors go over the wire at 4 bytes per
// parameter; quantized storage is 1 byte per parameter.
struct MemoryModel {
    double bytes_per_param_full = 4.0;
    double bytes_per_param_quantized = 1.0;
    double optimizer_state_multiplier(nncore::OptimizerAlgo algo) const {
        return algo == nncore::OptimizerAlgo::Adam ? 2.0 : 0.0;
    }
};

enum class CacheState { Cold, Warm };
enum class HandoffMode { ClientServer, PeerToPeer };

struct HopBytes {
    double down = 0.0;
    double up = 0.0;
};

// Per-hop traffic of the training node. CS and P2P-cold receive the full
// model; P2P-warm receives only the previous hop's updated layers. Uploads
// always carry just the updated layers.
HopBytes snake_hop_bytes(const std::vector<std::size_t>& layer_param_counts,
                         const std::set<std::size_t>& updated_set, CacheState cache, HandoffMode mode,
                         const std::set<std::size_t>* prev_updated_set = nullptr);

// FedAvg moves the complete model both ways, per node per round.
HopBytes fedavg_round_bytes(std::size_t total_params);

// Split-learning smashed data: activations + gradients at the cut, both
// ways, for every sample every epoch. Analytical only.
double split_learning_bytes(std::size_t samples, std::size_t cut_width, std::size_t epochs);

struct FlopEstimate {
    double forward = 0.0;
    double backward_act = 0.0;
    double backward_weight = 0.0;
    double total() const { return forward + backward_act + backward_weight; }
};

// Per dense layer of m x n parameters and batch b: forward costs 2bmn,
// the backward activation pass costs 2bmn, and the backward weight pass
// costs 2bmn counted only for updated layers.
FlopEstimate flop_estimate(const nncore::LayerGraph& graph, std::size_t batch_size,
                           const std::set<std::size_t>& updated_set);

// Peak training memory: parameters (full or quantized frozen storage),
// gradients and optimizer state for updated layers, plus the largest
// per-layer activation working set (streaming assumption).
double peak_memory_estimate(const nncore::LayerGraph& graph, const std::set<std::size_t>& updated_set,
                            std::size_t batch_size, nncore::OptimizerAlgo optimizer, bool quantize_frozen,
                            const MemoryModel& model = MemoryModel{});

// Parameter count (weights + bias) of each dense layer.
std::vector<std::size_t> layer_param_counts(const nncore::LayerGraph& graph);

// ---------------------------------------------------------------------------
// CostLedger: cumulative per-run counters, updated by the event loop.
// ---------------------------------------------------------------------------

struct LedgerEntry {
    std::size_t step = 0;  // hop or round index
    std::size_t node_id = 0;
    double bytes_up = 0.0;
    double bytes_down = 0.0;
    double flops_forward = 0.0;
    double flops_backward_act = 0.0;
    double flops_backward_weight = 0.0;
    double peak_memory_bytes = 0.0;
};

class CostLedger {
public:
    // All deltas must be nonnegative; counters only grow.
    void add(const LedgerEntry& entry);

    double total_bytes_up() const { return total_up_; }
    double total_bytes_down() const { return total_down_; }
    double total_flops() const { return total_flops_; }
    double max_peak_memory() const { return max_peak_memory_; }
    const std::vector<LedgerEntry>& entries() const { return entries_; }

private:
    std::vector<LedgerEntry> entries_;
    double total_up_ = 0.0;
    double total_down_ = 0.0;
    double total_flops_ = 0.0;
    double max_peak_memory_ = 0.0;
};

}  // namespace snakesim::accounting
