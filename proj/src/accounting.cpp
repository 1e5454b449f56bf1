#include "snakesim/accounting.hpp"

#include <algorithm>

#include "snakesim/errors.hpp"

namespace snakesim::accounting {

std::vector<std::size_t> layer_param_counts(const nncore::LayerGraph& graph) {
    std::vector<std::size_t> counts;
    for (const auto& desc : graph.layers) {
        if (desc.kind == nncore::LayerKind::Dense) {
            counts.push_back(desc.in_dim * desc.out_dim + desc.out_dim);
        }
    }
    return counts;
}

HopBytes snake_hop_bytes(const std::vector<std::size_t>& layer_param_counts,
                         const std::set<std::size_t>& updated_set, CacheState cache, HandoffMode mode,
                         const std::set<std::size_t>* prev_updated_set) {
    constexpr double kBytesPerParam = 4.0;
    double total = 0.0;
    for (std::size_t c : layer_param_counts) total += static_cast<double>(c);
    const auto subset_params = [&](const std::set<std::size_t>& s) {
        double n = 0.0;
        for (std::size_t idx : s) {
            if (idx >= layer_param_counts.size()) {
                throw InputError("snake_hop_bytes: layer index out of range");
            }
            n += static_cast<double>(layer_param_counts[idx]);
        }
        return n;
    };
    const double updated = subset_params(updated_set);

    HopBytes hb;
    hb.up = kBytesPerParam * updated;
    if (mode == HandoffMode::PeerToPeer && cache == CacheState::Warm) {
        hb.down = kBytesPerParam * subset_params(prev_updated_set ? *prev_updated_set : updated_set);
    } else {
        hb.down = kBytesPerParam * total;
    }
    return hb;
}

HopBytes fedavg_round_bytes(std::size_t total_params) {
    constexpr double kBytesPerParam = 4.0;
    HopBytes hb;
    hb.down = kBytesPerParam * static_cast<double>(total_params);
    hb.up = hb.down;
    return hb;
}

double split_learning_bytes(std::size_t samples, std::size_t cut_width, std::size_t epochs) {
    // activations down + gradients back, 4 bytes per value
    return 2.0 * static_cast<double>(samples) * static_cast<double>(cut_width) * 4.0 *
           static_cast<double>(epochs);
}

FlopEstimate flop_estimate(const nncore::LayerGraph& graph, std::size_t batch_size,
                           const std::set<std::size_t>& updated_set) {
    FlopEstimate est;
    const double b = static_cast<double>(batch_size);
    std::size_t p = 0;
    for (const auto& desc : graph.layers) {
        if (desc.kind != nncore::LayerKind::Dense) continue;
        const double mn = static_cast<double>(desc.in_dim) * static_cast<double>(desc.out_dim);
        est.forward += 2.0 * b * mn;
        est.backward_act += 2.0 * b * mn;
        if (updated_set.count(p)) est.backward_weight += 2.0 * b * mn;
        ++p;
    }
    return est;
}

double peak_memory_estimate(const nncore::LayerGraph& graph, const std::set<std::size_t>& updated_set,
                            std::size_t batch_size, nncore::OptimizerAlgo optimizer, bool quantize_frozen,
                            const MemoryModel& model) {
    const auto counts = layer_param_counts(graph);
    double updated_params = 0.0;
    double frozen_params = 0.0;
    for (std::size_t p = 0; p < counts.size(); ++p) {
        if (updated_set.count(p)) {
            updated_params += static_cast<double>(counts[p]);
        } else {
            frozen_params += static_cast<double>(counts[p]);
        }
    }
    const double param_bytes =
        model.bytes_per_param_full * updated_params +
        (quantize_frozen ? model.bytes_per_param_quantized : model.bytes_per_param_full) * frozen_params;
    const double grad_bytes = model.bytes_per_param_full * updated_params;
    const double opt_bytes =
        model.optimizer_state_multiplier(optimizer) * model.bytes_per_param_full * updated_params;

    double act_bytes = 0.0;
    const double b = static_cast<double>(batch_size);
    for (const auto& desc : graph.layers) {
        if (desc.kind != nncore::LayerKind::Dense) continue;
        const double ws = b * static_cast<double>(desc.in_dim + desc.out_dim) * model.bytes_per_param_full;
        act_bytes = std::max(act_bytes, ws);
    }
    return param_bytes + grad_bytes + opt_bytes + act_bytes;
}

void CostLedger::add(const LedgerEntry& entry) {
    if (entry.bytes_up < 0.0 || entry.bytes_down < 0.0 || entry.flops_forward < 0.0 ||
        entry.flops_backward_act < 0.0 || entry.flops_backward_weight < 0.0 ||
        entry.peak_memory_bytes < 0.0) {
        throw ContractViolation("CostLedger: negative counter delta");
    }
    entries_.push_back(entry);
    total_up_ += entry.bytes_up;
    total_down_ += entry.bytes_down;
    total_flops_ += entry.flops_forward + entry.flops_backward_act + entry.flops_backward_weight;
    max_peak_memory_ = std::max(max_peak_memory_, entry.peak_memory_bytes);
}

}  // namespace snakesim::accounting
