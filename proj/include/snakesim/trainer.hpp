#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "snakesim/accounting.hpp"
#include "snakesim/data.hpp"
#include "snakesim/nncore.hpp"

namespace snakesim::trainer {

// Which parameterized layers a hop updates. The first and last layers are
// always part of the updated set; middle_layers picks from [1, P-2].
struct LayerAssignment {
    std::set<std::size_t> middle_layers;

    // {0} + middle_layers + {P-1}; validates the middle indices.
    std::set<std::size_t> updated_set(std::size_t num_param_layers) const;
};

// Marks exactly the assignment's updated set as updated; everything else
// becomes frozen.
void apply_assignment(nncore::ParameterSet& params, const LayerAssignment& assignment);

struct KdConfig {
    bool enabled = false;
    double lambda = 0.5;
    double temperature = 2.0;
};

struct TrainConfig {
    std::size_t epochs = 1;
    std::size_t batch_size = 32;
    double base_lr = 0.05;
    double cycle_decay = 0.7;  // in (0, 1]
    double clip_norm = 1.0;
    KdConfig kd;
    nncore::OptimizerAlgo optimizer = nncore::OptimizerAlgo::Sgd;

    void validate() const;
};

// Output of one local run: the updated layers only, never raw data.
struct LocalResult {
    std::map<std::size_t, nncore::LayerParams> updated_params;
    std::vector<double> loss_trace;  // one entry per optimizer step
    std::size_t steps = 0;
    double flops = 0.0;
};

// Constant learning rate within a cycle, decayed between cycles.
double lr_for_cycle(double base_lr, std::size_t cycle, double cycle_decay);

// Distillation loss: temperature-softened cross-entropy between teacher and
// student logits, scaled by T^2. Mean over the batch.
double kd_loss(const Matrix& student_logits, const Matrix& teacher_logits, double temperature,
               Matrix* d_student_logits = nullptr);

// True iff the maximum pairwise Jensen-Shannon distance between node class
// histograms exceeds the threshold. Needs at least two nodes.
bool should_activate_kd(const std::vector<Vector>& node_histograms, double threshold);

// A node's view of its shard: row indices into a shared dataset.
struct ShardView {
    const data::Dataset* dataset = nullptr;
    std::vector<std::size_t> rows;
};

// Local training of the assigned layers: `epochs` seeded passes over the
// shard, gradients clipped before every step, optional distillation against
// the frozen teacher (the exact parameters the node received). Non-assigned
// layers come back bit-identical.
LocalResult train_local(const nncore::ParameterSet& params, const nncore::LayerGraph& graph,
                        const LayerAssignment& assignment, const ShardView& shard, const TrainConfig& cfg,
                        std::size_t cycle, const std::optional<nncore::ParameterSet>& teacher,
                        std::uint64_t seed);

// Writes a LocalResult's layers into a full model (last-writer semantics).
void merge_updated_layers(nncore::ParameterSet& target,
                          const std::map<std::size_t, nncore::LayerParams>& updated);

}  // namespace snakesim::trainer
