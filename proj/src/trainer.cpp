#include "snakesim/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "snakesim/errors.hpp"
#include "snakesim/rng.hpp"

namespace snakesim::trainer {

std::set<std::size_t> LayerAssignment::updated_set(std::size_t num_param_layers) const {
    if (num_param_layers < 3) throw InputError("assignment: graph has fewer than 3 parameterized layers");
    if (middle_layers.empty()) throw InputError("assignment: middle layer set is empty");
    std::set<std::size_t> s;
    for (std::size_t idx : middle_layers) {
        if (idx < 1 || idx > num_param_layers - 2) {
            throw InputError("assignment: layer " + std::to_string(idx) + " is not a middle layer of " +
                             std::to_string(num_param_layers));
        }
        s.insert(idx);
    }
    s.insert(0);
    s.insert(num_param_layers - 1);
    return s;
}

void apply_assignment(nncore::ParameterSet& params, const LayerAssignment& assignment) {
    const auto updated = assignment.updated_set(params.layers.size());
    for (std::size_t p = 0; p < params.layers.size(); ++p) {
        params.layers[p].updated = updated.count(p) > 0;
    }
}

void TrainConfig::validate() const {
    if (epochs < 1) throw InputError("train config: epochs must be >= 1");
    if (batch_size < 1) throw InputError("train config: batch_size must be >= 1");
    if (base_lr <= 0.0) throw InputError("train config: base_lr must be > 0");
    if (cycle_decay <= 0.0 || cycle_decay > 1.0) throw InputError("train config: cycle_decay must be in (0,1]");
    if (clip_norm <= 0.0) throw InputError("train config: clip_norm must be > 0");
    if (kd.enabled && (kd.lambda < 0.0 || kd.temperature <= 0.0)) {
        throw InputError("train config: kd needs lambda >= 0 and temperature > 0");
    }
}

double lr_for_cycle(double base_lr, std::size_t cycle, double cycle_decay) {
    return base_lr * std::pow(cycle_decay, static_cast<double>(cycle));
}

double kd_loss(const Matrix& student_logits, const Matrix& teacher_logits, double temperature,
               Matrix* d_student_logits) {
    if (!student_logits.same_shape(teacher_logits)) {
        throw InputError("kd_loss: student and teacher logit shapes differ");
    }
    if (temperature <= 0.0) throw InputError("kd_loss: temperature must be > 0");
    const Matrix pt = nncore::softmax(teacher_logits, temperature);
    const Matrix ps = nncore::softmax(student_logits, temperature);
    const double t2 = temperature * temperature;
    const double inv_b = 1.0 / static_cast<double>(student_logits.rows);
    double loss = 0.0;
    for (std::size_t r = 0; r < ps.rows; ++r) {
        for (std::size_t c = 0; c < ps.cols; ++c) {
            loss -= pt(r, c) * std::log(std::max(ps(r, c), 1e-300));
        }
    }
    loss *= t2 * inv_b;
    if (d_student_logits) {
        // d/dz_s of T^2 * CE(softmax_T(z_t), softmax_T(z_s)) = T * (p_s - p_t)
        *d_student_logits = Matrix(ps.rows, ps.cols);
        for (std::size_t k = 0; k < ps.data.size(); ++k) {
            d_student_logits->data[k] = temperature * inv_b * (ps.data[k] - pt.data[k]);
        }
    }
    return loss;
}

bool should_activate_kd(const std::vector<Vector>& node_histograms, double threshold) {
    if (node_histograms.size() < 2) throw InputError("should_activate_kd: need at least 2 nodes");
    double max_dist = 0.0;
    for (std::size_t i = 0; i < node_histograms.size(); ++i) {
        for (std::size_t j = i + 1; j < node_histograms.size(); ++j) {
            max_dist = std::max(max_dist, data::distribution_discrepancy(node_histograms[i], node_histograms[j]));
        }
    }
    return max_dist > threshold;
}

namespace {

Matrix gather_rows(const data::Dataset& ds, const std::vector<std::size_t>& rows) {
    Matrix m(rows.size(), ds.dim());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t f = 0; f < ds.dim(); ++f) m(i, f) = ds.features(rows[i], f);
    }
    return m;
}

}  // namespace

LocalResult train_local(const nncore::ParameterSet& params, const nncore::LayerGraph& graph,
                        const LayerAssignment& assignment, const ShardView& shard, const TrainConfig& cfg,
                        std::size_t cycle, const std::optional<nncore::ParameterSet>& teacher,
                        std::uint64_t seed) {
    cfg.validate();
    if (!shard.dataset || shard.rows.empty()) throw ConfigError("train_local: empty shard");
    if (cfg.kd.enabled && !teacher) throw ConfigError("train_local: kd enabled but no teacher model");
    if (!cfg.kd.enabled && teacher) throw ConfigError("train_local: teacher given but kd is off");

    nncore::ParameterSet model = params;
    apply_assignment(model, assignment);
    const auto updated = assignment.updated_set(model.layers.size());

    nncore::OptimizerState opt = nncore::init_optimizer(cfg.optimizer, model);
    const double lr = lr_for_cycle(cfg.base_lr, cycle, cfg.cycle_decay);

    LocalResult result;
    Rng rng(derive_seed(seed, 0x70c4));
    std::vector<std::size_t> order = shard.rows;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::vector<std::size_t> batch_rows(order.begin() + start, order.begin() + end);
            const Matrix batch = gather_rows(*shard.dataset, batch_rows);
            std::vector<std::size_t> labels(batch_rows.size());
            for (std::size_t i = 0; i < batch_rows.size(); ++i) labels[i] = shard.dataset->labels[batch_rows[i]];

            nncore::ActivationCache cache;
            nncore::forward(model, graph, batch, &cache);
            Matrix d_logits;
            double loss = nncore::softmax_xent(cache.logits, labels, &d_logits);
            if (cfg.kd.enabled) {
                const Matrix teacher_logits = nncore::forward(*teacher, graph, batch);
                Matrix d_kd;
                const double kdl = kd_loss(cache.logits, teacher_logits, cfg.kd.temperature, &d_kd);
                loss += cfg.kd.lambda * kdl;
                for (std::size_t k = 0; k < d_logits.data.size(); ++k) {
                    d_logits.data[k] += cfg.kd.lambda * d_kd.data[k];
                }
            }
            nncore::GradientSet grads = nncore::backward_from_logits(model, graph, cache, d_logits);
            grads = nncore::clip_global_norm(std::move(grads), cfg.clip_norm);
            nncore::optimizer_step(model, grads, opt, lr);

            result.loss_trace.push_back(loss);
            ++result.steps;
        }
    }

    const auto flops_per_pass =
        accounting::flop_estimate(graph, shard.rows.size(), updated);
    double flops = flops_per_pass.total() * static_cast<double>(cfg.epochs);
    if (cfg.kd.enabled) flops += flops_per_pass.forward * static_cast<double>(cfg.epochs);
    result.flops = flops;

    for (std::size_t p : updated) {
        result.updated_params.emplace(p, model.layers[p]);
    }
    return result;
}

void merge_updated_layers(nncore::ParameterSet& target,
                          const std::map<std::size_t, nncore::LayerParams>& updated) {
    for (const auto& [idx, lp] : updated) {
        if (idx >= target.layers.size()) throw InputError("merge_updated_layers: layer index out of range");
        if (!lp.weights.same_shape(target.layers[idx].weights) ||
            lp.bias.size() != target.layers[idx].bias.size()) {
            throw DimensionError("merge_updated_layers: shape mismatch at layer " + std::to_string(idx));
        }
        target.layers[idx].weights = lp.weights;
        target.layers[idx].bias = lp.bias;
        target.layers[idx].storage = nncore::StorageMode::FullPrecision;
        target.layers[idx].q_weights.reset();
        target.layers[idx].q_bias.reset();
    }
}

}  // namespace snakesim::trainer
