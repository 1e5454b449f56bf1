#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snakesim/matrix.hpp"

namespace snakesim::data {

struct Dataset {
    Matrix features;                  // M x d
    std::vector<std::size_t> labels;  // M entries in [0, K)
    std::size_t num_classes = 0;
    std::string name;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return features.cols; }
};

enum class PartitionMode { Iid, Dirichlet };

struct Partition {
    std::vector<std::vector<std::size_t>> node_shards;  // row indices per node
    double alpha = 0.0;  // Dirichlet concentration; unused for IID
    PartitionMode mode = PartitionMode::Iid;
};

// K isotropic Gaussian classes around seeded class centers (unit-scale
// normal centers, per-sample noise sigma = spread). Samples are grouped by
// class in label order; per_class each.
Dataset make_blobs(std::size_t num_classes, std::size_t per_class, std::size_t dim, double spread,
                   std::uint64_t seed);

// The class centers make_blobs(seed) uses, for oracle checks.
Matrix blob_centers(std::size_t num_classes, std::size_t dim, std::uint64_t seed);

// Train/test pair drawn around the same centers, no shared rows.
struct TrainTestSplit {
    Dataset train;
    Dataset test;
};
TrainTestSplit make_blobs_split(std::size_t num_classes, std::size_t train_per_class,
                                std::size_t test_per_class, std::size_t dim, double spread,
                                std::uint64_t seed);

// Seeded shuffle, shard sizes differ by at most one.
Partition partition_iid(const Dataset& dataset, std::size_t n_nodes, std::uint64_t seed);

// Per-class node proportions drawn Dir(alpha); resamples up to 100 times if
// some node would end up empty, then throws ConfigError.
Partition partition_dirichlet(const Dataset& dataset, std::size_t n_nodes, double alpha,
                              std::uint64_t seed);

void check_partition(const Partition& partition, std::size_t total_rows);

// Per-feature standardization statistics. Fit on a training set, apply to
// both splits; constant features map to zero.
struct FeatureScaler {
    Vector mean;
    Vector std;  // population std; 0 marks a constant feature

    void fit(const Dataset& dataset);
    Dataset transform(const Dataset& dataset) const;
};

// fit + transform in one call.
Dataset preprocess(const Dataset& dataset);

// Class histogram (counts) of the given rows.
Vector class_histogram(const Dataset& dataset, const std::vector<std::size_t>& rows,
                       std::size_t num_classes);

// Jensen-Shannon distance (natural log) between two class histograms;
// symmetric, in [0, sqrt(ln 2)]. Histograms may be counts or probabilities.
double distribution_discrepancy(const Vector& p, const Vector& q);

// CSV with header f0,...,f{d-1},label; deterministic row order.
void to_csv(const Dataset& dataset, const std::string& path);
Dataset from_csv(const std::string& path, const std::string& name = "csv");

std::uint64_t hash_shard(const Dataset& dataset, const std::vector<std::size_t>& rows);

}  // namespace snakesim::data
