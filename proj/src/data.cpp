#include "snakesim/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "snakesim/errors.hpp"
#include "snakesim/rng.hpp"

namespace snakesim::data {

namespace {

constexpr std::uint64_t kCenterStream = 0xb10b;
constexpr std::uint64_t kSampleStream = 0x5a3e;

void append_class_samples(Dataset& ds, const Matrix& centers, std::size_t cls, std::size_t count,
                          double spread, Rng& rng) {
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t row = ds.labels.size();
        ds.labels.push_back(cls);
        for (std::size_t f = 0; f < centers.cols; ++f) {
            ds.features(row, f) = centers(cls, f) + spread * rng.normal();
        }
    }
}

}  // namespace

Matrix blob_centers(std::size_t num_classes, std::size_t dim, std::uint64_t seed) {
    Rng rng(derive_seed(seed, kCenterStream));
    Matrix centers(num_classes, dim);
    for (auto& v : centers.data) v = rng.normal();
    return centers;
}

Dataset make_blobs(std::size_t num_classes, std::size_t per_class, std::size_t dim, double spread,
                   std::uint64_t seed) {
    if (num_classes < 2) throw InputError("make_blobs: need at least 2 classes");
    if (per_class < 1) throw InputError("make_blobs: per_class must be >= 1");
    if (spread <= 0.0) throw InputError("make_blobs: spread must be > 0");
    const Matrix centers = blob_centers(num_classes, dim, seed);
    Dataset ds;
    ds.name = "blobs";
    ds.num_classes = num_classes;
    ds.features = Matrix(num_classes * per_class, dim);
    Rng rng(derive_seed(seed, kSampleStream));
    for (std::size_t c = 0; c < num_classes; ++c) {
        append_class_samples(ds, centers, c, per_class, spread, rng);
    }
    return ds;
}

TrainTestSplit make_blobs_split(std::size_t num_classes, std::size_t train_per_class,
                                std::size_t test_per_class, std::size_t dim, double spread,
                                std::uint64_t seed) {
    // One stream per class across both splits: train rows first, test after.
    const Dataset all = make_blobs(num_classes, train_per_class + test_per_class, dim, spread, seed);
    TrainTestSplit out;
    out.train.name = "blobs-train";
    out.test.name = "blobs-test";
    out.train.num_classes = num_classes;
    out.test.num_classes = num_classes;
    out.train.features = Matrix(num_classes * train_per_class, dim);
    out.test.features = Matrix(num_classes * test_per_class, dim);
    std::size_t tr = 0, te = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        const std::size_t base = c * (train_per_class + test_per_class);
        for (std::size_t i = 0; i < train_per_class + test_per_class; ++i) {
            const bool is_train = i < train_per_class;
            Dataset& dst = is_train ? out.train : out.test;
            const std::size_t row = is_train ? tr++ : te++;
            for (std::size_t f = 0; f < dim; ++f) dst.features(row, f) = all.features(base + i, f);
            dst.labels.push_back(c);
        }
    }
    return out;
}

Partition partition_iid(const Dataset& dataset, std::size_t n_nodes, std::uint64_t seed) {
    if (n_nodes < 1) throw InputError("partition_iid: need at least 1 node");
    const std::size_t m = dataset.size();
    if (n_nodes > m) {
        throw InputError("partition_iid: " + std::to_string(n_nodes) + " nodes for " + std::to_string(m) +
                         " samples");
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, 0x11d));
    rng.shuffle(order);

    Partition part;
    part.mode = PartitionMode::Iid;
    part.node_shards.resize(n_nodes);
    const std::size_t base = m / n_nodes;
    const std::size_t extra = m % n_nodes;
    std::size_t pos = 0;
    for (std::size_t n = 0; n < n_nodes; ++n) {
        const std::size_t take = base + (n < extra ? 1 : 0);
        part.node_shards[n].assign(order.begin() + pos, order.begin() + pos + take);
        pos += take;
    }
    return part;
}

Partition partition_dirichlet(const Dataset& dataset, std::size_t n_nodes, double alpha,
                              std::uint64_t seed) {
    if (n_nodes < 1) throw InputError("partition_dirichlet: need at least 1 node");
    if (alpha <= 0.0) throw InputError("partition_dirichlet: alpha must be > 0");
    const std::size_t m = dataset.size();
    if (n_nodes > m) {
        throw InputError("partition_dirichlet: " + std::to_string(n_nodes) + " nodes for " +
                         std::to_string(m) + " samples");
    }
    std::vector<std::vector<std::size_t>> by_class(dataset.num_classes);
    for (std::size_t i = 0; i < m; ++i) by_class[dataset.labels[i]].push_back(i);

    constexpr int kMaxRetries = 100;
    for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
        Rng rng(derive_seed(seed, 0xd1 + static_cast<std::uint64_t>(attempt)));
        Partition part;
        part.mode = PartitionMode::Dirichlet;
        part.alpha = alpha;
        part.node_shards.resize(n_nodes);
        for (std::size_t c = 0; c < by_class.size(); ++c) {
            std::vector<std::size_t> rows = by_class[c];
            rng.shuffle(rows);
            const std::vector<double> props = rng.dirichlet(alpha, n_nodes);
            // Cumulative-proportion cut points over the shuffled class rows.
            std::size_t start = 0;
            double cum = 0.0;
            for (std::size_t n = 0; n < n_nodes; ++n) {
                cum += props[n];
                const std::size_t end =
                    (n + 1 == n_nodes) ? rows.size()
                                       : std::min(rows.size(), static_cast<std::size_t>(std::llround(
                                                                   cum * static_cast<double>(rows.size()))));
                for (std::size_t i = start; i < end; ++i) part.node_shards[n].push_back(rows[i]);
                start = std::max(start, end);
            }
        }
        const bool any_empty = std::any_of(part.node_shards.begin(), part.node_shards.end(),
                                           [](const auto& s) { return s.empty(); });
        if (!any_empty) {
            for (auto& shard : part.node_shards) std::sort(shard.begin(), shard.end());
            return part;
        }
    }
    throw ConfigError("partition_dirichlet: could not produce non-empty shards after " +
                      std::to_string(kMaxRetries) + " attempts (alpha=" + std::to_string(alpha) + ")");
}

void check_partition(const Partition& partition, std::size_t total_rows) {
    std::vector<char> seen(total_rows, 0);
    std::size_t count = 0;
    for (const auto& shard : partition.node_shards) {
        for (std::size_t row : shard) {
            if (row >= total_rows) throw ContractViolation("partition: row index out of range");
            if (seen[row]) throw ContractViolation("partition: row " + std::to_string(row) + " in two shards");
            seen[row] = 1;
            ++count;
        }
    }
    if (count != total_rows) {
        throw ContractViolation("partition: covers " + std::to_string(count) + " of " +
                                std::to_string(total_rows) + " rows");
    }
}

void FeatureScaler::fit(const Dataset& dataset) {
    if (dataset.size() == 0) throw InputError("FeatureScaler: empty dataset");
    const std::size_t m = dataset.size();
    const std::size_t d = dataset.dim();
    mean.assign(d, 0.0);
    std.assign(d, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t f = 0; f < d; ++f) mean[f] += dataset.features(i, f);
    }
    for (auto& v : mean) v /= static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t f = 0; f < d; ++f) {
            const double c = dataset.features(i, f) - mean[f];
            std[f] += c * c;
        }
    }
    for (auto& v : std) v = std::sqrt(v / static_cast<double>(m));
}

Dataset FeatureScaler::transform(const Dataset& dataset) const {
    if (dataset.dim() != mean.size()) throw DimensionError("FeatureScaler: feature count mismatch");
    Dataset out = dataset;
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t f = 0; f < out.dim(); ++f) {
            out.features(i, f) = std[f] > 0.0 ? (dataset.features(i, f) - mean[f]) / std[f] : 0.0;
        }
    }
    return out;
}

Dataset preprocess(const Dataset& dataset) {
    FeatureScaler scaler;
    scaler.fit(dataset);
    return scaler.transform(dataset);
}

Vector class_histogram(const Dataset& dataset, const std::vector<std::size_t>& rows,
                       std::size_t num_classes) {
    Vector h(num_classes, 0.0);
    for (std::size_t row : rows) {
        const std::size_t lbl = dataset.labels[row];
        if (lbl >= num_classes) throw InputError("class_histogram: label out of range");
        h[lbl] += 1.0;
    }
    return h;
}

double distribution_discrepancy(const Vector& p, const Vector& q) {
    if (p.size() != q.size()) throw InputError("distribution_discrepancy: histogram sizes differ");
    if (p.empty()) throw InputError("distribution_discrepancy: empty histograms");
    constexpr double kEps = 1e-12;
    const auto normalize = [](const Vector& h) {
        double sum = 0.0;
        for (double v : h) {
            if (v < 0.0) throw InputError("distribution_discrepancy: negative count");
            sum += v;
        }
        Vector out(h.size());
        for (std::size_t i = 0; i < h.size(); ++i) {
            out[i] = (sum > 0.0 ? h[i] / sum : 1.0 / static_cast<double>(h.size())) + kEps;
        }
        double s2 = 0.0;
        for (double v : out) s2 += v;
        for (double& v : out) v /= s2;
        return out;
    };
    const Vector pp = normalize(p);
    const Vector qq = normalize(q);
    double js = 0.0;
    for (std::size_t i = 0; i < pp.size(); ++i) {
        const double m = 0.5 * (pp[i] + qq[i]);
        js += 0.5 * pp[i] * std::log(pp[i] / m) + 0.5 * qq[i] * std::log(qq[i] / m);
    }
    js = std::max(0.0, js);
    return std::sqrt(js);
}

void to_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("to_csv: cannot open " + path);
    for (std::size_t f = 0; f < dataset.dim(); ++f) out << 'f' << f << ',';
    out << "label\n";
    char buf[40];
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (std::size_t f = 0; f < dataset.dim(); ++f) {
            std::snprintf(buf, sizeof(buf), "%.17g", dataset.features(i, f));
            out << buf << ',';
        }
        out << dataset.labels[i] << '\n';
    }
}

Dataset from_csv(const std::string& path, const std::string& name) {
    std::ifstream in(path);
    if (!in) throw ConfigError("from_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("from_csv: empty file " + path);
    std::size_t dim = 0;
    {
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ',')) {
            if (col == "label") break;
            if (col != "f" + std::to_string(dim)) {
                throw ConfigError("from_csv: unexpected header column '" + col + "'");
            }
            ++dim;
        }
    }
    std::vector<double> values;
    std::vector<std::size_t> labels;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string col;
        for (std::size_t f = 0; f < dim; ++f) {
            if (!std::getline(ss, col, ',')) throw ConfigError("from_csv: short row in " + path);
            values.push_back(std::stod(col));
        }
        if (!std::getline(ss, col, ',')) throw ConfigError("from_csv: missing label in " + path);
        labels.push_back(static_cast<std::size_t>(std::stoul(col)));
        ++rows;
    }
    Dataset ds;
    ds.name = name;
    ds.features = Matrix(rows, dim);
    ds.features.data = std::move(values);
    ds.labels = std::move(labels);
    ds.num_classes = ds.labels.empty() ? 0 : *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
    return ds;
}

std::uint64_t hash_shard(const Dataset& dataset, const std::vector<std::size_t>& rows) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t row : rows) {
        h = hash_doubles(&dataset.features.data[row * dataset.dim()], dataset.dim(), h);
        const double lbl = static_cast<double>(dataset.labels[row]);
        h = hash_doubles(&lbl, 1, h);
    }
    return h;
}

}  // namespace snakesim::data
