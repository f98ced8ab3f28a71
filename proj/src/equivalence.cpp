#include "kgcn/equivalence.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "kgcn/aggregation.hpp"
#include "kgcn/model.hpp"
#include "kgcn/rng.hpp"

namespace kgcn {

Image conv2d_reference(const Image& img, const ConvFilters& filters) {
    require(filters.channels == img.channels, "conv2d_reference: channel mismatch");
    require(filters.size >= 1, "conv2d_reference: empty filter");
    if (img.height < filters.size || img.width < filters.size)
        throw std::invalid_argument("conv2d_reference: image smaller than the receptive field");

    const std::size_t out_h = img.height - filters.size + 1;
    const std::size_t out_w = img.width - filters.size + 1;
    Image out(out_h, out_w, filters.count);
    for (std::size_t r = 0; r < out_h; ++r)
        for (std::size_t c = 0; c < out_w; ++c)
            for (std::size_t f = 0; f < filters.count; ++f) {
                double acc = 0.0;
                for (std::size_t dr = 0; dr < filters.size; ++dr)
                    for (std::size_t dc = 0; dc < filters.size; ++dc)
                        for (std::size_t ch = 0; ch < img.channels; ++ch)
                            acc += filters.at(f, dr, dc, ch) * img.at(r + dr, c + dc, ch);
                out.at(r, c, f) = acc;
            }
    return out;
}

namespace {

Matrix image_to_features(const Image& img) {
    Matrix x(img.height * img.width, img.channels);
    for (std::size_t r = 0; r < img.height; ++r)
        for (std::size_t c = 0; c < img.width; ++c)
            for (std::size_t ch = 0; ch < img.channels; ++ch)
                x.at(r * img.width + c, ch) = img.at(r, c, ch);
    return x;
}

std::string dump_partition(const Partition& p) {
    std::ostringstream out;
    out << "node " << p.center << ": [";
    for (std::size_t j = 0; j < p.components.size(); ++j) {
        if (j) out << ", ";
        out << "{";
        for (std::size_t i = 0; i < p.components[j].size(); ++i) {
            if (i) out << " ";
            out << p.components[j][i];
        }
        out << "}";
    }
    out << "]";
    return out.str();
}

}  // namespace

EquivalenceReport verify_grid_equivalence(std::size_t height, std::size_t width, std::size_t m,
                                          std::size_t k, std::uint64_t seed,
                                          std::size_t channels) {
    if (m != 2)
        throw std::invalid_argument(
            "verify_grid_equivalence: only m = 2 is supported (the canonicalization cap limits "
            "the receptive field to 3x3)");
    const std::size_t side = 2 * m - 1;          // 3
    const std::size_t c = side * side;           // 9
    if (height < 2 * m || width < 2 * m)
        throw std::invalid_argument("verify_grid_equivalence: grid must be at least 2m on each side");
    if (k == 0) throw std::invalid_argument("verify_grid_equivalence: k must be >= 1");
    if (channels == 0) throw std::invalid_argument("verify_grid_equivalence: channels must be >= 1");

    const Graph grid = grid_graph(height, width, GridConnectivity::moore);
    const PartitionSet ps = partition_all(grid, "canonical", c);

    // Every interior closed neighborhood must split into 9 singletons with
    // one shared component-to-offset layout.
    auto offset_of = [&](NodeId center, NodeId member) {
        const long long dr = static_cast<long long>(member / width) -
                             static_cast<long long>(center / width) + static_cast<long long>(m) - 1;
        const long long dc = static_cast<long long>(member % width) -
                             static_cast<long long>(center % width) + static_cast<long long>(m) - 1;
        return static_cast<std::size_t>(dr) * side + static_cast<std::size_t>(dc);
    };
    std::vector<std::size_t> permutation;  // component -> offset, from the first interior node
    for (std::size_t r = 1; r + 1 < height; ++r) {
        for (std::size_t col = 1; col + 1 < width; ++col) {
            const auto v = static_cast<NodeId>(r * width + col);
            const Partition& p = ps.partitions[v];
            std::vector<std::size_t> layout(c);
            for (std::size_t j = 0; j < c; ++j) {
                if (p.components[j].size() != 1)
                    throw std::runtime_error(
                        "verify_grid_equivalence: interior canonical partition is not all "
                        "singletons; " + dump_partition(p));
                layout[j] = offset_of(v, p.components[j][0]);
            }
            if (permutation.empty()) {
                permutation = layout;
            } else if (layout != permutation) {
                throw std::runtime_error(
                    "verify_grid_equivalence: no single component permutation fits all interior "
                    "nodes; offending " + dump_partition(p));
            }
        }
    }

    Rng rng(seed);
    Image img(height, width, channels);
    for (double& x : img.values) x = rng.uniform(-1.0, 1.0);
    ConvFilters filters(k, side, channels);
    for (double& w : filters.values) w = rng.uniform(-1.0, 1.0);

    // Re-index the conv taps by the component-to-offset permutation.
    LayerParams layer;
    layer.filters = Tensor3(k, channels, c);
    layer.bias.assign(k, 0.0);
    for (std::size_t f = 0; f < k; ++f)
        for (std::size_t ch = 0; ch < channels; ++ch)
            for (std::size_t j = 0; j < c; ++j) {
                const std::size_t off = permutation[j];
                layer.filters.at(f, ch, j) = filters.at(f, off / side, off % side, ch);
            }

    const AggTensor b = aggregate(image_to_features(img), ps, Pooling::mean);
    const Matrix h = kgcn_layer_forward(b, layer);
    const Image reference = conv2d_reference(img, filters);

    EquivalenceReport report;
    report.height = height;
    report.width = width;
    report.m = m;
    report.filters = k;
    report.channels = channels;
    report.seed = seed;
    report.permutation = permutation;
    for (std::size_t r = 1; r + 1 < height; ++r) {
        for (std::size_t col = 1; col + 1 < width; ++col) {
            const auto v = static_cast<NodeId>(r * width + col);
            double dev = 0.0;
            for (std::size_t f = 0; f < k; ++f)
                dev = std::max(dev, std::abs(h.at(v, f) - reference.at(r - 1, col - 1, f)));
            report.per_node_deviations.push_back(dev);
            report.max_abs_deviation = std::max(report.max_abs_deviation, dev);
        }
    }
    return report;
}

std::string EquivalenceReport::to_json(bool indent) const {
    nlohmann::json doc;
    doc["height"] = height;
    doc["width"] = width;
    doc["m"] = m;
    doc["filters"] = filters;
    doc["channels"] = channels;
    doc["seed"] = seed;
    doc["permutation"] = permutation;
    doc["max_abs_deviation"] = max_abs_deviation;
    doc["per_node_deviations"] = per_node_deviations;
    return indent ? doc.dump(1) : doc.dump();
}

Dataset make_directional_dataset(std::size_t height, std::size_t width, std::uint64_t seed) {
    if (height < 3 || width < 3)
        throw std::invalid_argument("directional task needs a grid of at least 3x3");
    Dataset ds;
    ds.graph = grid_graph(height, width, GridConnectivity::moore);
    const std::size_t n = height * width;
    ds.features = Matrix(n, 1);
    Rng rng(seed);
    for (double& x : ds.features.data) x = rng.uniform(0.0, 1.0);
    ds.labels.assign(n, -1);
    ds.train_mask.assign(n, false);
    ds.val_mask.assign(n, false);
    ds.test_mask.assign(n, false);
    for (std::size_t r = 1; r + 1 < height; ++r) {
        for (std::size_t c = 1; c + 1 < width; ++c) {
            const std::size_t v = r * width + c;
            const double left = ds.features.at(v - 1, 0);
            const double right = ds.features.at(v + 1, 0);
            ds.labels[v] = left > right ? 1 : 0;
            ds.train_mask[v] = true;
        }
    }
    ds.validate();
    return ds;
}

namespace {

double best_train_accuracy(const TrainReport& report) {
    double best = 0.0;
    for (double a : report.train_accuracy) best = std::max(best, a);
    return best;
}

}  // namespace

ExpressivityReport expressivity_demo(std::size_t height, std::size_t width, std::uint64_t seed,
                                     std::size_t epochs) {
    if (height < 4 || width < 4)
        throw std::invalid_argument("expressivity_demo: grid must be at least 4x4");

    const Dataset dataset = make_directional_dataset(height, width, seed);

    ModelConfig c1;
    c1.layer_widths = {2};
    c1.c = 1;
    c1.labeling = "degree";
    c1.pooling = Pooling::mean;
    c1.nonlinearity = Nonlinearity::none;
    c1.seed = seed;

    ModelConfig kgcn9;
    kgcn9.layer_widths = {2};
    kgcn9.c = 9;
    kgcn9.labeling = "canonical";
    kgcn9.pooling = Pooling::mean;
    kgcn9.nonlinearity = Nonlinearity::none;
    kgcn9.seed = seed;

    TrainConfig tc;
    tc.learning_rate = 0.1;
    tc.epochs = epochs;
    tc.optimizer = OptimizerKind::adam;
    tc.seed = seed;

    const PartitionSet ps1 = partition_all(dataset.graph, c1.labeling, c1.c);
    const PartitionSet ps9 = partition_all(dataset.graph, kgcn9.labeling, kgcn9.c);
    const TrainResult r1 = train(c1, tc, dataset, ps1);
    const TrainResult r9 = train(kgcn9, tc, dataset, ps9);

    ExpressivityReport report;
    report.height = height;
    report.width = width;
    report.seed = seed;
    report.epochs = epochs;
    report.c1_train_accuracy = best_train_accuracy(r1.report);
    report.kgcn_train_accuracy = best_train_accuracy(r9.report);

    // Horizontal reflection: mirror(r, c) = (r, width-1-c). The c=1 model's
    // logit field must commute with it, while the directional labels flip.
    auto mirror = [&](std::size_t v) {
        const std::size_t r = v / width;
        const std::size_t c = v % width;
        return r * width + (width - 1 - c);
    };
    Dataset reflected = dataset;
    for (std::size_t v = 0; v < height * width; ++v)
        reflected.features.at(v, 0) = dataset.features.at(mirror(v), 0);
    for (std::size_t r = 1; r + 1 < height; ++r) {
        for (std::size_t c = 1; c + 1 < width; ++c) {
            const std::size_t v = r * width + c;
            const double left = reflected.features.at(v - 1, 0);
            const double right = reflected.features.at(v + 1, 0);
            reflected.labels[v] = left > right ? 1 : 0;
        }
    }

    const Matrix base_logits = network_forward(c1, dataset.features, ps1, r1.params);
    const Matrix refl_logits = network_forward(c1, reflected.features, ps1, r1.params);
    double max_dev = 0.0;
    bool flips = true;
    for (std::size_t r = 1; r + 1 < height; ++r) {
        for (std::size_t c = 1; c + 1 < width; ++c) {
            const std::size_t v = r * width + c;
            const std::size_t w = mirror(v);
            for (std::size_t f = 0; f < base_logits.cols; ++f)
                max_dev = std::max(max_dev, std::abs(refl_logits.at(v, f) - base_logits.at(w, f)));
            flips = flips && (reflected.labels[v] == 1 - dataset.labels[w]);
        }
    }
    report.reflection_max_deviation = max_dev;
    report.labels_flip_under_reflection = flips;
    return report;
}

std::string ExpressivityReport::to_json(bool indent) const {
    nlohmann::json doc;
    doc["height"] = height;
    doc["width"] = width;
    doc["seed"] = seed;
    doc["epochs"] = epochs;
    doc["c1_train_accuracy"] = c1_train_accuracy;
    doc["kgcn_train_accuracy"] = kgcn_train_accuracy;
    doc["reflection_max_deviation"] = reflection_max_deviation;
    doc["labels_flip_under_reflection"] = labels_flip_under_reflection;
    return indent ? doc.dump(1) : doc.dump();
}

}  // namespace kgcn
