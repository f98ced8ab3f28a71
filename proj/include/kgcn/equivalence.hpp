#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgcn/dense.hpp"
#include "kgcn/graph.hpp"
#include "kgcn/training.hpp"

namespace kgcn {

/// Dense (height, width, channels) image, row-major.
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    std::vector<double> values;

    Image() = default;
    Image(std::size_t h, std::size_t w, std::size_t c, double fill = 0.0)
        : height(h), width(w), channels(c), values(h * w * c, fill) {}

    double& at(std::size_t r, std::size_t c, std::size_t ch) {
        return values[(r * width + c) * channels + ch];
    }
    double at(std::size_t r, std::size_t c, std::size_t ch) const {
        return values[(r * width + c) * channels + ch];
    }
};

/// count filters of size x size taps over `channels` input channels.
struct ConvFilters {
    std::size_t count = 0;
    std::size_t size = 0;
    std::size_t channels = 0;
    std::vector<double> values;

    ConvFilters() = default;
    ConvFilters(std::size_t k, std::size_t s, std::size_t c, double fill = 0.0)
        : count(k), size(s), channels(c), values(k * s * s * c, fill) {}

    double& at(std::size_t f, std::size_t dr, std::size_t dc, std::size_t ch) {
        return values[((f * size + dr) * size + dc) * channels + ch];
    }
    double at(std::size_t f, std::size_t dr, std::size_t dc, std::size_t ch) const {
        return values[((f * size + dr) * size + dc) * channels + ch];
    }
};

/// Valid cross-correlation, stride 1, no padding:
/// out(r, c, f) = sum_{dr, dc, ch} filters(f, dr, dc, ch) * img(r+dr, c+dc, ch).
Image conv2d_reference(const Image& img, const ConvFilters& filters);

struct EquivalenceReport {
    std::size_t height = 0, width = 0, m = 0, filters = 0, channels = 0;
    std::uint64_t seed = 0;
    /// component index -> spatial offset index (dr * (2m-1) + dc)
    std::vector<std::size_t> permutation;
    double max_abs_deviation = 0.0;
    std::vector<double> per_node_deviations;  // one per interior node, row-major

    std::string to_json(bool indent = true) const;
};

/// Grid-convolution equivalence harness: builds a moore grid, computes canonical
/// (2m-1)^2-partitions, derives the component-to-offset permutation from
/// one interior node, and checks that the permuted filters reproduce
/// conv2d_reference at every interior node. Throws with a diagnostic if
/// the canonical partitions are not identical singletons across interior
/// nodes. Only m = 2 is supported (canonicalization cap).
EquivalenceReport verify_grid_equivalence(std::size_t height, std::size_t width, std::size_t m,
                                          std::size_t k, std::uint64_t seed,
                                          std::size_t channels = 1);

/// Directional task on a moore grid: one uniform feature per node; interior
/// nodes are labeled by whether the left neighbor's feature exceeds the
/// right neighbor's. Interior nodes form the train mask.
Dataset make_directional_dataset(std::size_t height, std::size_t width, std::uint64_t seed);

struct ExpressivityReport {
    std::size_t height = 0, width = 0;
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    double c1_train_accuracy = 0.0;    // best epoch, single-aggregate model
    double kgcn_train_accuracy = 0.0;  // best epoch, canonical 9-GCN
    /// max |logits_reflected(v) - logits(mirror(v))| over interior nodes of
    /// the trained c=1 model; its logit field commutes with reflection, so
    /// nodes on the reflection axis (odd widths) keep identical logits.
    double reflection_max_deviation = 0.0;
    bool labels_flip_under_reflection = false;

    std::string to_json(bool indent = true) const;
};

/// Trains the c=1 mean model and the canonical 9-GCN on the directional
/// task with identical budgets and verifies the reflection behavior of the
/// c=1 model's logits.
ExpressivityReport expressivity_demo(std::size_t height, std::size_t width, std::uint64_t seed,
                                     std::size_t epochs = 500);

}  // namespace kgcn
