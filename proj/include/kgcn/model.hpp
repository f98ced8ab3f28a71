#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgcn/aggregation.hpp"
#include "kgcn/graph.hpp"
#include "kgcn/partition.hpp"

namespace kgcn {

/// k filters of shape (attributes x components) plus one bias per filter.
struct LayerParams {
    Tensor3 filters;  // (k, a, c)
    std::vector<double> bias;

    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

enum class Nonlinearity { relu, none };

const char* to_string(Nonlinearity n);
Nonlinearity nonlinearity_from_string(const std::string& s);

struct ModelConfig {
    std::vector<std::size_t> layer_widths;  // k per layer; last = class count
    std::size_t c = 1;
    std::string labeling = "degree";
    Pooling pooling = Pooling::mean;
    AdjacencyVariant baseline_variant = AdjacencyVariant::rw;  // baseline GCN comparisons only
    Nonlinearity nonlinearity = Nonlinearity::relu;
    bool use_bias = true;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Applies the k 2-D filters to every node's aggregate matrix:
/// H(v, f) = sum_{i,j} filters(f,i,j) * B(v,i,j) + bias(f).
Matrix kgcn_layer_forward(const AggTensor& b, const LayerParams& params);

struct LayerGrads {
    Tensor3 filters;
    std::vector<double> bias;
};

/// Exact gradients of the bilinear layer map; also returns grad wrt B.
LayerGrads kgcn_layer_backward(const Matrix& grad_h, const AggTensor& b,
                               const LayerParams& params, Tensor3& grad_b_out);

/// Baseline pre-activation A_hat * H * W.
Matrix gcn_layer_forward(const NormalizedAdjacency& a_hat, const Matrix& h, const Matrix& w);

Matrix relu_forward(const Matrix& x);
/// grad wrt pre-activation given upstream grad and the pre-activation.
Matrix relu_backward(const Matrix& grad_out, const Matrix& pre);

struct LossResult {
    double loss = 0.0;
    Matrix grad_logits;
};

/// Mean cross-entropy over masked nodes; softmax uses a max shift.
LossResult softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                                 const std::vector<bool>& mask);

struct ForwardCache {
    std::vector<Matrix> inputs;        // per layer: X fed into aggregate
    std::vector<AggTensor> aggregates; // per layer: B
    std::vector<Matrix> preacts;       // per layer: Z (pre-nonlinearity)
};

/// Alternates aggregate -> filters -> nonlinearity per layer; the same
/// PartitionSet is reused at every layer and the last layer emits raw
/// logits. Throws if partitions don't match the config (labeling, c).
Matrix network_forward(const ModelConfig& config, const Matrix& features, const PartitionSet& ps,
                       const std::vector<LayerParams>& params, ForwardCache* cache = nullptr);
Matrix network_forward(const ModelConfig& config, const Dataset& dataset, const PartitionSet& ps,
                       const std::vector<LayerParams>& params, ForwardCache* cache = nullptr);

/// Backpropagates grad_logits through the cached forward pass; returns
/// per-layer parameter gradients.
std::vector<LayerGrads> network_backward(const ModelConfig& config, const Matrix& grad_logits,
                                         const PartitionSet& ps,
                                         const std::vector<LayerParams>& params,
                                         const ForwardCache& cache);

/// Glorot-style uniform init in [-s, s], s = sqrt(6 / (a*c + k)); biases 0.
std::vector<LayerParams> init_params(const ModelConfig& config, std::size_t input_attributes);

/// Max guarded relative error between analytic parameter gradients of the
/// masked loss and central finite differences. Checks every coordinate, or
/// a seeded subset of at least `min_coords` when there are more.
double gradient_check(const ModelConfig& config, const Dataset& dataset, const PartitionSet& ps,
                      const std::vector<LayerParams>& params, double step,
                      std::size_t min_coords = 200);

/// JSON checkpoint with a config echo; load validates shapes.
void save_checkpoint(const std::string& path, const ModelConfig& config,
                     const std::vector<LayerParams>& params, std::size_t input_attributes);
struct Checkpoint {
    ModelConfig config;
    std::vector<LayerParams> params;
    std::size_t input_attributes = 0;
};
Checkpoint load_checkpoint(const std::string& path);

ModelConfig model_config_from_json_text(const std::string& text);

}  // namespace kgcn
