#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgcn/model.hpp"

namespace kgcn {

enum class OptimizerKind { sgd, adam };

const char* to_string(OptimizerKind o);
OptimizerKind optimizer_from_string(const std::string& s);

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t epochs = 100;
    OptimizerKind optimizer = OptimizerKind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double l2 = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Per-epoch metrics recorded before each parameter update, plus the test
/// accuracy of the best-validation checkpoint. wall_seconds is measurement,
/// not payload: report equality and the serialized metric files exclude it
/// so identical seeds reproduce identical reports.
struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> train_accuracy;
    std::vector<double> val_accuracy;
    double test_accuracy = 0.0;
    double wall_seconds = 0.0;

    friend bool operator==(const TrainReport& a, const TrainReport& b) {
        return a.train_loss == b.train_loss && a.train_accuracy == b.train_accuracy &&
               a.val_accuracy == b.val_accuracy && a.test_accuracy == b.test_accuracy;
    }

    std::string to_json(bool indent = true) const;
    std::string to_table() const;
};

struct TrainResult {
    std::vector<LayerParams> params;  // best-validation checkpoint
    TrainReport report;
};

/// Full-batch gradient descent on masked cross-entropy plus l2 * |filters|^2.
/// Deterministic given the seeds; aborts with a diagnostic if the loss
/// becomes non-finite. An empty validation mask records 0 accuracy and
/// retains the final-epoch parameters.
TrainResult train(const ModelConfig& model_config, const TrainConfig& train_config,
                  const Dataset& dataset, const PartitionSet& ps);

/// Argmax-logit accuracy over the masked nodes (ties to the lowest class).
double evaluate(const std::vector<LayerParams>& params, const ModelConfig& config,
                const Dataset& dataset, const PartitionSet& ps, const std::vector<bool>& mask);

TrainConfig train_config_from_json_text(const std::string& text);

}  // namespace kgcn
