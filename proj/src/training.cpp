#include "kgcn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace kgcn {

const char* to_string(OptimizerKind o) { return o == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    throw std::invalid_argument("unknown optimizer '" + s + "' (expected sgd|adam)");
}

void TrainConfig::validate() const {
    // learning rate 0 is allowed: it must leave parameters untouched
    if (learning_rate < 0.0) throw std::invalid_argument("train config: negative learning rate");
    if (epochs == 0) throw std::invalid_argument("train config: epochs must be >= 1");
}

namespace {

std::vector<int> predictions(const Matrix& logits) {
    std::vector<int> out(logits.rows, 0);
    for (std::size_t v = 0; v < logits.rows; ++v) {
        std::size_t best = 0;
        for (std::size_t f = 1; f < logits.cols; ++f)
            if (logits.at(v, f) > logits.at(v, best)) best = f;  // ties keep the lowest class
        out[v] = static_cast<int>(best);
    }
    return out;
}

double masked_accuracy(const Matrix& logits, const std::vector<int>& labels,
                       const std::vector<bool>& mask) {
    const auto preds = predictions(logits);
    std::size_t total = 0;
    std::size_t hits = 0;
    for (std::size_t v = 0; v < mask.size(); ++v) {
        if (!mask[v]) continue;
        ++total;
        if (preds[v] == labels[v]) ++hits;
    }
    if (total == 0) throw std::invalid_argument("accuracy: empty mask");
    return static_cast<double>(hits) / static_cast<double>(total);
}

double filter_penalty(const std::vector<LayerParams>& params, double l2) {
    if (l2 == 0.0) return 0.0;
    double sq = 0.0;
    for (const auto& p : params)
        for (double w : p.filters.data) sq += w * w;
    return l2 * sq;
}

struct AdamState {
    std::vector<LayerGrads> m;
    std::vector<LayerGrads> v;
};

AdamState make_adam_state(const std::vector<LayerParams>& params) {
    AdamState st;
    st.m.resize(params.size());
    st.v.resize(params.size());
    for (std::size_t l = 0; l < params.size(); ++l) {
        st.m[l].filters = Tensor3(params[l].filters.d0, params[l].filters.d1, params[l].filters.d2);
        st.m[l].bias.assign(params[l].bias.size(), 0.0);
        st.v[l] = st.m[l];
    }
    return st;
}

void apply_update(std::vector<LayerParams>& params, const std::vector<LayerGrads>& grads,
                  const TrainConfig& tc, AdamState& adam, std::size_t step_index) {
    const double lr = tc.learning_rate;
    if (tc.optimizer == OptimizerKind::sgd) {
        for (std::size_t l = 0; l < params.size(); ++l) {
            for (std::size_t i = 0; i < params[l].filters.data.size(); ++i)
                params[l].filters.data[i] -= lr * grads[l].filters.data[i];
            for (std::size_t i = 0; i < params[l].bias.size(); ++i)
                params[l].bias[i] -= lr * grads[l].bias[i];
        }
        return;
    }
    const auto t = static_cast<double>(step_index);
    const double correction1 = 1.0 - std::pow(tc.beta1, t);
    const double correction2 = 1.0 - std::pow(tc.beta2, t);
    auto adam_step = [&](double& theta, double& m, double& v, double g) {
        m = tc.beta1 * m + (1.0 - tc.beta1) * g;
        v = tc.beta2 * v + (1.0 - tc.beta2) * g * g;
        const double mhat = m / correction1;
        const double vhat = v / correction2;
        theta -= lr * mhat / (std::sqrt(vhat) + tc.epsilon);
    };
    for (std::size_t l = 0; l < params.size(); ++l) {
        for (std::size_t i = 0; i < params[l].filters.data.size(); ++i)
            adam_step(params[l].filters.data[i], adam.m[l].filters.data[i],
                      adam.v[l].filters.data[i], grads[l].filters.data[i]);
        for (std::size_t i = 0; i < params[l].bias.size(); ++i)
            adam_step(params[l].bias[i], adam.m[l].bias[i], adam.v[l].bias[i], grads[l].bias[i]);
    }
}

}  // namespace

TrainResult train(const ModelConfig& model_config, const TrainConfig& train_config,
                  const Dataset& dataset, const PartitionSet& ps) {
    model_config.validate();
    train_config.validate();
    dataset.validate();
    ps.require_matches(dataset.graph);

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<LayerParams> params = init_params(model_config, dataset.features.cols);
    AdamState adam = make_adam_state(params);

    bool has_val = false;
    for (bool m : dataset.val_mask) has_val = has_val || m;

    TrainResult result;
    result.report.train_loss.reserve(train_config.epochs);
    result.report.train_accuracy.reserve(train_config.epochs);
    result.report.val_accuracy.reserve(train_config.epochs);

    std::vector<LayerParams> best_params = params;
    double best_val = -1.0;

    for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
        ForwardCache cache;
        const Matrix logits = network_forward(model_config, dataset.features, ps, params, &cache);
        LossResult loss = softmax_cross_entropy(logits, dataset.labels, dataset.train_mask);
        const double objective = loss.loss + filter_penalty(params, train_config.l2);
        if (!std::isfinite(objective))
            throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                                     std::to_string(epoch));

        const double train_acc = masked_accuracy(logits, dataset.labels, dataset.train_mask);
        const double val_acc =
            has_val ? masked_accuracy(logits, dataset.labels, dataset.val_mask) : 0.0;
        result.report.train_loss.push_back(objective);
        result.report.train_accuracy.push_back(train_acc);
        result.report.val_accuracy.push_back(val_acc);
        if (has_val && val_acc > best_val) {
            best_val = val_acc;
            best_params = params;
        }

        auto grads = network_backward(model_config, loss.grad_logits, ps, params, cache);
        if (train_config.l2 != 0.0) {
            for (std::size_t l = 0; l < params.size(); ++l)
                for (std::size_t i = 0; i < params[l].filters.data.size(); ++i)
                    grads[l].filters.data[i] += 2.0 * train_config.l2 * params[l].filters.data[i];
        }
        if (!model_config.use_bias)
            for (auto& g : grads) std::fill(g.bias.begin(), g.bias.end(), 0.0);
        apply_update(params, grads, train_config, adam, epoch + 1);
    }

    result.params = has_val ? std::move(best_params) : std::move(params);

    bool has_test = false;
    for (bool m : dataset.test_mask) has_test = has_test || m;
    if (has_test) {
        const Matrix logits = network_forward(model_config, dataset.features, ps, result.params);
        result.report.test_accuracy = masked_accuracy(logits, dataset.labels, dataset.test_mask);
    }
    result.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

double evaluate(const std::vector<LayerParams>& params, const ModelConfig& config,
                const Dataset& dataset, const PartitionSet& ps, const std::vector<bool>& mask) {
    bool any = false;
    for (bool m : mask) any = any || m;
    if (!any) throw std::invalid_argument("evaluate: empty mask");
    ps.require_matches(dataset.graph);
    const Matrix logits = network_forward(config, dataset.features, ps, params);
    return masked_accuracy(logits, dataset.labels, mask);
}

std::string TrainReport::to_json(bool indent) const {
    nlohmann::json doc;
    doc["train_loss"] = train_loss;
    doc["train_accuracy"] = train_accuracy;
    doc["val_accuracy"] = val_accuracy;
    doc["test_accuracy"] = test_accuracy;
    return indent ? doc.dump(1) : doc.dump();
}

std::string TrainReport::to_table() const {
    std::ostringstream out;
    out << "epoch\ttrain_loss\ttrain_acc\tval_acc\n";
    out.precision(17);
    for (std::size_t e = 0; e < train_loss.size(); ++e)
        out << e << '\t' << train_loss[e] << '\t' << train_accuracy[e] << '\t' << val_accuracy[e]
            << '\n';
    out << "test_accuracy\t" << test_accuracy << '\n';
    return out.str();
}

TrainConfig train_config_from_json_text(const std::string& text) {
    const auto doc = nlohmann::json::parse(text);
    TrainConfig tc;
    if (doc.contains("learning_rate")) tc.learning_rate = doc.at("learning_rate").get<double>();
    if (doc.contains("epochs")) tc.epochs = doc.at("epochs").get<std::size_t>();
    if (doc.contains("optimizer"))
        tc.optimizer = optimizer_from_string(doc.at("optimizer").get<std::string>());
    if (doc.contains("beta1")) tc.beta1 = doc.at("beta1").get<double>();
    if (doc.contains("beta2")) tc.beta2 = doc.at("beta2").get<double>();
    if (doc.contains("epsilon")) tc.epsilon = doc.at("epsilon").get<double>();
    if (doc.contains("l2")) tc.l2 = doc.at("l2").get<double>();
    if (doc.contains("seed")) tc.seed = doc.at("seed").get<std::uint64_t>();
    tc.validate();
    return tc;
}

}  // namespace kgcn
