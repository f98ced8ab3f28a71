#include "kgcn/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "kgcn/labeling.hpp"
#include "kgcn/rng.hpp"

namespace kgcn {

const char* to_string(Nonlinearity n) { return n == Nonlinearity::relu ? "relu" : "none"; }

Nonlinearity nonlinearity_from_string(const std::string& s) {
    if (s == "relu") return Nonlinearity::relu;
    if (s == "none") return Nonlinearity::none;
    throw std::invalid_argument("unknown nonlinearity '" + s + "' (expected relu|none)");
}

void ModelConfig::validate() const {
    if (layer_widths.empty()) throw std::invalid_argument("model config: at least one layer required");
    for (std::size_t k : layer_widths)
        if (k == 0) throw std::invalid_argument("model config: zero-width layer");
    if (c == 0) throw std::invalid_argument("model config: c must be >= 1");
    if (!is_known_labeling(labeling))
        throw std::invalid_argument("model config: unknown labeling '" + labeling + "'");
}

Matrix kgcn_layer_forward(const AggTensor& b, const LayerParams& params) {
    const std::size_t n = b.values.d0;
    const std::size_t a = b.values.d1;
    const std::size_t c = b.values.d2;
    const std::size_t k = params.filters.d0;
    require(params.filters.d1 == a && params.filters.d2 == c,
            "kgcn_layer_forward: filter shape does not match aggregate tensor");
    require(params.bias.size() == k, "kgcn_layer_forward: bias size mismatch");

    Matrix h(n, k);
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t f = 0; f < k; ++f) {
            double acc = 0.0;
            for (std::size_t i = 0; i < a; ++i)
                for (std::size_t j = 0; j < c; ++j)
                    acc += params.filters.at(f, i, j) * b.values.at(v, i, j);
            h.at(v, f) = acc + params.bias[f];
        }
    }
    return h;
}

LayerGrads kgcn_layer_backward(const Matrix& grad_h, const AggTensor& b,
                               const LayerParams& params, Tensor3& grad_b_out) {
    const std::size_t n = b.values.d0;
    const std::size_t a = b.values.d1;
    const std::size_t c = b.values.d2;
    const std::size_t k = params.filters.d0;
    require(grad_h.rows == n && grad_h.cols == k, "kgcn_layer_backward: gradient shape mismatch");
    require(params.filters.d1 == a && params.filters.d2 == c,
            "kgcn_layer_backward: filter shape mismatch");

    LayerGrads grads;
    grads.filters = Tensor3(k, a, c, 0.0);
    grads.bias.assign(k, 0.0);
    grad_b_out = Tensor3(n, a, c, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t f = 0; f < k; ++f) {
            const double g = grad_h.at(v, f);
            if (g == 0.0) continue;
            grads.bias[f] += g;
            for (std::size_t i = 0; i < a; ++i) {
                for (std::size_t j = 0; j < c; ++j) {
                    grads.filters.at(f, i, j) += g * b.values.at(v, i, j);
                    grad_b_out.at(v, i, j) += g * params.filters.at(f, i, j);
                }
            }
        }
    }
    return grads;
}

Matrix gcn_layer_forward(const NormalizedAdjacency& a_hat, const Matrix& h, const Matrix& w) {
    require(h.rows == a_hat.n, "gcn_layer_forward: feature rows do not match adjacency");
    require(h.cols == w.rows, "gcn_layer_forward: weight shape mismatch");
    const Matrix ah = a_hat.multiply(h);
    Matrix out(h.rows, w.cols);
    for (std::size_t v = 0; v < ah.rows; ++v)
        for (std::size_t f = 0; f < w.cols; ++f) {
            double acc = 0.0;
            for (std::size_t i = 0; i < ah.cols; ++i) acc += ah.at(v, i) * w.at(i, f);
            out.at(v, f) = acc;
        }
    return out;
}

Matrix relu_forward(const Matrix& x) {
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i) out.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
    return out;
}

Matrix relu_backward(const Matrix& grad_out, const Matrix& pre) {
    require(grad_out.same_shape(pre), "relu_backward: shape mismatch");
    Matrix grad(pre.rows, pre.cols);
    for (std::size_t i = 0; i < pre.data.size(); ++i)
        grad.data[i] = pre.data[i] > 0.0 ? grad_out.data[i] : 0.0;
    return grad;
}

LossResult softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                                 const std::vector<bool>& mask) {
    require(labels.size() == logits.rows, "softmax_cross_entropy: label count mismatch");
    require(mask.size() == logits.rows, "softmax_cross_entropy: mask length mismatch");
    std::size_t masked = 0;
    for (bool m : mask) masked += m ? 1 : 0;
    if (masked == 0) throw std::invalid_argument("softmax_cross_entropy: empty mask");

    LossResult result;
    result.grad_logits = Matrix(logits.rows, logits.cols, 0.0);
    const double inv = 1.0 / static_cast<double>(masked);
    double loss = 0.0;
    for (std::size_t v = 0; v < logits.rows; ++v) {
        if (!mask[v]) continue;
        const int label = labels[v];
        require(label >= 0 && static_cast<std::size_t>(label) < logits.cols,
                "softmax_cross_entropy: masked node without valid label");
        double top = logits.at(v, 0);
        for (std::size_t f = 1; f < logits.cols; ++f) top = std::max(top, logits.at(v, f));
        double denom = 0.0;
        for (std::size_t f = 0; f < logits.cols; ++f) denom += std::exp(logits.at(v, f) - top);
        const double log_denom = std::log(denom);
        loss += inv * (log_denom - (logits.at(v, static_cast<std::size_t>(label)) - top));
        for (std::size_t f = 0; f < logits.cols; ++f) {
            const double p = std::exp(logits.at(v, f) - top) / denom;
            result.grad_logits.at(v, f) =
                inv * (p - (static_cast<std::size_t>(label) == f ? 1.0 : 0.0));
        }
    }
    result.loss = loss;
    return result;
}

namespace {

void check_partition_compat(const ModelConfig& config, const PartitionSet& ps) {
    if (ps.c != config.c)
        throw std::invalid_argument("network_forward: partition c=" + std::to_string(ps.c) +
                                    " does not match config c=" + std::to_string(config.c));
    if (ps.labeling != config.labeling)
        throw std::invalid_argument("network_forward: partition labeling '" + ps.labeling +
                                    "' does not match config labeling '" + config.labeling + "'");
}

}  // namespace

Matrix network_forward(const ModelConfig& config, const Matrix& features, const PartitionSet& ps,
                       const std::vector<LayerParams>& params, ForwardCache* cache) {
    config.validate();
    check_partition_compat(config, ps);
    require(params.size() == config.layer_widths.size(),
            "network_forward: parameter count does not match layer count");

    if (cache) {
        cache->inputs.clear();
        cache->aggregates.clear();
        cache->preacts.clear();
    }
    Matrix x = features;
    Matrix z;
    for (std::size_t l = 0; l < params.size(); ++l) {
        AggTensor b = aggregate(x, ps, config.pooling);
        z = kgcn_layer_forward(b, params[l]);
        if (cache) {
            cache->inputs.push_back(std::move(x));
            cache->aggregates.push_back(std::move(b));
            cache->preacts.push_back(z);
        }
        const bool last = l + 1 == params.size();
        x = (!last && config.nonlinearity == Nonlinearity::relu) ? relu_forward(z) : z;
    }
    return z;
}

Matrix network_forward(const ModelConfig& config, const Dataset& dataset, const PartitionSet& ps,
                       const std::vector<LayerParams>& params, ForwardCache* cache) {
    ps.require_matches(dataset.graph);
    return network_forward(config, dataset.features, ps, params, cache);
}

std::vector<LayerGrads> network_backward(const ModelConfig& config, const Matrix& grad_logits,
                                         const PartitionSet& ps,
                                         const std::vector<LayerParams>& params,
                                         const ForwardCache& cache) {
    const std::size_t layers = params.size();
    require(cache.inputs.size() == layers && cache.aggregates.size() == layers &&
                cache.preacts.size() == layers,
            "network_backward: cache does not match layer count");

    std::vector<LayerGrads> grads(layers);
    Matrix grad_z = grad_logits;
    for (std::size_t l = layers; l-- > 0;) {
        Tensor3 grad_b;
        grads[l] = kgcn_layer_backward(grad_z, cache.aggregates[l], params[l], grad_b);
        if (l == 0) break;
        Matrix grad_x = aggregate_backward(grad_b, ps, config.pooling, cache.inputs[l]);
        grad_z = config.nonlinearity == Nonlinearity::relu
                     ? relu_backward(grad_x, cache.preacts[l - 1])
                     : std::move(grad_x);
    }
    return grads;
}

std::vector<LayerParams> init_params(const ModelConfig& config, std::size_t input_attributes) {
    config.validate();
    Rng rng(config.seed);
    std::vector<LayerParams> params;
    params.reserve(config.layer_widths.size());
    std::size_t a = input_attributes;
    for (std::size_t k : config.layer_widths) {
        const double s = std::sqrt(6.0 / (static_cast<double>(a * config.c) + static_cast<double>(k)));
        LayerParams p;
        p.filters = Tensor3(k, a, config.c);
        for (double& w : p.filters.data) w = rng.uniform(-s, s);
        p.bias.assign(k, 0.0);
        params.push_back(std::move(p));
        a = k;
    }
    return params;
}

double gradient_check(const ModelConfig& config, const Dataset& dataset, const PartitionSet& ps,
                      const std::vector<LayerParams>& params, double step,
                      std::size_t min_coords) {
    require(step > 0.0, "gradient_check: step must be positive");
    ForwardCache cache;
    const Matrix logits = network_forward(config, dataset, ps, params, &cache);
    const LossResult loss = softmax_cross_entropy(logits, dataset.labels, dataset.train_mask);
    const auto analytic = network_backward(config, loss.grad_logits, ps, params, cache);

    struct Coord {
        std::size_t layer;
        bool is_bias;
        std::size_t index;
    };
    std::vector<Coord> coords;
    for (std::size_t l = 0; l < params.size(); ++l) {
        for (std::size_t i = 0; i < params[l].filters.data.size(); ++i)
            coords.push_back({l, false, i});
        if (config.use_bias)
            for (std::size_t i = 0; i < params[l].bias.size(); ++i) coords.push_back({l, true, i});
    }
    if (coords.size() > min_coords) {
        // seeded subset, keeping at least min_coords coordinates
        Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
        std::vector<Coord> subset;
        subset.reserve(min_coords);
        std::vector<std::size_t> order(coords.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = 0; i < min_coords; ++i) {
            const std::size_t j = i + rng.next_below(order.size() - i);
            std::swap(order[i], order[j]);
            subset.push_back(coords[order[i]]);
        }
        coords = std::move(subset);
    }

    auto loss_at = [&](const std::vector<LayerParams>& p) {
        const Matrix lg = network_forward(config, dataset.features, ps, p);
        return softmax_cross_entropy(lg, dataset.labels, dataset.train_mask).loss;
    };

    std::vector<LayerParams> probe = params;
    double worst = 0.0;
    for (const Coord& c : coords) {
        double& slot = c.is_bias ? probe[c.layer].bias[c.index] : probe[c.layer].filters.data[c.index];
        const double saved = slot;
        slot = saved + step;
        const double up = loss_at(probe);
        slot = saved - step;
        const double down = loss_at(probe);
        slot = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double exact = c.is_bias ? analytic[c.layer].bias[c.index]
                                       : analytic[c.layer].filters.data[c.index];
        // guarded: tiny gradients are judged on absolute error
        const double rel = std::abs(exact - numeric) /
                           std::max({1.0, std::abs(exact), std::abs(numeric)});
        worst = std::max(worst, rel);
    }
    return worst;
}

namespace {

nlohmann::json config_to_json(const ModelConfig& config) {
    return {{"layers", config.layer_widths},
            {"c", config.c},
            {"labeling", config.labeling},
            {"pooling", to_string(config.pooling)},
            {"adjacency", to_string(config.baseline_variant)},
            {"nonlinearity", to_string(config.nonlinearity)},
            {"bias", config.use_bias},
            {"seed", config.seed}};
}

ModelConfig config_from_json(const nlohmann::json& doc) {
    ModelConfig config;
    config.layer_widths = doc.at("layers").get<std::vector<std::size_t>>();
    config.c = doc.at("c").get<std::size_t>();
    config.labeling = doc.at("labeling").get<std::string>();
    config.pooling = pooling_from_string(doc.at("pooling").get<std::string>());
    if (doc.contains("adjacency"))
        config.baseline_variant = adjacency_variant_from_string(doc.at("adjacency").get<std::string>());
    if (doc.contains("nonlinearity"))
        config.nonlinearity = nonlinearity_from_string(doc.at("nonlinearity").get<std::string>());
    if (doc.contains("bias")) config.use_bias = doc.at("bias").get<bool>();
    if (doc.contains("seed")) config.seed = doc.at("seed").get<std::uint64_t>();
    config.validate();
    return config;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& config,
                     const std::vector<LayerParams>& params, std::size_t input_attributes) {
    nlohmann::json doc;
    doc["config"] = config_to_json(config);
    doc["input_attributes"] = input_attributes;
    auto& layers = doc["layers"] = nlohmann::json::array();
    for (const auto& p : params) {
        layers.push_back({{"k", p.filters.d0},
                          {"a", p.filters.d1},
                          {"c", p.filters.d2},
                          {"filters", p.filters.data},
                          {"bias", p.bias}});
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << doc.dump(1) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path + ": parse error: " + e.what());
    }
    Checkpoint ck;
    try {
        ck.config = config_from_json(doc.at("config"));
        ck.input_attributes = doc.at("input_attributes").get<std::size_t>();
        std::size_t a = ck.input_attributes;
        for (const auto& layer : doc.at("layers")) {
            LayerParams p;
            const auto k = layer.at("k").get<std::size_t>();
            const auto la = layer.at("a").get<std::size_t>();
            const auto lc = layer.at("c").get<std::size_t>();
            if (la != a || lc != ck.config.c)
                throw std::runtime_error("checkpoint layer shape does not match config");
            p.filters = Tensor3(k, la, lc);
            const auto flat = layer.at("filters").get<std::vector<double>>();
            if (flat.size() != p.filters.data.size())
                throw std::runtime_error("checkpoint filter array has wrong length");
            p.filters.data = flat;
            p.bias = layer.at("bias").get<std::vector<double>>();
            if (p.bias.size() != k) throw std::runtime_error("checkpoint bias array has wrong length");
            ck.params.push_back(std::move(p));
            a = k;
        }
        if (ck.params.size() != ck.config.layer_widths.size())
            throw std::runtime_error("checkpoint layer count does not match config");
        for (std::size_t l = 0; l < ck.params.size(); ++l)
            if (ck.params[l].filters.d0 != ck.config.layer_widths[l])
                throw std::runtime_error("checkpoint layer width does not match config");
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": malformed checkpoint: " + e.what());
    }
    return ck;
}

ModelConfig model_config_from_json_text(const std::string& text) {
    return config_from_json(nlohmann::json::parse(text));
}

}  // namespace kgcn
