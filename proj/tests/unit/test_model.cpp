#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <unistd.h>

#include "kgcn/model.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace kgcn;

namespace {

AggTensor wrap(const Tensor3& t, Pooling pooling = Pooling::mean) {
    AggTensor b;
    b.values = t;
    b.pooling = pooling;
    return b;
}

LayerParams make_params(std::size_t k, std::size_t a, std::size_t c, std::uint64_t seed) {
    LayerParams p;
    p.filters = oracles::random_tensor(k, a, c, seed);
    Rng rng(seed ^ 0xabcdef);
    p.bias.resize(k);
    for (double& b : p.bias) b = rng.uniform(-0.5, 0.5);
    return p;
}

ModelConfig two_layer_config(std::size_t c, Pooling pooling, std::uint64_t seed) {
    ModelConfig mc;
    mc.layer_widths = {6, 3};
    mc.c = c;
    mc.labeling = "degree";
    mc.pooling = pooling;
    mc.nonlinearity = Nonlinearity::relu;
    mc.seed = seed;
    return mc;
}

}  // namespace

TEST_CASE("kgcn layer on zero aggregates returns the bias") {
    const LayerParams p = make_params(4, 2, 3, 1);
    const Matrix h = kgcn_layer_forward(wrap(Tensor3(5, 2, 3, 0.0)), p);
    for (std::size_t v = 0; v < 5; ++v)
        for (std::size_t f = 0; f < 4; ++f) CHECK(h.at(v, f) == p.bias[f]);
}

TEST_CASE("one-hot filters read single aggregate entries") {
    const Tensor3 b = oracles::random_tensor(6, 3, 2, 3);
    LayerParams p;
    p.filters = Tensor3(2, 3, 2, 0.0);
    p.filters.at(0, 1, 0) = 1.0;
    p.filters.at(1, 2, 1) = 1.0;
    p.bias = {0.0, 0.0};
    const Matrix h = kgcn_layer_forward(wrap(b), p);
    for (std::size_t v = 0; v < 6; ++v) {
        CHECK(h.at(v, 0) == b.at(v, 1, 0));
        CHECK(h.at(v, 1) == b.at(v, 2, 1));
    }
}

TEST_CASE("kgcn layer matches the triple-loop oracle") {
    const Tensor3 b = oracles::random_tensor(7, 4, 3, 5);
    const LayerParams p = make_params(5, 4, 3, 6);
    const Matrix h = kgcn_layer_forward(wrap(b), p);
    const Matrix expect = oracles::kgcn_layer_bruteforce(b, p.filters, p.bias);
    for (std::size_t i = 0; i < h.data.size(); ++i)
        CHECK(std::abs(h.data[i] - expect.data[i]) <= 1e-12);
}

TEST_CASE("kgcn layer is linear in aggregates and filters") {
    const Tensor3 bx = oracles::random_tensor(5, 3, 2, 11);
    const Tensor3 by = oracles::random_tensor(5, 3, 2, 12);
    LayerParams p = make_params(4, 3, 2, 13);
    std::fill(p.bias.begin(), p.bias.end(), 0.0);

    Tensor3 mix(5, 3, 2);
    for (std::size_t i = 0; i < mix.data.size(); ++i)
        mix.data[i] = 2.0 * bx.data[i] - 0.5 * by.data[i];
    const Matrix hx = kgcn_layer_forward(wrap(bx), p);
    const Matrix hy = kgcn_layer_forward(wrap(by), p);
    const Matrix hmix = kgcn_layer_forward(wrap(mix), p);
    for (std::size_t i = 0; i < hmix.data.size(); ++i)
        CHECK(std::abs(hmix.data[i] - (2.0 * hx.data[i] - 0.5 * hy.data[i])) <= 1e-12);

    LayerParams q = make_params(4, 3, 2, 14);
    std::fill(q.bias.begin(), q.bias.end(), 0.0);
    LayerParams pq = p;
    for (std::size_t i = 0; i < pq.filters.data.size(); ++i)
        pq.filters.data[i] = p.filters.data[i] + q.filters.data[i];
    const Matrix hp = kgcn_layer_forward(wrap(bx), p);
    const Matrix hq = kgcn_layer_forward(wrap(bx), q);
    const Matrix hpq = kgcn_layer_forward(wrap(bx), pq);
    for (std::size_t i = 0; i < hpq.data.size(); ++i)
        CHECK(std::abs(hpq.data[i] - (hp.data[i] + hq.data[i])) <= 1e-12);
}

TEST_CASE("kgcn layer backward: zero upstream gives zero gradients") {
    const Tensor3 b = oracles::random_tensor(4, 2, 2, 21);
    const LayerParams p = make_params(3, 2, 2, 22);
    Tensor3 grad_b;
    const LayerGrads g = kgcn_layer_backward(Matrix(4, 3, 0.0), wrap(b), p, grad_b);
    for (double x : g.filters.data) CHECK(x == 0.0);
    for (double x : g.bias) CHECK(x == 0.0);
    for (double x : grad_b.data) CHECK(x == 0.0);
}

TEST_CASE("kgcn layer backward: scalar chain rule") {
    Tensor3 b(1, 1, 1);
    b.at(0, 0, 0) = 3.0;
    LayerParams p;
    p.filters = Tensor3(1, 1, 1);
    p.filters.at(0, 0, 0) = -2.0;
    p.bias = {0.0};
    Matrix upstream(1, 1);
    upstream.at(0, 0) = 1.5;
    Tensor3 grad_b;
    const LayerGrads g = kgcn_layer_backward(upstream, wrap(b), p, grad_b);
    CHECK(g.filters.at(0, 0, 0) == 1.5 * 3.0);
    CHECK(grad_b.at(0, 0, 0) == 1.5 * -2.0);
    CHECK(g.bias[0] == 1.5);
}

TEST_CASE("kgcn layer backward matches finite differences") {
    const Tensor3 b = oracles::random_tensor(5, 3, 2, 31);
    const LayerParams p = make_params(4, 3, 2, 32);
    const Matrix upstream = oracles::random_matrix(5, 4, 33);

    auto objective_filters = [&](const std::vector<double>& flat) {
        LayerParams probe = p;
        probe.filters.data = flat;
        const Matrix h = kgcn_layer_forward(wrap(b), probe);
        double dot = 0.0;
        for (std::size_t i = 0; i < h.data.size(); ++i) dot += h.data[i] * upstream.data[i];
        return dot;
    };
    Tensor3 grad_b;
    const LayerGrads analytic = kgcn_layer_backward(upstream, wrap(b), p, grad_b);
    const auto numeric = oracles::finite_difference(objective_filters, p.filters.data, 1e-5);
    for (std::size_t i = 0; i < numeric.size(); ++i)
        CHECK(std::abs(analytic.filters.data[i] - numeric[i]) /
                  std::max(1.0, std::abs(numeric[i])) <=
              1e-6);

    auto objective_b = [&](const std::vector<double>& flat) {
        Tensor3 probe = b;
        probe.data = flat;
        const Matrix h = kgcn_layer_forward(wrap(probe), p);
        double dot = 0.0;
        for (std::size_t i = 0; i < h.data.size(); ++i) dot += h.data[i] * upstream.data[i];
        return dot;
    };
    const auto numeric_b = oracles::finite_difference(objective_b, b.data, 1e-5);
    for (std::size_t i = 0; i < numeric_b.size(); ++i)
        CHECK(std::abs(grad_b.data[i] - numeric_b[i]) / std::max(1.0, std::abs(numeric_b[i])) <=
              1e-6);
}

TEST_CASE("gcn layer basics") {
    const Graph single = build_graph({}, 1);
    const auto a = normalized_adjacency(single, AdjacencyVariant::rw);
    Matrix h(1, 2);
    h.at(0, 0) = 2.0;
    h.at(0, 1) = -1.0;
    const Matrix w = oracles::random_matrix(2, 3, 41);
    const Matrix out = gcn_layer_forward(a, h, w);
    for (std::size_t f = 0; f < 3; ++f) {
        double expect = 0.0;
        for (std::size_t i = 0; i < 2; ++i) expect += h.at(0, i) * w.at(i, f);
        CHECK(out.at(0, f) == doctest::Approx(expect).epsilon(1e-15));
    }
}

TEST_CASE("gcn layer with identity weights averages the closed neighborhood") {
    const Graph g = oracles::random_graph(9, 0.4, 43);
    const auto rw = normalized_adjacency(g, AdjacencyVariant::rw);
    const Matrix x = oracles::random_matrix(9, 3, 44);
    Matrix eye(3, 3, 0.0);
    for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
    const Matrix out = gcn_layer_forward(rw, x, eye);
    for (NodeId v = 0; v < 9; ++v) {
        const auto closed = closed_neighborhood(g, v);
        for (std::size_t i = 0; i < 3; ++i) {
            double mean = 0.0;
            for (NodeId u : closed) mean += x.at(u, i);
            mean /= static_cast<double>(closed.size());
            CHECK(out.at(v, i) == doctest::Approx(mean).epsilon(1e-12));
        }
    }
}

TEST_CASE("gcn layer matches the dense oracle") {
    const Graph g = oracles::random_graph(11, 0.3, 45);
    for (auto variant : {AdjacencyVariant::sym, AdjacencyVariant::rw}) {
        const auto a = normalized_adjacency(g, variant);
        const Matrix h = oracles::random_matrix(11, 4, 46);
        const Matrix w = oracles::random_matrix(4, 2, 47);
        const Matrix fast = gcn_layer_forward(a, h, w);
        const Matrix slow = oracles::gcn_layer_bruteforce(a, h, w);
        for (std::size_t i = 0; i < fast.data.size(); ++i)
            CHECK(std::abs(fast.data[i] - slow.data[i]) <= 1e-12);
    }
}

TEST_CASE("softmax cross entropy") {
    // uniform logits: loss = ln(k)
    const Matrix logits(4, 5, 0.3);
    std::vector<int> labels{0, 1, 2, 3};
    std::vector<bool> mask{true, true, true, true};
    const auto result = softmax_cross_entropy(logits, labels, mask);
    CHECK(result.loss == doctest::Approx(std::log(5.0)).epsilon(1e-12));

    // strong correct logit drives the loss to zero
    Matrix strong(1, 2, 0.0);
    strong.at(0, 1) = 50.0;
    const auto low = softmax_cross_entropy(strong, {1}, {true});
    CHECK(low.loss < 1e-15);

    CHECK_THROWS_AS(softmax_cross_entropy(logits, labels, std::vector<bool>(4, false)),
                    std::invalid_argument);
}

TEST_CASE("softmax cross entropy matches the log-sum-exp oracle") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const Matrix logits = oracles::random_matrix(7, 4, 70 + seed, -30.0, 30.0);
        Rng rng(seed);
        std::vector<int> labels(7);
        std::vector<bool> mask(7, false);
        for (std::size_t v = 0; v < 7; ++v) {
            labels[v] = static_cast<int>(rng.next_below(4));
            mask[v] = rng.next_double() < 0.7;
        }
        mask[0] = true;
        const auto result = softmax_cross_entropy(logits, labels, mask);
        const double oracle = oracles::cross_entropy_bruteforce(logits, labels, mask);
        CHECK(std::abs(result.loss - oracle) <= 1e-10);
    }
}

TEST_CASE("softmax gradient matches finite differences") {
    const Matrix logits = oracles::random_matrix(5, 3, 81);
    std::vector<int> labels{0, 2, 1, 2, 0};
    std::vector<bool> mask{true, false, true, true, true};
    const auto result = softmax_cross_entropy(logits, labels, mask);
    auto objective = [&](const std::vector<double>& flat) {
        Matrix probe = logits;
        probe.data = flat;
        return softmax_cross_entropy(probe, labels, mask).loss;
    };
    const auto numeric = oracles::finite_difference(objective, logits.data, 1e-6);
    for (std::size_t i = 0; i < numeric.size(); ++i)
        CHECK(std::abs(result.grad_logits.data[i] - numeric[i]) <= 1e-8);
}

TEST_CASE("one-layer network on zero features emits broadcast biases") {
    const Graph g = oracles::random_graph(6, 0.4, 90);
    ModelConfig mc;
    mc.layer_widths = {3};
    mc.c = 2;
    mc.labeling = "degree";
    mc.seed = 4;
    const PartitionSet ps = partition_all(g, mc.labeling, mc.c);
    auto params = init_params(mc, 2);
    params[0].bias = {0.5, -1.0, 2.0};
    const Matrix logits = network_forward(mc, Matrix(6, 2, 0.0), ps, params);
    for (std::size_t v = 0; v < 6; ++v)
        for (std::size_t f = 0; f < 3; ++f) CHECK(logits.at(v, f) == params[0].bias[f]);
}

TEST_CASE("two-layer network matches manual composition on a path") {
    const Graph path = build_graph({{0, 1}, {1, 2}, {2, 3}}, 4);
    ModelConfig mc = two_layer_config(2, Pooling::mean, 17);
    const PartitionSet ps = partition_all(path, mc.labeling, mc.c);
    const auto params = init_params(mc, 2);
    const Matrix x = oracles::random_matrix(4, 2, 18);

    const Matrix logits = network_forward(mc, x, ps, params);

    // manual composition, layer by layer
    const AggTensor b0 = aggregate(x, ps, mc.pooling);
    const Matrix z0 = kgcn_layer_forward(b0, params[0]);
    const Matrix a0 = relu_forward(z0);
    const AggTensor b1 = aggregate(a0, ps, mc.pooling);
    const Matrix z1 = kgcn_layer_forward(b1, params[1]);
    for (std::size_t i = 0; i < logits.data.size(); ++i) CHECK(logits.data[i] == z1.data[i]);
}

TEST_CASE("c=1 mean network equals the rw-normalized gcn layer") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const auto n = static_cast<NodeId>(5 + 5 * (seed % 4));
        const Graph g = oracles::random_graph(n, 0.3, 200 + seed);
        ModelConfig mc;
        mc.layer_widths = {4};
        mc.c = 1;
        mc.labeling = "degree";
        mc.pooling = Pooling::mean;
        mc.use_bias = false;
        mc.seed = seed;
        const PartitionSet ps = partition_all(g, "degree", 1);
        auto params = init_params(mc, 3);
        const Matrix x = oracles::random_matrix(n, 3, 900 + seed);

        const Matrix logits = network_forward(mc, x, ps, params);

        const auto rw = normalized_adjacency(g, AdjacencyVariant::rw);
        Matrix w(3, 4);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t f = 0; f < 4; ++f) w.at(i, f) = params[0].filters.at(f, i, 0);
        const Matrix baseline = gcn_layer_forward(rw, x, w);
        for (std::size_t i = 0; i < logits.data.size(); ++i)
            CHECK(std::abs(logits.data[i] - baseline.data[i]) <= 1e-12);
    }
}

TEST_CASE("network rejects mismatched partitions") {
    const Graph g = build_graph({{0, 1}}, 2);
    ModelConfig mc;
    mc.layer_widths = {2};
    mc.c = 3;
    mc.labeling = "degree";
    const PartitionSet ps = partition_all(g, "degree", 2);  // wrong c
    const auto params = init_params(mc, 1);
    CHECK_THROWS_AS(network_forward(mc, Matrix(2, 1, 0.0), ps, params), std::invalid_argument);
}

TEST_CASE("gradient check: linear one-layer model is near-exact") {
    const Graph g = oracles::random_graph(12, 0.3, 101);
    const Dataset ds = synthetic::random_task(g, 3, 3, 102);
    ModelConfig mc;
    mc.layer_widths = {3};
    mc.c = 2;
    mc.labeling = "degree";
    mc.nonlinearity = Nonlinearity::none;
    mc.seed = 103;
    const PartitionSet ps = partition_all(g, mc.labeling, mc.c);
    const auto params = init_params(mc, 3);
    CHECK(gradient_check(mc, ds, ps, params, 1e-4) <= 1e-7);
}

TEST_CASE("gradient check: two-layer relu model") {
    const Graph g = oracles::random_graph(14, 0.3, 111);
    const Dataset ds = synthetic::random_task(g, 3, 3, 112);
    ModelConfig mc = two_layer_config(3, Pooling::mean, 113);
    const PartitionSet ps = partition_all(g, mc.labeling, mc.c);
    const auto params = init_params(mc, 3);
    CHECK(gradient_check(mc, ds, ps, params, 1e-4) <= 1e-5);
}

TEST_CASE("gradient check rejects a non-positive step") {
    const Graph g = oracles::random_graph(6, 0.4, 161);
    const Dataset ds = synthetic::random_task(g, 2, 2, 162);
    ModelConfig mc = two_layer_config(2, Pooling::mean, 163);
    const PartitionSet ps = partition_all(g, mc.labeling, mc.c);
    const auto params = init_params(mc, 2);
    CHECK_THROWS_AS(gradient_check(mc, ds, ps, params, 0.0), std::invalid_argument);
}

TEST_CASE("gradient check subsamples large parameter sets deterministically") {
    const Graph g = oracles::random_graph(12, 0.3, 151);
    const Dataset ds = synthetic::random_task(g, 6, 4, 152);
    ModelConfig mc;
    mc.layer_widths = {12, 4};  // 6*3*12 + 12 + 12*3*4 + 4 = 376 coords > 200
    mc.c = 3;
    mc.labeling = "degree";
    mc.seed = 153;
    const PartitionSet ps = partition_all(g, mc.labeling, mc.c);
    const auto params = init_params(mc, 6);
    const double a = gradient_check(mc, ds, ps, params, 1e-4);
    const double b = gradient_check(mc, ds, ps, params, 1e-4);
    CHECK(a <= 1e-5);
    CHECK(a == b);  // seeded subset
}

TEST_CASE("gradient check survives zero parameters") {
    const Graph g = oracles::random_graph(8, 0.4, 121);
    const Dataset ds = synthetic::random_task(g, 2, 2, 122);
    ModelConfig mc = two_layer_config(2, Pooling::mean, 123);
    const PartitionSet ps = partition_all(g, mc.labeling, mc.c);
    auto params = init_params(mc, 2);
    for (auto& p : params) {
        std::fill(p.filters.data.begin(), p.filters.data.end(), 0.0);
        std::fill(p.bias.begin(), p.bias.end(), 0.0);
    }
    const double err = gradient_check(mc, ds, ps, params, 1e-4);
    CHECK(std::isfinite(err));
    CHECK(err <= 1e-5);
}

TEST_CASE("full forward pass is permutation equivariant for score labelings") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto n = static_cast<NodeId>(9 + seed);
        const Graph g = oracles::random_graph(n, 0.35, 400 + seed);
        const auto perm = oracles::random_permutation(n, 500 + seed);
        const Graph pg = oracles::permuted_graph(g, perm);
        const Matrix x = oracles::random_matrix(n, 3, 600 + seed);
        Matrix px(n, 3);
        for (NodeId v = 0; v < n; ++v)
            for (std::size_t i = 0; i < 3; ++i) px.at(perm[v], i) = x.at(v, i);

        for (const char* labeling : {"degree", "wl", "closeness"}) {
            ModelConfig mc = two_layer_config(3, Pooling::mean, 700 + seed);
            mc.labeling = labeling;
            const auto params = init_params(mc, 3);
            const Matrix base =
                network_forward(mc, x, partition_all(g, labeling, mc.c), params);
            const Matrix mapped =
                network_forward(mc, px, partition_all(pg, labeling, mc.c), params);
            for (NodeId v = 0; v < n; ++v)
                for (std::size_t f = 0; f < 3; ++f)
                    CHECK(std::abs(mapped.at(perm[v], f) - base.at(v, f)) <= 1e-12);
        }
    }
}

TEST_CASE("reflection blindness of c=1 on an odd-width grid, and 9-GCN separation") {
    const std::size_t h = 7, w = 7;
    const Graph grid = grid_graph(h, w, GridConnectivity::moore);
    const Matrix x = oracles::random_matrix(h * w, 1, 131);
    Matrix reflected(h * w, 1);
    auto mirror = [&](std::size_t v) { return (v / w) * w + (w - 1 - v % w); };
    for (std::size_t v = 0; v < h * w; ++v) reflected.at(v, 0) = x.at(mirror(v), 0);

    ModelConfig c1;
    c1.layer_widths = {4, 2};
    c1.c = 1;
    c1.labeling = "degree";
    c1.seed = 132;
    const PartitionSet ps1 = partition_all(grid, "degree", 1);
    const auto params1 = init_params(c1, 1);
    const Matrix base = network_forward(c1, x, ps1, params1);
    const Matrix refl = network_forward(c1, reflected, ps1, params1);
    // axis nodes (column 3) keep identical logits
    for (std::size_t r = 0; r < h; ++r) {
        const std::size_t v = r * w + 3;
        for (std::size_t f = 0; f < 2; ++f)
            CHECK(std::abs(refl.at(v, f) - base.at(v, f)) <= 1e-12);
    }

    // the 9-GCN admits parameters that tell X and X' apart at an axis node
    ModelConfig k9;
    k9.layer_widths = {1};
    k9.c = 9;
    k9.labeling = "canonical";
    k9.use_bias = false;
    k9.seed = 133;
    const PartitionSet ps9 = partition_all(grid, "canonical", 9);
    const auto axis = static_cast<NodeId>(3 * w + 3);  // interior axis node
    // find the components holding the left and right neighbors
    std::size_t left_comp = 0, right_comp = 0;
    for (std::size_t j = 0; j < 9; ++j) {
        const auto& comp = ps9.partitions[axis].components[j];
        if (comp.size() == 1 && comp[0] == axis - 1) left_comp = j;
        if (comp.size() == 1 && comp[0] == axis + 1) right_comp = j;
    }
    REQUIRE(left_comp != right_comp);
    std::vector<LayerParams> sharp(1);
    sharp[0].filters = Tensor3(1, 1, 9, 0.0);
    sharp[0].filters.at(0, 0, left_comp) = 1.0;
    sharp[0].filters.at(0, 0, right_comp) = -1.0;
    sharp[0].bias = {0.0};
    const Matrix out_base = network_forward(k9, x, ps9, sharp);
    const Matrix out_refl = network_forward(k9, reflected, ps9, sharp);
    CHECK(std::abs(out_base.at(axis, 0) - out_refl.at(axis, 0)) > 1e-6);
}

TEST_CASE("checkpoints round-trip exactly and validate shapes") {
    ModelConfig mc = two_layer_config(3, Pooling::max, 141);
    const auto params = init_params(mc, 5);
    const std::string path =
        (std::filesystem::temp_directory_path() /
         ("kgcn_ckpt_" + std::to_string(::getpid()) + ".json")).string();
    save_checkpoint(path, mc, params, 5);
    const Checkpoint ck = load_checkpoint(path);
    CHECK(ck.input_attributes == 5);
    REQUIRE(ck.params.size() == params.size());
    for (std::size_t l = 0; l < params.size(); ++l) {
        CHECK(ck.params[l].filters.data == params[l].filters.data);  // bitwise through JSON
        CHECK(ck.params[l].bias == params[l].bias);
    }
    std::filesystem::remove(path);
}
