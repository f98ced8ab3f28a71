#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kgcn/dataset_io.hpp"
#include "kgcn/equivalence.hpp"
#include "kgcn/labeling.hpp"
#include "kgcn/model.hpp"
#include "kgcn/partition.hpp"
#include "kgcn/training.hpp"
#include "kgcn/version.hpp"

namespace py = pybind11;
using namespace kgcn;

namespace {

Matrix matrix_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-D float array");
    Matrix m(static_cast<std::size_t>(arr.shape(0)), static_cast<std::size_t>(arr.shape(1)));
    std::copy(arr.data(), arr.data() + arr.size(), m.data.begin());
    return m;
}

py::array_t<double> matrix_to_array(const Matrix& m) {
    py::array_t<double> arr({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), arr.mutable_data());
    return arr;
}

py::array_t<double> tensor_to_array(const Tensor3& t) {
    py::array_t<double> arr({t.d0, t.d1, t.d2});
    std::copy(t.data.begin(), t.data.end(), arr.mutable_data());
    return arr;
}

Tensor3 tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 3) throw std::invalid_argument("expected a 3-D float array");
    Tensor3 t(static_cast<std::size_t>(arr.shape(0)), static_cast<std::size_t>(arr.shape(1)),
              static_cast<std::size_t>(arr.shape(2)));
    std::copy(arr.data(), arr.data() + arr.size(), t.data.begin());
    return t;
}

Image image_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 3) throw std::invalid_argument("expected an image array (h, w, channels)");
    Image img(static_cast<std::size_t>(arr.shape(0)), static_cast<std::size_t>(arr.shape(1)),
              static_cast<std::size_t>(arr.shape(2)));
    std::copy(arr.data(), arr.data() + arr.size(), img.values.begin());
    return img;
}

py::array_t<double> image_to_array(const Image& img) {
    py::array_t<double> arr({img.height, img.width, img.channels});
    std::copy(img.values.begin(), img.values.end(), arr.mutable_data());
    return arr;
}

std::vector<LayerParams> params_from_arrays(const std::vector<std::pair<py::array, py::array>>& raw) {
    std::vector<LayerParams> params;
    for (const auto& [filters, bias] : raw) {
        LayerParams p;
        p.filters = tensor_from_array(py::cast<py::array_t<double, py::array::c_style |
                                                                      py::array::forcecast>>(filters));
        p.bias = py::cast<std::vector<double>>(bias);
        params.push_back(std::move(p));
    }
    return params;
}

std::vector<std::pair<py::array, py::array>> params_to_arrays(const std::vector<LayerParams>& params) {
    std::vector<std::pair<py::array, py::array>> out;
    for (const auto& p : params)
        out.emplace_back(tensor_to_array(p.filters), py::cast(p.bias));
    return out;
}

}  // namespace

PYBIND11_MODULE(_kgcn, m) {
    m.doc() = "structural-partition graph convolutional networks";
    m.attr("__version__") = kVersion;

    py::class_<Graph>(m, "Graph")
        .def(py::init([](const std::vector<std::pair<NodeId, NodeId>>& edges, NodeId num_nodes) {
                 return Graph::from_edges(edges, num_nodes);
             }),
             py::arg("edges"), py::arg("num_nodes"))
        .def_property_readonly("num_nodes", &Graph::num_nodes)
        .def_property_readonly("num_edges", &Graph::num_edges)
        .def("degree", &Graph::degree, py::arg("v"))
        .def("neighbors",
             [](const Graph& g, NodeId v) {
                 auto nb = g.neighbors(v);
                 return std::vector<NodeId>(nb.begin(), nb.end());
             },
             py::arg("v"))
        .def("has_edge", &Graph::has_edge, py::arg("u"), py::arg("v"))
        .def("edge_list", &Graph::edge_list)
        .def("__eq__", [](const Graph& a, const Graph& b) { return a == b; });

    py::class_<Subgraph>(m, "Subgraph")
        .def_readonly("local_to_global", &Subgraph::local_to_global)
        .def_readonly("adjacency", &Subgraph::adjacency)
        .def_property_readonly("local_count", &Subgraph::local_count);

    m.def("build_graph",
          [](const std::vector<std::pair<NodeId, NodeId>>& edges, NodeId num_nodes) {
              return Graph::from_edges(edges, num_nodes);
          },
          py::arg("edges"), py::arg("num_nodes"));
    m.def("grid_graph",
          [](std::size_t h, std::size_t w, const std::string& connectivity) {
              return grid_graph(h, w, grid_connectivity_from_string(connectivity));
          },
          py::arg("height"), py::arg("width"), py::arg("connectivity") = "moore");
    m.def("closed_neighborhood", &closed_neighborhood, py::arg("graph"), py::arg("v"));
    m.def("induced_subgraph",
          [](const Graph& g, const std::vector<NodeId>& nodes) {
              return induced_subgraph(g, nodes);
          },
          py::arg("graph"), py::arg("nodes"));
    m.def("normalized_adjacency_dense",
          [](const Graph& g, const std::string& variant) {
              const auto a = normalized_adjacency(g, adjacency_variant_from_string(variant));
              Matrix dense(a.n, a.n, 0.0);
              for (NodeId v = 0; v < a.n; ++v)
                  for (std::size_t e = a.offsets[v]; e < a.offsets[v + 1]; ++e)
                      dense.at(v, a.cols[e]) = a.values[e];
              return matrix_to_array(dense);
          },
          py::arg("graph"), py::arg("variant") = "sym");

    m.def("degree_labeling", &degree_labeling, py::arg("subgraph"));
    m.def("wl_labeling", &wl_labeling, py::arg("subgraph"), py::arg("iterations"));
    m.def("closeness_centrality", &closeness_centrality, py::arg("subgraph"));
    m.def("betweenness_centrality", &betweenness_centrality, py::arg("subgraph"));
    m.def("canonical_ranking", &canonical_ranking, py::arg("subgraph"),
          py::arg("cap") = kCanonicalizationCap);
    m.def("ranking_from_scores", &ranking_from_scores, py::arg("scores"));
    m.def("kmeans_1d", &kmeans_1d, py::arg("scores"), py::arg("k"));

    py::class_<Partition>(m, "Partition")
        .def_readonly("center", &Partition::center)
        .def_readonly("components", &Partition::components);

    py::class_<GraphFingerprint>(m, "GraphFingerprint")
        .def_readonly("nodes", &GraphFingerprint::nodes)
        .def_readonly("edges", &GraphFingerprint::edges)
        .def_readonly("checksum", &GraphFingerprint::checksum);

    py::class_<PartitionSet>(m, "PartitionSet")
        .def_readonly("labeling", &PartitionSet::labeling)
        .def_readonly("c", &PartitionSet::c)
        .def_readonly("fingerprint", &PartitionSet::fingerprint)
        .def_readonly("partitions", &PartitionSet::partitions)
        .def("__eq__", [](const PartitionSet& a, const PartitionSet& b) { return a == b; });

    m.def("structural_partition", &structural_partition, py::arg("graph"), py::arg("v"),
          py::arg("labeling"), py::arg("c"));
    m.def("partition_all", &partition_all, py::arg("graph"), py::arg("labeling"), py::arg("c"),
          py::arg("threads") = 1);
    m.def("save_partitions", &save_partitions, py::arg("partitions"), py::arg("path"));
    m.def("load_partitions", py::overload_cast<const std::string&>(&load_partitions),
          py::arg("path"));

    m.def("aggregate",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& features,
             const PartitionSet& ps, const std::string& pooling) {
              return tensor_to_array(
                  aggregate(matrix_from_array(features), ps, pooling_from_string(pooling)).values);
          },
          py::arg("features"), py::arg("partitions"), py::arg("pooling") = "mean");

    py::class_<Dataset>(m, "Dataset")
        .def_readonly("graph", &Dataset::graph)
        .def_property_readonly("features",
                               [](const Dataset& d) { return matrix_to_array(d.features); })
        .def_readonly("labels", &Dataset::labels)
        .def_readonly("train_mask", &Dataset::train_mask)
        .def_readonly("val_mask", &Dataset::val_mask)
        .def_readonly("test_mask", &Dataset::test_mask)
        .def_property_readonly("num_classes", &Dataset::num_classes);

    m.def("load_dataset", &load_dataset, py::arg("edges"), py::arg("features"), py::arg("labels"),
          py::arg("masks"));
    m.def("make_directional_dataset", &make_directional_dataset, py::arg("height"),
          py::arg("width"), py::arg("seed") = 0);

    py::class_<ModelConfig>(m, "ModelConfig")
        .def(py::init([](std::vector<std::size_t> layers, std::size_t c, const std::string& labeling,
                         const std::string& pooling, const std::string& nonlinearity, bool bias,
                         std::uint64_t seed) {
                 ModelConfig mc;
                 mc.layer_widths = std::move(layers);
                 mc.c = c;
                 mc.labeling = labeling;
                 mc.pooling = pooling_from_string(pooling);
                 mc.nonlinearity = nonlinearity_from_string(nonlinearity);
                 mc.use_bias = bias;
                 mc.seed = seed;
                 mc.validate();
                 return mc;
             }),
             py::arg("layers"), py::arg("c"), py::arg("labeling") = "degree",
             py::arg("pooling") = "mean", py::arg("nonlinearity") = "relu", py::arg("bias") = true,
             py::arg("seed") = 0)
        .def_readonly("layer_widths", &ModelConfig::layer_widths)
        .def_readonly("c", &ModelConfig::c)
        .def_readonly("labeling", &ModelConfig::labeling)
        .def_readonly("seed", &ModelConfig::seed);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init([](double lr, std::size_t epochs, const std::string& optimizer, double l2,
                         std::uint64_t seed) {
                 TrainConfig tc;
                 tc.learning_rate = lr;
                 tc.epochs = epochs;
                 tc.optimizer = optimizer_from_string(optimizer);
                 tc.l2 = l2;
                 tc.seed = seed;
                 tc.validate();
                 return tc;
             }),
             py::arg("learning_rate") = 0.01, py::arg("epochs") = 100, py::arg("optimizer") = "adam",
             py::arg("l2") = 0.0, py::arg("seed") = 0)
        .def_readonly("learning_rate", &TrainConfig::learning_rate)
        .def_readonly("epochs", &TrainConfig::epochs);

    py::class_<TrainReport>(m, "TrainReport")
        .def_readonly("train_loss", &TrainReport::train_loss)
        .def_readonly("train_accuracy", &TrainReport::train_accuracy)
        .def_readonly("val_accuracy", &TrainReport::val_accuracy)
        .def_readonly("test_accuracy", &TrainReport::test_accuracy)
        .def_readonly("wall_seconds", &TrainReport::wall_seconds)
        .def("to_json", &TrainReport::to_json, py::arg("indent") = true)
        .def("__eq__", [](const TrainReport& a, const TrainReport& b) { return a == b; });

    m.def("init_params",
          [](const ModelConfig& config, std::size_t input_attributes) {
              return params_to_arrays(init_params(config, input_attributes));
          },
          py::arg("config"), py::arg("input_attributes"));
    m.def("network_forward",
          [](const ModelConfig& config,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& features,
             const PartitionSet& ps, const std::vector<std::pair<py::array, py::array>>& params) {
              return matrix_to_array(
                  network_forward(config, matrix_from_array(features), ps,
                                  params_from_arrays(params)));
          },
          py::arg("config"), py::arg("features"), py::arg("partitions"), py::arg("params"));
    m.def("gradient_check",
          [](const ModelConfig& config, const Dataset& dataset, const PartitionSet& ps,
             const std::vector<std::pair<py::array, py::array>>& params, double step) {
              return gradient_check(config, dataset, ps, params_from_arrays(params), step);
          },
          py::arg("config"), py::arg("dataset"), py::arg("partitions"), py::arg("params"),
          py::arg("step") = 1e-4);
    m.def("train",
          [](const ModelConfig& mc, const TrainConfig& tc, const Dataset& ds,
             const PartitionSet& ps) {
              auto result = train(mc, tc, ds, ps);
              return py::make_tuple(params_to_arrays(result.params), result.report);
          },
          py::arg("model_config"), py::arg("train_config"), py::arg("dataset"),
          py::arg("partitions"));
    m.def("evaluate",
          [](const std::vector<std::pair<py::array, py::array>>& params, const ModelConfig& config,
             const Dataset& dataset, const PartitionSet& ps, const std::string& mask) {
              const std::vector<bool>* m = nullptr;
              if (mask == "train") m = &dataset.train_mask;
              else if (mask == "val") m = &dataset.val_mask;
              else if (mask == "test") m = &dataset.test_mask;
              else throw std::invalid_argument("mask must be train|val|test");
              return evaluate(params_from_arrays(params), config, dataset, ps, *m);
          },
          py::arg("params"), py::arg("config"), py::arg("dataset"), py::arg("partitions"),
          py::arg("mask") = "test");

    m.def("conv2d_reference",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& img,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& filters) {
              if (filters.ndim() != 4)
                  throw std::invalid_argument("filters must have shape (k, size, size, channels)");
              ConvFilters f(static_cast<std::size_t>(filters.shape(0)),
                            static_cast<std::size_t>(filters.shape(1)),
                            static_cast<std::size_t>(filters.shape(3)));
              if (filters.shape(1) != filters.shape(2))
                  throw std::invalid_argument("filters must be square");
              std::copy(filters.data(), filters.data() + filters.size(), f.values.begin());
              return image_to_array(conv2d_reference(image_from_array(img), f));
          },
          py::arg("image"), py::arg("filters"));

    py::class_<EquivalenceReport>(m, "EquivalenceReport")
        .def_readonly("permutation", &EquivalenceReport::permutation)
        .def_readonly("max_abs_deviation", &EquivalenceReport::max_abs_deviation)
        .def_readonly("per_node_deviations", &EquivalenceReport::per_node_deviations)
        .def("to_json", &EquivalenceReport::to_json, py::arg("indent") = true);

    m.def("verify_grid_equivalence", &verify_grid_equivalence, py::arg("height"), py::arg("width"),
          py::arg("m") = 2, py::arg("k") = 4, py::arg("seed") = 0, py::arg("channels") = 1);

    py::class_<ExpressivityReport>(m, "ExpressivityReport")
        .def_readonly("c1_train_accuracy", &ExpressivityReport::c1_train_accuracy)
        .def_readonly("kgcn_train_accuracy", &ExpressivityReport::kgcn_train_accuracy)
        .def_readonly("reflection_max_deviation", &ExpressivityReport::reflection_max_deviation)
        .def_readonly("labels_flip_under_reflection",
                      &ExpressivityReport::labels_flip_under_reflection)
        .def("to_json", &ExpressivityReport::to_json, py::arg("indent") = true);

    m.def("expressivity_demo", &expressivity_demo, py::arg("height"), py::arg("width"),
          py::arg("seed") = 0, py::arg("epochs") = 500);
}
