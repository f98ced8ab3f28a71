#include "kgcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kgcn {

Graph Graph::from_edges(std::span<const EdgePair> edges, NodeId num_nodes) {
    if (num_nodes == 0) throw std::invalid_argument("build_graph: num_nodes must be positive");

    std::vector<EdgePair> canon;
    canon.reserve(edges.size());
    for (const auto& [u, v] : edges) {
        if (u >= num_nodes || v >= num_nodes)
            throw std::invalid_argument("build_graph: edge endpoint out of range");
        if (u == v) continue;
        canon.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(canon.begin(), canon.end());
    canon.erase(std::unique(canon.begin(), canon.end()), canon.end());

    Graph g;
    g.num_nodes_ = num_nodes;
    g.num_edges_ = canon.size();
    std::vector<std::size_t> deg(num_nodes, 0);
    for (const auto& [u, v] : canon) {
        ++deg[u];
        ++deg[v];
    }
    g.offsets_.assign(num_nodes + 1, 0);
    for (NodeId v = 0; v < num_nodes; ++v) g.offsets_[v + 1] = g.offsets_[v] + deg[v];
    g.neighbors_.resize(g.offsets_[num_nodes]);
    std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
    for (const auto& [u, v] : canon) {
        g.neighbors_[cursor[u]++] = v;
        g.neighbors_[cursor[v]++] = u;
    }
    for (NodeId v = 0; v < num_nodes; ++v)
        std::sort(g.neighbors_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v]),
                  g.neighbors_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v + 1]));
    return g;
}

bool Graph::has_edge(NodeId u, NodeId v) const {
    if (u >= num_nodes_ || v >= num_nodes_) return false;
    auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<EdgePair> Graph::edge_list() const {
    std::vector<EdgePair> edges;
    edges.reserve(num_edges_);
    for (NodeId u = 0; u < num_nodes_; ++u)
        for (NodeId v : neighbors(u))
            if (u < v) edges.emplace_back(u, v);
    return edges;
}

std::uint64_t Graph::edge_checksum() const {
    std::uint64_t h = 14695981039346656037ULL;
    auto mix = [&h](std::uint64_t x) {
        for (int i = 0; i < 8; ++i) {
            h ^= (x >> (8 * i)) & 0xffULL;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& [u, v] : edge_list()) {
        mix(u);
        mix(v);
    }
    return h;
}

std::vector<NodeId> closed_neighborhood(const Graph& g, NodeId v) {
    if (v >= g.num_nodes()) throw std::invalid_argument("closed_neighborhood: node out of range");
    auto nb = g.neighbors(v);
    std::vector<NodeId> out;
    out.reserve(nb.size() + 1);
    bool placed = false;
    for (NodeId u : nb) {
        if (!placed && v < u) {
            out.push_back(v);
            placed = true;
        }
        out.push_back(u);
    }
    if (!placed) out.push_back(v);
    return out;
}

Subgraph induced_subgraph(const Graph& g, std::span<const NodeId> nodes) {
    if (nodes.empty()) throw std::invalid_argument("induced_subgraph: empty node set");
    std::vector<NodeId> locals(nodes.begin(), nodes.end());
    std::sort(locals.begin(), locals.end());
    locals.erase(std::unique(locals.begin(), locals.end()), locals.end());
    for (NodeId v : locals)
        if (v >= g.num_nodes())
            throw std::invalid_argument("induced_subgraph: node out of range");

    std::vector<EdgePair> local_edges;
    for (NodeId li = 0; li < locals.size(); ++li) {
        for (NodeId v : g.neighbors(locals[li])) {
            auto it = std::lower_bound(locals.begin(), locals.end(), v);
            if (it != locals.end() && *it == v) {
                auto lj = static_cast<NodeId>(it - locals.begin());
                if (li < lj) local_edges.emplace_back(li, lj);
            }
        }
    }
    Subgraph sg;
    sg.adjacency = Graph::from_edges(local_edges, static_cast<NodeId>(locals.size()));
    sg.local_to_global = std::move(locals);
    return sg;
}

Graph grid_graph(std::size_t height, std::size_t width, GridConnectivity connectivity) {
    if (height == 0 || width == 0)
        throw std::invalid_argument("grid_graph: dimensions must be positive");
    std::vector<EdgePair> edges;
    auto id = [width](std::size_t r, std::size_t c) {
        return static_cast<NodeId>(r * width + c);
    };
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            if (c + 1 < width) edges.emplace_back(id(r, c), id(r, c + 1));
            if (r + 1 < height) edges.emplace_back(id(r, c), id(r + 1, c));
            if (connectivity == GridConnectivity::moore && r + 1 < height) {
                if (c + 1 < width) edges.emplace_back(id(r, c), id(r + 1, c + 1));
                if (c > 0) edges.emplace_back(id(r, c), id(r + 1, c - 1));
            }
        }
    }
    return Graph::from_edges(edges, static_cast<NodeId>(height * width));
}

NormalizedAdjacency normalized_adjacency(const Graph& g, AdjacencyVariant variant) {
    const NodeId n = g.num_nodes();
    NormalizedAdjacency a;
    a.variant = variant;
    a.n = n;
    a.offsets.assign(n + 1, 0);
    for (NodeId v = 0; v < n; ++v) a.offsets[v + 1] = a.offsets[v] + g.degree(v) + 1;
    a.cols.resize(a.offsets[n]);
    a.values.resize(a.offsets[n]);
    for (NodeId v = 0; v < n; ++v) {
        // Degrees of A + I are integers, so d(u)*d(v) is exact and the sym
        // variant is symmetric bit for bit.
        const double dv = static_cast<double>(g.degree(v)) + 1.0;
        std::size_t w = a.offsets[v];
        bool placed = false;
        auto emit = [&](NodeId u) {
            const double du = static_cast<double>(g.degree(u)) + 1.0;
            a.cols[w] = u;
            a.values[w] = variant == AdjacencyVariant::rw ? 1.0 / dv
                                                          : 1.0 / std::sqrt(du * dv);
            ++w;
        };
        for (NodeId u : g.neighbors(v)) {
            if (!placed && v < u) {
                emit(v);
                placed = true;
            }
            emit(u);
        }
        if (!placed) emit(v);
    }
    return a;
}

Matrix NormalizedAdjacency::multiply(const Matrix& x) const {
    require(x.rows == n, "NormalizedAdjacency::multiply: row count mismatch");
    Matrix out(n, x.cols);
    for (NodeId v = 0; v < n; ++v) {
        for (std::size_t e = offsets[v]; e < offsets[v + 1]; ++e) {
            const NodeId u = cols[e];
            const double w = values[e];
            for (std::size_t c = 0; c < x.cols; ++c) out.at(v, c) += w * x.at(u, c);
        }
    }
    return out;
}

void Dataset::validate() const {
    const std::size_t n = graph.num_nodes();
    if (features.rows != n)
        throw std::runtime_error("dataset: feature row count does not match node count");
    if (labels.size() != n) throw std::runtime_error("dataset: label count does not match node count");
    if (train_mask.size() != n || val_mask.size() != n || test_mask.size() != n)
        throw std::runtime_error("dataset: mask length does not match node count");
    for (double v : features.data)
        if (!std::isfinite(v)) throw std::runtime_error("dataset: non-finite feature value");
    for (std::size_t v = 0; v < n; ++v) {
        const int in_masks = static_cast<int>(train_mask[v]) + static_cast<int>(val_mask[v]) +
                             static_cast<int>(test_mask[v]);
        if (in_masks > 1)
            throw std::runtime_error("dataset: node " + std::to_string(v) +
                                     " appears in more than one mask");
        if (in_masks == 1 && labels[v] < 0)
            throw std::runtime_error("dataset: masked node " + std::to_string(v) +
                                     " has no label");
        if (labels[v] < -1)
            throw std::runtime_error("dataset: label below -1 at node " + std::to_string(v));
    }
}

int Dataset::num_classes() const {
    int top = -1;
    for (int l : labels) top = std::max(top, l);
    return top + 1;
}

const char* to_string(GridConnectivity c) {
    return c == GridConnectivity::moore ? "moore" : "von_neumann";
}

const char* to_string(AdjacencyVariant v) {
    return v == AdjacencyVariant::sym ? "sym" : "rw";
}

GridConnectivity grid_connectivity_from_string(const std::string& s) {
    if (s == "moore") return GridConnectivity::moore;
    if (s == "von_neumann") return GridConnectivity::von_neumann;
    throw std::invalid_argument("unknown connectivity '" + s + "' (expected moore|von_neumann)");
}

AdjacencyVariant adjacency_variant_from_string(const std::string& s) {
    if (s == "sym") return AdjacencyVariant::sym;
    if (s == "rw") return AdjacencyVariant::rw;
    throw std::invalid_argument("unknown adjacency variant '" + s + "' (expected sym|rw)");
}

}  // namespace kgcn
