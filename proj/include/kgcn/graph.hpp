#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kgcn/dense.hpp"

namespace kgcn {

using NodeId = std::uint32_t;
using EdgePair = std::pair<NodeId, NodeId>;

/// Undirected graph in compressed sparse form. Immutable after construction:
/// neighbor lists are sorted, deduplicated and symmetric, self-loops are
/// never stored.
class Graph {
public:
    Graph() = default;

    /// Builds from an arbitrary edge list: duplicates, (u,v)/(v,u) pairs and
    /// self-loops are collapsed away. Throws on out-of-range endpoints or
    /// num_nodes == 0.
    static Graph from_edges(std::span<const EdgePair> edges, NodeId num_nodes);

    NodeId num_nodes() const { return num_nodes_; }
    /// Undirected edge count.
    std::size_t num_edges() const { return num_edges_; }

    std::span<const NodeId> neighbors(NodeId v) const {
        return {neighbors_.data() + offsets_[v], neighbors_.data() + offsets_[v + 1]};
    }
    NodeId degree(NodeId v) const {
        return static_cast<NodeId>(offsets_[v + 1] - offsets_[v]);
    }
    bool has_edge(NodeId u, NodeId v) const;

    const std::vector<std::size_t>& neighbor_offsets() const { return offsets_; }
    const std::vector<NodeId>& neighbor_array() const { return neighbors_; }

    /// Edges as (u, v) with u < v, ascending.
    std::vector<EdgePair> edge_list() const;

    /// FNV-1a over the sorted edge list (little-endian 64-bit endpoints).
    std::uint64_t edge_checksum() const;

    friend bool operator==(const Graph& a, const Graph& b) {
        return a.num_nodes_ == b.num_nodes_ && a.offsets_ == b.offsets_ &&
               a.neighbors_ == b.neighbors_;
    }

private:
    NodeId num_nodes_ = 0;
    std::size_t num_edges_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<NodeId> neighbors_;
};

inline Graph build_graph(std::span<const EdgePair> edges, NodeId num_nodes) {
    return Graph::from_edges(edges, num_nodes);
}
inline Graph build_graph(std::initializer_list<EdgePair> edges, NodeId num_nodes) {
    return Graph::from_edges({edges.begin(), edges.size()}, num_nodes);
}

/// {v} and all neighbors of v, ascending. Throws if v is out of range.
std::vector<NodeId> closed_neighborhood(const Graph& g, NodeId v);

/// Node-induced subgraph with a sorted local-to-global index map.
struct Subgraph {
    std::vector<NodeId> local_to_global;
    Graph adjacency;

    NodeId local_count() const { return adjacency.num_nodes(); }
};

Subgraph induced_subgraph(const Graph& g, std::span<const NodeId> nodes);
inline Subgraph induced_subgraph(const Graph& g, std::initializer_list<NodeId> nodes) {
    return induced_subgraph(g, std::span<const NodeId>{nodes.begin(), nodes.size()});
}

enum class GridConnectivity { von_neumann, moore };

/// Grid graph with row-major node ids (node = row * width + col).
/// von_neumann connects 4-neighbors, moore connects 8-neighbors.
Graph grid_graph(std::size_t height, std::size_t width, GridConnectivity connectivity);

enum class AdjacencyVariant { sym, rw };

/// Sparse normalized adjacency over A + I.
///   sym: D^{-1/2} (A + I) D^{-1/2}   (D the degree matrix of A + I)
///   rw:  D^{-1}   (A + I)
struct NormalizedAdjacency {
    AdjacencyVariant variant = AdjacencyVariant::sym;
    NodeId n = 0;
    std::vector<std::size_t> offsets;
    std::vector<NodeId> cols;
    std::vector<double> values;

    /// Dense product with X (n x a).
    Matrix multiply(const Matrix& x) const;
};

NormalizedAdjacency normalized_adjacency(const Graph& g, AdjacencyVariant variant);

/// Node labels and train/val/test split for semi-supervised classification.
/// label -1 means unlabeled; masked nodes must carry a valid label and the
/// three masks must be pairwise disjoint (checked by validate()).
struct Dataset {
    Graph graph;
    Matrix features;
    std::vector<int> labels;
    std::vector<bool> train_mask;
    std::vector<bool> val_mask;
    std::vector<bool> test_mask;

    void validate() const;
    int num_classes() const;
};

const char* to_string(GridConnectivity c);
const char* to_string(AdjacencyVariant v);
GridConnectivity grid_connectivity_from_string(const std::string& s);
AdjacencyVariant adjacency_variant_from_string(const std::string& s);

}  // namespace kgcn
