#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgcn/graph.hpp"

namespace kgcn {

/// Ordered c-component partition of a node's closed neighborhood.
/// components[0] is always exactly {center}; components are disjoint, cover
/// the closed neighborhood, and are sorted ascending by node id. Empty
/// components are permitted (fixed c keeps filter shapes static).
struct Partition {
    NodeId center = 0;
    std::vector<std::vector<NodeId>> components;

    friend bool operator==(const Partition&, const Partition&) = default;
};

struct GraphFingerprint {
    std::uint64_t nodes = 0;
    std::uint64_t edges = 0;
    std::uint64_t checksum = 0;

    friend bool operator==(const GraphFingerprint&, const GraphFingerprint&) = default;
};

GraphFingerprint graph_fingerprint(const Graph& g);

/// Per-node partitions plus the metadata needed to detect stale caches.
struct PartitionSet {
    std::string labeling;
    std::size_t c = 0;
    GraphFingerprint fingerprint;
    std::vector<Partition> partitions;

    /// Throws if this set was not computed from `g`.
    void require_matches(const Graph& g) const;

    friend bool operator==(const PartitionSet&, const PartitionSet&) = default;
};

/// Deterministic 1-D k-means. Runs the Lloyd iteration (centers seeded at
/// the (i+0.5)/k quantiles of the sorted values, assignment ties to the
/// lower center index, empty clusters keep their last center, iterated to a
/// fixed point) and falls back to an exact contiguous dynamic program when
/// Lloyd lands in a strictly worse local optimum. Output cluster indices
/// are relabeled so cluster order follows descending center value. The
/// result depends only on the multiset of values, not their order.
std::vector<std::size_t> kmeans_1d(const std::vector<double>& scores, std::size_t k);

/// Within-cluster squared error of an assignment (exposed for tests/tools).
double kmeans_objective(const std::vector<double>& scores,
                        const std::vector<std::size_t>& assignment, std::size_t k);

/// Structural partitioning of one node's closed neighborhood:
/// C1 = {v}; the remaining vertices' label scores are clustered into c-1
/// components ordered by descending cluster center. c = 1 pools the whole
/// closed neighborhood into the single component. labeling = "canonical"
/// replaces clustering by rank-grouping: one neighbor per component in
/// canonical-rank order when they fit, otherwise c-1 contiguous rank
/// intervals of near-equal size (larger intervals first).
Partition structural_partition(const Graph& g, NodeId v, const std::string& labeling,
                               std::size_t c);

/// All per-node partitions, computed with `threads` workers (>= 1). The
/// result is identical regardless of thread count; node-level failures are
/// reported for the lowest failing node id.
PartitionSet partition_all(const Graph& g, const std::string& labeling, std::size_t c,
                           unsigned threads = 1);

/// JSON cache round-trip; loading validates structure, and
/// load_partitions(path, g) additionally rejects fingerprint mismatches.
void save_partitions(const PartitionSet& ps, const std::string& path);
PartitionSet load_partitions(const std::string& path);
PartitionSet load_partitions(const std::string& path, const Graph& g);

}  // namespace kgcn
