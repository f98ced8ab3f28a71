#pragma once

#include <string>

#include "kgcn/dense.hpp"
#include "kgcn/partition.hpp"

namespace kgcn {

enum class Pooling { mean, max, sum };

const char* to_string(Pooling p);
Pooling pooling_from_string(const std::string& s);

/// Per-node, per-attribute, per-component pooled features:
/// values(v, i, j) = pool of attribute i over component j of node v's
/// partition. Empty components aggregate to 0 for every pooling type.
struct AggTensor {
    Tensor3 values;  // (num_nodes, attributes, components)
    Pooling pooling = Pooling::mean;
};

AggTensor aggregate(const Matrix& features, const PartitionSet& ps, Pooling pooling);

/// Gradient of aggregate with respect to the features. mean spreads the
/// upstream gradient evenly, sum passes it through, max routes it to the
/// argmax member (ties to the lowest node id).
Matrix aggregate_backward(const Tensor3& grad_b, const PartitionSet& ps, Pooling pooling,
                          const Matrix& features);

}  // namespace kgcn
