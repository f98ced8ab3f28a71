#include "kgcn/aggregation.hpp"

#include <algorithm>
#include <stdexcept>

namespace kgcn {

const char* to_string(Pooling p) {
    switch (p) {
        case Pooling::mean: return "mean";
        case Pooling::max: return "max";
        case Pooling::sum: return "sum";
    }
    return "?";
}

Pooling pooling_from_string(const std::string& s) {
    if (s == "mean") return Pooling::mean;
    if (s == "max") return Pooling::max;
    if (s == "sum") return Pooling::sum;
    throw std::invalid_argument("unknown pooling '" + s + "' (expected mean|max|sum)");
}

AggTensor aggregate(const Matrix& features, const PartitionSet& ps, Pooling pooling) {
    const std::size_t n = ps.partitions.size();
    require(features.rows == n, "aggregate: feature row count does not match partition count");
    const std::size_t a = features.cols;
    const std::size_t c = ps.c;

    AggTensor out;
    out.pooling = pooling;
    out.values = Tensor3(n, a, c, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        const auto& comps = ps.partitions[v].components;
        for (std::size_t j = 0; j < c; ++j) {
            const auto& members = comps[j];
            if (members.empty()) continue;
            for (std::size_t i = 0; i < a; ++i) {
                double acc;
                if (pooling == Pooling::max) {
                    acc = features.at(members[0], i);
                    for (std::size_t m = 1; m < members.size(); ++m)
                        acc = std::max(acc, features.at(members[m], i));
                } else {
                    acc = 0.0;
                    for (NodeId u : members) acc += features.at(u, i);
                    if (pooling == Pooling::mean) acc /= static_cast<double>(members.size());
                }
                out.values.at(v, i, j) = acc;
            }
        }
    }
    return out;
}

Matrix aggregate_backward(const Tensor3& grad_b, const PartitionSet& ps, Pooling pooling,
                          const Matrix& features) {
    const std::size_t n = ps.partitions.size();
    require(features.rows == n, "aggregate_backward: feature row count mismatch");
    require(grad_b.d0 == n && grad_b.d1 == features.cols && grad_b.d2 == ps.c,
            "aggregate_backward: gradient shape mismatch");

    Matrix grad(features.rows, features.cols, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        const auto& comps = ps.partitions[v].components;
        for (std::size_t j = 0; j < ps.c; ++j) {
            const auto& members = comps[j];
            if (members.empty()) continue;
            for (std::size_t i = 0; i < features.cols; ++i) {
                const double g = grad_b.at(v, i, j);
                if (g == 0.0) continue;
                switch (pooling) {
                    case Pooling::mean: {
                        const double share = g / static_cast<double>(members.size());
                        for (NodeId u : members) grad.at(u, i) += share;
                        break;
                    }
                    case Pooling::sum:
                        for (NodeId u : members) grad.at(u, i) += g;
                        break;
                    case Pooling::max: {
                        // argmax ties go to the lowest node id; members are
                        // sorted ascending, so strict > keeps the first max
                        NodeId winner = members[0];
                        double best = features.at(members[0], i);
                        for (std::size_t m = 1; m < members.size(); ++m) {
                            const double x = features.at(members[m], i);
                            if (x > best) {
                                best = x;
                                winner = members[m];
                            }
                        }
                        grad.at(winner, i) += g;
                        break;
                    }
                }
            }
        }
    }
    return grad;
}

}  // namespace kgcn
