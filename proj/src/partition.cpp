#include "kgcn/partition.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "kgcn/labeling.hpp"

namespace kgcn {

namespace {

double interp_quantile(const std::vector<double>& sorted, double q) {
    const std::size_t n = sorted.size();
    const double pos = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= n) return sorted[n - 1];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

/// Nearest center, ties to the lower index.
std::size_t nearest_center(double value, const std::vector<double>& centers) {
    std::size_t best = 0;
    double best_dist = std::abs(value - centers[0]);
    for (std::size_t i = 1; i < centers.size(); ++i) {
        const double d = std::abs(value - centers[i]);
        if (d < best_dist) {
            best_dist = d;
            best = i;
        }
    }
    return best;
}

struct Clustering {
    std::vector<std::size_t> assignment;  // per sorted value
    std::vector<double> centers;
    std::vector<bool> occupied;
};

Clustering lloyd_on_sorted(const std::vector<double>& sorted, std::size_t k) {
    Clustering cl;
    cl.centers.resize(k);
    for (std::size_t i = 0; i < k; ++i)
        cl.centers[i] = interp_quantile(sorted, (static_cast<double>(i) + 0.5) / static_cast<double>(k));

    const std::size_t n = sorted.size();
    cl.assignment.resize(n);
    for (std::size_t p = 0; p < n; ++p) cl.assignment[p] = nearest_center(sorted[p], cl.centers);

    for (int guard = 0; guard < 1000; ++guard) {
        std::vector<double> sums(k, 0.0);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t p = 0; p < n; ++p) {
            sums[cl.assignment[p]] += sorted[p];
            ++counts[cl.assignment[p]];
        }
        std::vector<double> next(cl.centers);
        for (std::size_t i = 0; i < k; ++i)
            if (counts[i] > 0) next[i] = sums[i] / static_cast<double>(counts[i]);

        std::vector<std::size_t> reassigned(n);
        for (std::size_t p = 0; p < n; ++p) reassigned[p] = nearest_center(sorted[p], next);
        const bool fixed = reassigned == cl.assignment;
        cl.centers = std::move(next);
        cl.assignment = std::move(reassigned);
        if (fixed) break;
    }
    cl.occupied.assign(k, false);
    for (std::size_t a : cl.assignment) cl.occupied[a] = true;
    return cl;
}

double wcss_sorted(const std::vector<double>& sorted, const std::vector<std::size_t>& assignment,
                   std::size_t k) {
    std::vector<double> sums(k, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t p = 0; p < sorted.size(); ++p) {
        sums[assignment[p]] += sorted[p];
        ++counts[assignment[p]];
    }
    double total = 0.0;
    for (std::size_t p = 0; p < sorted.size(); ++p) {
        const std::size_t a = assignment[p];
        const double mu = sums[a] / static_cast<double>(counts[a]);
        const double d = sorted[p] - mu;
        total += d * d;
    }
    return total;
}

/// Exact k-means over the sorted values: optimal clusters are contiguous in
/// sorted order and never split equal values, so the DP runs over distinct
/// value groups. Returns a per-sorted-position assignment with clusters
/// numbered ascending by value; empty clusters (when k exceeds the distinct
/// count) take the highest indices.
Clustering exact_on_sorted(const std::vector<double>& sorted, std::size_t k) {
    std::vector<double> values;
    std::vector<std::size_t> counts;
    for (double v : sorted) {
        if (!values.empty() && values.back() == v) {
            ++counts.back();
        } else {
            values.push_back(v);
            counts.push_back(1);
        }
    }
    const std::size_t groups = values.size();
    const std::size_t parts = std::min(k, groups);

    // prefix sums over groups
    std::vector<double> ps(groups + 1, 0.0), ps2(groups + 1, 0.0);
    std::vector<std::size_t> pn(groups + 1, 0);
    for (std::size_t i = 0; i < groups; ++i) {
        const auto w = static_cast<double>(counts[i]);
        ps[i + 1] = ps[i] + w * values[i];
        ps2[i + 1] = ps2[i] + w * values[i] * values[i];
        pn[i + 1] = pn[i] + counts[i];
    }
    auto cost = [&](std::size_t i, std::size_t j) {  // groups [i, j)
        const double s = ps[j] - ps[i];
        const double s2 = ps2[j] - ps2[i];
        const auto cnt = static_cast<double>(pn[j] - pn[i]);
        return std::max(0.0, s2 - s * s / cnt);
    };

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> dp(parts + 1, std::vector<double>(groups + 1, kInf));
    std::vector<std::vector<std::size_t>> cut(parts + 1, std::vector<std::size_t>(groups + 1, 0));
    dp[0][0] = 0.0;
    for (std::size_t t = 1; t <= parts; ++t) {
        for (std::size_t j = t; j <= groups; ++j) {
            for (std::size_t i = t - 1; i < j; ++i) {
                if (dp[t - 1][i] == kInf) continue;
                const double cand = dp[t - 1][i] + cost(i, j);
                if (cand < dp[t][j]) {
                    dp[t][j] = cand;
                    cut[t][j] = i;
                }
            }
        }
    }

    std::vector<std::size_t> group_cluster(groups);
    std::size_t j = groups;
    for (std::size_t t = parts; t > 0; --t) {
        const std::size_t i = cut[t][j];
        for (std::size_t gidx = i; gidx < j; ++gidx) group_cluster[gidx] = t - 1;
        j = i;
    }

    Clustering cl;
    cl.centers.assign(k, 0.0);
    cl.occupied.assign(k, false);
    for (std::size_t t = 0; t < parts; ++t) cl.occupied[t] = true;
    std::vector<double> sums(k, 0.0);
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t gidx = 0; gidx < groups; ++gidx) {
        sums[group_cluster[gidx]] += ps[gidx + 1] - ps[gidx];
        sizes[group_cluster[gidx]] += counts[gidx];
    }
    for (std::size_t t = 0; t < parts; ++t) cl.centers[t] = sums[t] / static_cast<double>(sizes[t]);
    // stale value for empty clusters; they sort after occupied ones below
    for (std::size_t t = parts; t < k; ++t) cl.centers[t] = -kInf;

    cl.assignment.resize(sorted.size());
    std::size_t pos = 0;
    for (std::size_t gidx = 0; gidx < groups; ++gidx)
        for (std::size_t rep = 0; rep < counts[gidx]; ++rep) cl.assignment[pos++] = group_cluster[gidx];
    return cl;
}

}  // namespace

std::vector<std::size_t> kmeans_1d(const std::vector<double>& scores, std::size_t k) {
    if (k == 0) throw std::invalid_argument("kmeans_1d: k must be >= 1");
    if (scores.empty()) throw std::invalid_argument("kmeans_1d: empty input");

    std::vector<double> sorted(scores);
    std::sort(sorted.begin(), sorted.end());

    Clustering cl = lloyd_on_sorted(sorted, k);
    const double lloyd_obj = wcss_sorted(sorted, cl.assignment, k);
    Clustering exact = exact_on_sorted(sorted, k);
    const double exact_obj = wcss_sorted(sorted, exact.assignment, k);
    if (exact_obj < lloyd_obj - 1e-9 * std::max(1.0, lloyd_obj)) cl = std::move(exact);

    // Relabel so cluster order follows descending center value; empty
    // clusters keep their last center and sort after occupied ties.
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (cl.centers[a] != cl.centers[b]) return cl.centers[a] > cl.centers[b];
        if (cl.occupied[a] != cl.occupied[b]) return static_cast<bool>(cl.occupied[a]);
        return false;
    });
    std::vector<std::size_t> relabel(k);
    for (std::size_t rank = 0; rank < k; ++rank) relabel[order[rank]] = rank;

    // Map every input position through its value's cluster in sorted space.
    std::vector<std::size_t> out(scores.size());
    for (std::size_t p = 0; p < scores.size(); ++p) {
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), scores[p]);
        out[p] = relabel[cl.assignment[static_cast<std::size_t>(it - sorted.begin())]];
    }
    return out;
}

double kmeans_objective(const std::vector<double>& scores,
                        const std::vector<std::size_t>& assignment, std::size_t k) {
    require(scores.size() == assignment.size(), "kmeans_objective: size mismatch");
    std::vector<double> sums(k, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t p = 0; p < scores.size(); ++p) {
        sums[assignment[p]] += scores[p];
        ++counts[assignment[p]];
    }
    double total = 0.0;
    for (std::size_t p = 0; p < scores.size(); ++p) {
        const double mu = sums[assignment[p]] / static_cast<double>(counts[assignment[p]]);
        total += (scores[p] - mu) * (scores[p] - mu);
    }
    return total;
}

GraphFingerprint graph_fingerprint(const Graph& g) {
    return {g.num_nodes(), g.num_edges(), g.edge_checksum()};
}

void PartitionSet::require_matches(const Graph& g) const {
    if (!(fingerprint == graph_fingerprint(g)))
        throw std::runtime_error("partition cache does not match this graph (fingerprint mismatch)");
}

Partition structural_partition(const Graph& g, NodeId v, const std::string& labeling,
                               std::size_t c) {
    if (c == 0) throw std::invalid_argument("structural_partition: c must be >= 1");
    if (!is_known_labeling(labeling))
        throw std::invalid_argument("structural_partition: unknown labeling '" + labeling + "'");

    const auto closed = closed_neighborhood(g, v);
    Partition part;
    part.center = v;
    part.components.assign(c, {});

    if (c == 1) {
        part.components[0] = closed;
        return part;
    }
    part.components[0] = {v};
    if (closed.size() == 1) return part;  // no neighbors: C1 plus empty components

    const Subgraph sg = induced_subgraph(g, closed);
    const auto local_of = [&](NodeId global) {
        const auto it = std::lower_bound(sg.local_to_global.begin(), sg.local_to_global.end(), global);
        return static_cast<NodeId>(it - sg.local_to_global.begin());
    };
    std::vector<NodeId> neighbor_globals;
    neighbor_globals.reserve(closed.size() - 1);
    for (NodeId u : closed)
        if (u != v) neighbor_globals.push_back(u);

    if (labeling == "canonical") {
        const Ranking ranks = canonical_ranking(sg);
        std::vector<NodeId> by_rank(neighbor_globals);
        std::sort(by_rank.begin(), by_rank.end(), [&](NodeId a, NodeId b) {
            return ranks[local_of(a)] < ranks[local_of(b)];
        });
        const std::size_t slots = c - 1;
        const std::size_t count = by_rank.size();
        if (slots >= count) {
            for (std::size_t i = 0; i < count; ++i) part.components[i + 1] = {by_rank[i]};
        } else {
            // contiguous rank intervals of near-equal size, larger first
            const std::size_t base = count / slots;
            const std::size_t extra = count % slots;
            std::size_t pos = 0;
            for (std::size_t i = 0; i < slots; ++i) {
                const std::size_t len = base + (i < extra ? 1 : 0);
                auto& comp = part.components[i + 1];
                comp.assign(by_rank.begin() + static_cast<std::ptrdiff_t>(pos),
                            by_rank.begin() + static_cast<std::ptrdiff_t>(pos + len));
                std::sort(comp.begin(), comp.end());
                pos += len;
            }
        }
        return part;
    }

    const LabelScores scores = compute_label_scores(sg, labeling);
    std::vector<double> neighbor_scores;
    neighbor_scores.reserve(neighbor_globals.size());
    for (NodeId u : neighbor_globals) neighbor_scores.push_back(scores[local_of(u)]);
    const auto clusters = kmeans_1d(neighbor_scores, c - 1);
    for (std::size_t i = 0; i < neighbor_globals.size(); ++i)
        part.components[clusters[i] + 1].push_back(neighbor_globals[i]);
    for (auto& comp : part.components) std::sort(comp.begin(), comp.end());
    return part;
}

PartitionSet partition_all(const Graph& g, const std::string& labeling, std::size_t c,
                           unsigned threads) {
    if (!is_known_labeling(labeling))
        throw std::invalid_argument("partition_all: unknown labeling '" + labeling + "'");
    if (c == 0) throw std::invalid_argument("partition_all: c must be >= 1");

    PartitionSet ps;
    ps.labeling = labeling;
    ps.c = c;
    ps.fingerprint = graph_fingerprint(g);
    const NodeId n = g.num_nodes();
    ps.partitions.resize(n);

    std::vector<std::string> errors(n);
    std::atomic<bool> failed{false};
    auto work = [&](NodeId begin, NodeId end) {
        for (NodeId v = begin; v < end; ++v) {
            try {
                ps.partitions[v] = structural_partition(g, v, labeling, c);
            } catch (const std::exception& e) {
                errors[v] = e.what();
                failed.store(true, std::memory_order_relaxed);
            }
        }
    };

    const unsigned workers = std::max(1u, threads);
    if (workers == 1 || n < 2) {
        work(0, n);
    } else {
        std::vector<std::thread> pool;
        const NodeId chunk = (n + workers - 1) / workers;
        for (unsigned t = 0; t < workers; ++t) {
            const NodeId begin = std::min<NodeId>(n, t * chunk);
            const NodeId end = std::min<NodeId>(n, begin + chunk);
            if (begin < end) pool.emplace_back(work, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    if (failed.load()) {
        for (NodeId v = 0; v < n; ++v)
            if (!errors[v].empty())
                throw std::runtime_error("partition_all: node " + std::to_string(v) + ": " +
                                         errors[v]);
    }
    return ps;
}

void save_partitions(const PartitionSet& ps, const std::string& path) {
    nlohmann::json doc;
    doc["labeling"] = ps.labeling;
    doc["c"] = ps.c;
    doc["fingerprint"] = {{"n", ps.fingerprint.nodes},
                          {"m", ps.fingerprint.edges},
                          {"checksum", ps.fingerprint.checksum}};
    auto& parts = doc["partitions"] = nlohmann::json::array();
    for (const auto& p : ps.partitions) {
        nlohmann::json comps = nlohmann::json::array();
        for (const auto& comp : p.components) comps.push_back(comp);
        parts.push_back(std::move(comps));
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << doc.dump(1) << "\n";
}

PartitionSet load_partitions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path + ": parse error at byte " + std::to_string(e.byte) + ": " +
                                 e.what());
    }
    PartitionSet ps;
    try {
        ps.labeling = doc.at("labeling").get<std::string>();
        ps.c = doc.at("c").get<std::size_t>();
        const auto& fp = doc.at("fingerprint");
        ps.fingerprint.nodes = fp.at("n").get<std::uint64_t>();
        ps.fingerprint.edges = fp.at("m").get<std::uint64_t>();
        ps.fingerprint.checksum = fp.at("checksum").get<std::uint64_t>();
        const auto& parts = doc.at("partitions");
        ps.partitions.reserve(parts.size());
        NodeId center = 0;
        for (const auto& comps : parts) {
            Partition p;
            p.center = center++;
            for (const auto& comp : comps) p.components.push_back(comp.get<std::vector<NodeId>>());
            ps.partitions.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": malformed partition cache: " + e.what());
    }
    if (ps.partitions.size() != ps.fingerprint.nodes)
        throw std::runtime_error(path + ": partition count does not match fingerprint node count");
    for (const auto& p : ps.partitions) {
        if (p.components.size() != ps.c)
            throw std::runtime_error(path + ": component count mismatch at node " +
                                     std::to_string(p.center));
        if (ps.c > 1 &&
            !(p.components[0].size() == 1 && p.components[0][0] == p.center))
            throw std::runtime_error(path + ": first component is not the center at node " +
                                     std::to_string(p.center));
        for (const auto& comp : p.components) {
            if (!std::is_sorted(comp.begin(), comp.end()))
                throw std::runtime_error(path + ": unsorted component at node " +
                                         std::to_string(p.center));
            for (NodeId u : comp)
                if (u >= ps.fingerprint.nodes)
                    throw std::runtime_error(path + ": node id " + std::to_string(u) +
                                             " out of range at node " + std::to_string(p.center));
        }
    }
    return ps;
}

PartitionSet load_partitions(const std::string& path, const Graph& g) {
    PartitionSet ps = load_partitions(path);
    ps.require_matches(g);
    return ps;
}

}  // namespace kgcn
