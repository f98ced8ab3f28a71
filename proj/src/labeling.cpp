#include "kgcn/labeling.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <numeric>
#include <stdexcept>

namespace kgcn {

LabelScores degree_labeling(const Subgraph& sg) {
    const NodeId n = sg.local_count();
    if (n == 0) throw std::invalid_argument("degree_labeling: empty subgraph");
    LabelScores scores(n);
    for (NodeId v = 0; v < n; ++v) scores[v] = sg.adjacency.degree(v);
    return scores;
}

LabelScores wl_labeling(const Subgraph& sg, std::size_t iterations) {
    const NodeId n = sg.local_count();
    if (n == 0) throw std::invalid_argument("wl_labeling: empty subgraph");
    if (iterations == 0) throw std::invalid_argument("wl_labeling: iterations must be >= 1");

    std::vector<int> colors(n);
    for (NodeId v = 0; v < n; ++v) colors[v] = static_cast<int>(sg.adjacency.degree(v));

    auto class_count = [](const std::vector<int>& c) {
        std::vector<int> s(c);
        std::sort(s.begin(), s.end());
        return std::unique(s.begin(), s.end()) - s.begin();
    };

    auto classes = class_count(colors);
    for (std::size_t round = 0; round < iterations; ++round) {
        using Signature = std::pair<int, std::vector<int>>;
        std::vector<Signature> sigs(n);
        for (NodeId v = 0; v < n; ++v) {
            std::vector<int> nb;
            nb.reserve(sg.adjacency.degree(v));
            for (NodeId u : sg.adjacency.neighbors(v)) nb.push_back(colors[u]);
            std::sort(nb.begin(), nb.end());
            sigs[v] = {colors[v], std::move(nb)};
        }
        std::map<Signature, int> recode;
        for (const auto& s : sigs) recode.emplace(s, 0);
        int next = 0;
        for (auto& [sig, idx] : recode) idx = next++;
        for (NodeId v = 0; v < n; ++v) colors[v] = recode.at(sigs[v]);
        // Refinement only splits classes; an unchanged count means the
        // partition is stable and further rounds are identical.
        const auto now = class_count(colors);
        if (now == classes) break;
        classes = now;
    }
    LabelScores scores(n);
    for (NodeId v = 0; v < n; ++v) scores[v] = colors[v];
    return scores;
}

namespace {

/// BFS distances within the subgraph; unreachable = -1.
std::vector<int> bfs_distances(const Graph& g, NodeId source) {
    std::vector<int> dist(g.num_nodes(), -1);
    std::deque<NodeId> queue{source};
    dist[source] = 0;
    while (!queue.empty()) {
        const NodeId v = queue.front();
        queue.pop_front();
        for (NodeId u : g.neighbors(v)) {
            if (dist[u] < 0) {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    return dist;
}

}  // namespace

LabelScores closeness_centrality(const Subgraph& sg) {
    const NodeId n = sg.local_count();
    if (n == 0) throw std::invalid_argument("closeness_centrality: empty subgraph");
    LabelScores scores(n, 0.0);
    for (NodeId v = 0; v < n; ++v) {
        const auto dist = bfs_distances(sg.adjacency, v);
        long long total = 0;
        long long reachable = 0;
        for (NodeId u = 0; u < n; ++u) {
            if (u != v && dist[u] >= 0) {
                total += dist[u];
                ++reachable;
            }
        }
        scores[v] = total > 0 ? static_cast<double>(reachable) / static_cast<double>(total) : 0.0;
    }
    return scores;
}

LabelScores betweenness_centrality(const Subgraph& sg) {
    const NodeId n = sg.local_count();
    if (n == 0) throw std::invalid_argument("betweenness_centrality: empty subgraph");
    const Graph& g = sg.adjacency;
    std::vector<double> centrality(n, 0.0);

    // Brandes accumulation; the source loop counts each unordered pair
    // twice, halved at the end.
    for (NodeId s = 0; s < n; ++s) {
        std::vector<NodeId> order;
        order.reserve(n);
        std::vector<std::vector<NodeId>> preds(n);
        std::vector<double> sigma(n, 0.0);
        std::vector<int> dist(n, -1);
        sigma[s] = 1.0;
        dist[s] = 0;
        std::deque<NodeId> queue{s};
        while (!queue.empty()) {
            const NodeId v = queue.front();
            queue.pop_front();
            order.push_back(v);
            for (NodeId u : g.neighbors(v)) {
                if (dist[u] < 0) {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
                if (dist[u] == dist[v] + 1) {
                    sigma[u] += sigma[v];
                    preds[u].push_back(v);
                }
            }
        }
        std::vector<double> delta(n, 0.0);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const NodeId w = *it;
            for (NodeId v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            if (w != s) centrality[w] += delta[w];
        }
    }
    for (double& c : centrality) c /= 2.0;
    return centrality;
}

namespace {

/// Branch-and-bound search for the permutation maximizing the row-major
/// adjacency bit string. Walks candidate prefixes against the incumbent's
/// full bit string; a branch survives only if some completion could still
/// be strictly greater. Ties are resolved by enumeration order (ascending
/// local indices), which yields the lexicographically smallest sequence.
class CanonicalSearch {
public:
    explicit CanonicalSearch(const Graph& g) : n_(g.num_nodes()), adj_(n_, 0) {
        for (NodeId v = 0; v < n_; ++v)
            for (NodeId u : g.neighbors(v)) adj_[v] |= std::uint32_t{1} << u;
        degrees_.resize(n_);
        for (NodeId v = 0; v < n_; ++v) degrees_[v] = g.degree(v);
        max_degree_ = *std::max_element(degrees_.begin(), degrees_.end());
    }

    std::vector<NodeId> run() {
        perm_.clear();
        used_ = 0;
        best_.clear();
        best_bits_.clear();
        descend();
        return best_;
    }

private:
    bool bit(NodeId a, NodeId b) const { return (adj_[a] >> b) & 1u; }

    std::vector<std::uint8_t> bits_of(const std::vector<NodeId>& perm) const {
        std::vector<std::uint8_t> out(static_cast<std::size_t>(n_) * n_, 0);
        for (NodeId p = 0; p < n_; ++p)
            for (NodeId q = 0; q < n_; ++q)
                out[static_cast<std::size_t>(p) * n_ + q] = p == q ? 0 : bit(perm[p], perm[q]);
        return out;
    }

    enum class Outcome { worse, tie_only, can_beat };

    /// Compares the partial assignment against the incumbent in full
    /// bit-string order. Diagonal entries are zero for every permutation
    /// and count as determined.
    Outcome compare_partial() const {
        const auto t = static_cast<NodeId>(perm_.size());
        for (NodeId p = 0; p < n_; ++p) {
            for (NodeId q = 0; q < n_; ++q) {
                const std::uint8_t inc = best_bits_[static_cast<std::size_t>(p) * n_ + q];
                if (p == q) continue;  // determined 0 on both sides
                if (p < t && q < t) {
                    const std::uint8_t mine = bit(perm_[p], perm_[q]) ? 1 : 0;
                    if (mine > inc) return Outcome::can_beat;
                    if (mine < inc) return Outcome::worse;
                } else if (inc == 0) {
                    return Outcome::can_beat;  // an undetermined bit could be 1 here
                }
            }
        }
        return Outcome::tie_only;
    }

    void descend() {
        const auto t = static_cast<NodeId>(perm_.size());
        if (t == n_) {
            if (best_.empty() || compare_partial() == Outcome::can_beat) {
                best_ = perm_;
                best_bits_ = bits_of(perm_);
            }
            return;
        }
        for (NodeId v = 0; v < n_; ++v) {
            if ((used_ >> v) & 1u) continue;
            // Row 0 of the optimum is 0 1^maxdeg 0...: position 0 takes a
            // maximum-degree vertex and positions 1..maxdeg its neighbors.
            if (t == 0 && degrees_[v] != max_degree_) continue;
            if (t >= 1 && t <= degrees_[perm_[0]] && !bit(perm_[0], v)) continue;
            perm_.push_back(v);
            used_ |= std::uint32_t{1} << v;
            if (best_.empty() || compare_partial() == Outcome::can_beat) descend();
            used_ &= ~(std::uint32_t{1} << v);
            perm_.pop_back();
        }
    }

    NodeId n_;
    std::vector<std::uint32_t> adj_;
    std::vector<NodeId> degrees_;
    NodeId max_degree_ = 0;
    std::vector<NodeId> perm_;
    std::uint32_t used_ = 0;
    std::vector<NodeId> best_;
    std::vector<std::uint8_t> best_bits_;
};

}  // namespace

Ranking canonical_ranking(const Subgraph& sg, NodeId cap) {
    const NodeId n = sg.local_count();
    if (n == 0) throw std::invalid_argument("canonical_ranking: empty subgraph");
    if (n > cap)
        throw std::invalid_argument("canonical_ranking: subgraph has " + std::to_string(n) +
                                    " vertices, cap is " + std::to_string(cap));
    CanonicalSearch search(sg.adjacency);
    const auto order = search.run();
    Ranking ranks(n, 0);
    for (NodeId pos = 0; pos < n; ++pos) ranks[order[pos]] = static_cast<int>(pos) + 1;
    return ranks;
}

Ranking ranking_from_scores(const LabelScores& scores) {
    Ranking ranks(scores.size());
    for (std::size_t v = 0; v < scores.size(); ++v) {
        int greater = 0;
        for (double s : scores)
            if (s > scores[v]) ++greater;
        ranks[v] = greater + 1;
    }
    return ranks;
}

LabelScores compute_label_scores(const Subgraph& sg, const std::string& labeling) {
    if (labeling == "degree") return degree_labeling(sg);
    if (labeling == "wl") return wl_labeling(sg, sg.local_count());
    if (labeling == "closeness") return closeness_centrality(sg);
    if (labeling == "betweenness") return betweenness_centrality(sg);
    throw std::invalid_argument("unknown labeling '" + labeling + "'");
}

bool is_score_labeling(const std::string& labeling) {
    return labeling == "degree" || labeling == "wl" || labeling == "closeness" ||
           labeling == "betweenness";
}

bool is_known_labeling(const std::string& labeling) {
    return is_score_labeling(labeling) || labeling == "canonical";
}

}  // namespace kgcn
