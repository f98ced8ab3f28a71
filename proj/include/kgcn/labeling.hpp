#pragma once

#include <string>
#include <vector>

#include "kgcn/graph.hpp"

namespace kgcn {

/// One structural score per local vertex of a subgraph. Labelings depend
/// only on structure, so permuting vertex names permutes the scores.
using LabelScores = std::vector<double>;

/// 1-based ranks; rank(u) < rank(v) iff score(u) > score(v) for the inducing
/// scores. canonical_ranking produces a bijection; score-derived rankings
/// give tied vertices equal rank.
using Ranking = std::vector<int>;

/// score(v) = degree of v within the subgraph.
LabelScores degree_labeling(const Subgraph& sg);

/// Weisfeiler-Lehman color refinement. Initial color = degree; each round
/// recodes (old color, sorted neighbor colors) to a dense index by sorting
/// the distinct signatures lexicographically. Stops when the partition is
/// stable or after `iterations` rounds; returns the final color indices.
LabelScores wl_labeling(const Subgraph& sg, std::size_t iterations);

/// (reachable - 1) / sum of BFS distances to reachable vertices; 0 for an
/// isolated vertex.
LabelScores closeness_centrality(const Subgraph& sg);

/// Unnormalized shortest-path betweenness (Brandes), each unordered pair
/// counted once.
LabelScores betweenness_centrality(const Subgraph& sg);

inline constexpr NodeId kCanonicalizationCap = 12;

/// Canonical vertex order: the permutation maximizing the row-major
/// adjacency bit string, ties broken by the lexicographically smallest
/// sequence of local indices. rank(v) = 1 + position of v in that order.
/// Throws if the subgraph exceeds `cap` vertices.
Ranking canonical_ranking(const Subgraph& sg, NodeId cap = kCanonicalizationCap);

/// Competition ranking induced by scores: rank = 1 + count of strictly
/// greater scores (ties share a rank).
Ranking ranking_from_scores(const LabelScores& scores);

/// Dispatch by labeling name: degree | wl | closeness | betweenness.
/// ("canonical" does not produce scores; it is handled by the partition
/// module through canonical_ranking.)
LabelScores compute_label_scores(const Subgraph& sg, const std::string& labeling);

bool is_score_labeling(const std::string& labeling);
bool is_known_labeling(const std::string& labeling);

}  // namespace kgcn
