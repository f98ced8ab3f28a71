#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "kgcn/graph.hpp"

namespace kgcn {

/// File formats (all plain text, one record per line, '#' starts a comment):
///   edges.tsv     "u<TAB>v" with 0-based decimal indices. A leading
///                 "# nodes: N" comment pins the node count; otherwise it is
///                 inferred as max index + 1 (or taken from num_nodes).
///   features.tsv  one node per line, tab-separated decimal reals.
///   labels.tsv    one integer per line, -1 = unlabeled.
///   masks.tsv     one of t|v|s|- per line (train/val/test/none).
/// Parse failures throw std::runtime_error with "<file>:<line>: ...".

Graph load_graph_tsv(const std::string& edge_file,
                     std::optional<NodeId> num_nodes = std::nullopt);

Matrix load_features_tsv(const std::string& feature_file);

std::vector<int> load_labels_tsv(const std::string& label_file);

struct MaskTriple {
    std::vector<bool> train, val, test;
};
MaskTriple load_masks_tsv(const std::string& mask_file);

/// Loads and cross-validates the four files into a Dataset. The node count
/// is the number of label lines.
Dataset load_dataset(const std::string& edge_file, const std::string& feature_file,
                     const std::string& label_file, const std::string& mask_file);

void save_graph_tsv(const Graph& g, const std::string& path);
void save_features_tsv(const Matrix& features, const std::string& path);
void save_labels_tsv(const std::vector<int>& labels, const std::string& path);
void save_masks_tsv(const MaskTriple& masks, const std::string& path);

/// FNV-1a over a file's raw bytes; used for manifest input fingerprints.
std::uint64_t file_checksum(const std::string& path);

}  // namespace kgcn
