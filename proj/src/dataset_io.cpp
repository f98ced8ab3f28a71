#include "kgcn/dataset_io.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kgcn {

namespace {

[[noreturn]] void parse_fail(const std::string& file, std::size_t line, const std::string& what) {
    throw std::runtime_error(file + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open_or_fail(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

void strip_cr(std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
}

bool is_blank(const std::string& s) {
    return s.find_first_not_of(" \t") == std::string::npos;
}

long long parse_int(const std::string& file, std::size_t line, const std::string& tok) {
    long long value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        parse_fail(file, line, "expected integer, got '" + tok + "'");
    return value;
}

double parse_real(const std::string& file, std::size_t line, const std::string& tok) {
    if (tok.empty()) parse_fail(file, line, "empty field");
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(tok.c_str(), &end);
    if (errno != 0 || end != tok.c_str() + tok.size())
        parse_fail(file, line, "expected real number, got '" + tok + "'");
    if (!std::isfinite(value)) parse_fail(file, line, "non-finite value '" + tok + "'");
    return value;
}

std::vector<std::string> split_tabs(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = s.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, tab - start));
        start = tab + 1;
    }
}

}  // namespace

Graph load_graph_tsv(const std::string& edge_file, std::optional<NodeId> num_nodes) {
    std::ifstream in = open_or_fail(edge_file);
    std::vector<EdgePair> edges;
    std::optional<NodeId> declared;
    std::string line;
    std::size_t lineno = 0;
    NodeId max_seen = 0;
    bool any = false;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (!line.empty() && line[0] == '#') {
            // "# nodes: N" pins the node count for graphs with isolated tails.
            std::istringstream hdr(line.substr(1));
            std::string word;
            hdr >> word;
            if (word == "nodes:") {
                long long n = -1;
                hdr >> n;
                if (n > 0) declared = static_cast<NodeId>(n);
            }
            continue;
        }
        if (is_blank(line)) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 2) parse_fail(edge_file, lineno, "expected 'u<TAB>v'");
        const long long u = parse_int(edge_file, lineno, fields[0]);
        const long long v = parse_int(edge_file, lineno, fields[1]);
        if (u < 0 || v < 0) parse_fail(edge_file, lineno, "negative node index");
        edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
        max_seen = std::max({max_seen, static_cast<NodeId>(u), static_cast<NodeId>(v)});
        any = true;
    }
    NodeId n;
    if (num_nodes) {
        n = *num_nodes;
    } else if (declared) {
        n = *declared;
    } else if (any) {
        n = max_seen + 1;
    } else {
        throw std::runtime_error(edge_file + ": no edges and no '# nodes: N' directive");
    }
    if (any && max_seen >= n)
        throw std::runtime_error(edge_file + ": edge endpoint " + std::to_string(max_seen) +
                                 " out of range for " + std::to_string(n) + " nodes");
    return Graph::from_edges(edges, n);
}

Matrix load_features_tsv(const std::string& feature_file) {
    std::ifstream in = open_or_fail(feature_file);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (!line.empty() && line[0] == '#') continue;
        if (is_blank(line)) continue;
        auto fields = split_tabs(line);
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(parse_real(feature_file, lineno, f));
        if (!rows.empty() && row.size() != rows.front().size())
            parse_fail(feature_file, lineno, "inconsistent column count");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error(feature_file + ": no feature rows");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < m.cols; ++c) m.at(r, c) = rows[r][c];
    return m;
}

std::vector<int> load_labels_tsv(const std::string& label_file) {
    std::ifstream in = open_or_fail(label_file);
    std::vector<int> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (!line.empty() && line[0] == '#') continue;
        if (is_blank(line)) continue;
        const long long l = parse_int(label_file, lineno, line);
        if (l < -1) parse_fail(label_file, lineno, "label below -1");
        labels.push_back(static_cast<int>(l));
    }
    if (labels.empty()) throw std::runtime_error(label_file + ": no labels");
    return labels;
}

MaskTriple load_masks_tsv(const std::string& mask_file) {
    std::ifstream in = open_or_fail(mask_file);
    MaskTriple masks;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (!line.empty() && line[0] == '#') continue;
        if (is_blank(line)) continue;
        if (line.size() != 1) parse_fail(mask_file, lineno, "expected one of t|v|s|-");
        const char c = line[0];
        if (c != 't' && c != 'v' && c != 's' && c != '-')
            parse_fail(mask_file, lineno, std::string("unknown mask flag '") + c + "'");
        masks.train.push_back(c == 't');
        masks.val.push_back(c == 'v');
        masks.test.push_back(c == 's');
    }
    if (masks.train.empty()) throw std::runtime_error(mask_file + ": no mask rows");
    return masks;
}

Dataset load_dataset(const std::string& edge_file, const std::string& feature_file,
                     const std::string& label_file, const std::string& mask_file) {
    Dataset ds;
    ds.labels = load_labels_tsv(label_file);
    const auto n = static_cast<NodeId>(ds.labels.size());
    ds.graph = load_graph_tsv(edge_file, n);
    ds.features = load_features_tsv(feature_file);
    if (ds.features.rows != n)
        throw std::runtime_error(feature_file + ": feature row count " +
                                 std::to_string(ds.features.rows) + " does not match node count " +
                                 std::to_string(n));
    auto masks = load_masks_tsv(mask_file);
    if (masks.train.size() != n)
        throw std::runtime_error(mask_file + ": mask row count " +
                                 std::to_string(masks.train.size()) +
                                 " does not match node count " + std::to_string(n));
    ds.train_mask = std::move(masks.train);
    ds.val_mask = std::move(masks.val);
    ds.test_mask = std::move(masks.test);
    ds.validate();
    return ds;
}

void save_graph_tsv(const Graph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "# nodes: " << g.num_nodes() << "\n";
    for (const auto& [u, v] : g.edge_list()) out << u << "\t" << v << "\n";
}

void save_features_tsv(const Matrix& features, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    for (std::size_t r = 0; r < features.rows; ++r) {
        for (std::size_t c = 0; c < features.cols; ++c) {
            if (c) out << '\t';
            out << features.at(r, c);
        }
        out << '\n';
    }
}

void save_labels_tsv(const std::vector<int>& labels, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (int l : labels) out << l << '\n';
}

void save_masks_tsv(const MaskTriple& masks, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (std::size_t v = 0; v < masks.train.size(); ++v) {
        char c = '-';
        if (masks.train[v]) c = 't';
        else if (masks.val[v]) c = 'v';
        else if (masks.test[v]) c = 's';
        out << c << '\n';
    }
}

std::uint64_t file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::uint64_t h = 14695981039346656037ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    return h;
}

}  // namespace kgcn
