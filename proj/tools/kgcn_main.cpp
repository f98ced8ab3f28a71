// kgcn command-line front end: data generation, partition preprocessing,
// training, evaluation, gradient checking and the grid-equivalence and
// expressivity harnesses. Every command writes a run manifest with the
// fully resolved configuration and input file fingerprints.
//
// Exit codes: 0 success, 1 assertion/check failure, 2 usage error.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kgcn/dataset_io.hpp"
#include "kgcn/equivalence.hpp"
#include "kgcn/model.hpp"
#include "kgcn/partition.hpp"
#include "kgcn/training.hpp"
#include "kgcn/version.hpp"

namespace {

using nlohmann::json;

std::string iso_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class Manifest {
public:
    Manifest(std::string command, std::string path)
        : path_(std::move(path)) {
        doc_["command"] = std::move(command);
        doc_["tool"] = kgcn::kToolName;
        doc_["version"] = kgcn::kVersion;
        doc_["started"] = iso_utc_now();
        doc_["inputs"] = json::object();
        doc_["config"] = json::object();
    }

    void config(const json& resolved) { doc_["config"] = resolved; }

    void input(const std::string& name, const std::string& file) {
        doc_["inputs"][name] = {{"path", file},
                                {"fnv1a64", kgcn::file_checksum(file)}};
    }

    void write(int exit_code) {
        doc_["finished"] = iso_utc_now();
        doc_["exit_code"] = exit_code;
        std::ofstream out(path_);
        if (!out) throw std::runtime_error("cannot write manifest " + path_);
        out << doc_.dump(1) << "\n";
    }

private:
    std::string path_;
    json doc_;
};

unsigned resolve_threads(unsigned flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("KGCN_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return 1;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json doc;
    in >> doc;
    return doc;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

struct RunConfig {
    kgcn::ModelConfig model;
    kgcn::TrainConfig train;
    std::string edges, features, labels, masks;
    std::string partitions;  // optional cache path
    json echo;
};

RunConfig load_run_config(const std::string& path) {
    const json doc = read_json_file(path);
    RunConfig rc;
    rc.model = kgcn::model_config_from_json_text(doc.at("model").dump());
    rc.train = kgcn::train_config_from_json_text(
        doc.contains("train") ? doc.at("train").dump() : std::string("{}"));
    const auto& data = doc.at("data");
    rc.edges = data.at("edges").get<std::string>();
    rc.features = data.at("features").get<std::string>();
    rc.labels = data.at("labels").get<std::string>();
    rc.masks = data.at("masks").get<std::string>();
    if (doc.contains("partitions")) rc.partitions = doc.at("partitions").get<std::string>();
    rc.echo = doc;
    return rc;
}

json model_config_echo(const kgcn::ModelConfig& mc) {
    return {{"layers", mc.layer_widths},
            {"c", mc.c},
            {"labeling", mc.labeling},
            {"pooling", kgcn::to_string(mc.pooling)},
            {"adjacency", kgcn::to_string(mc.baseline_variant)},
            {"nonlinearity", kgcn::to_string(mc.nonlinearity)},
            {"bias", mc.use_bias},
            {"seed", mc.seed}};
}

json train_config_echo(const kgcn::TrainConfig& tc) {
    return {{"learning_rate", tc.learning_rate}, {"epochs", tc.epochs},
            {"optimizer", kgcn::to_string(tc.optimizer)}, {"beta1", tc.beta1},
            {"beta2", tc.beta2}, {"epsilon", tc.epsilon},
            {"l2", tc.l2}, {"seed", tc.seed}};
}

kgcn::PartitionSet obtain_partitions(const RunConfig& rc, const kgcn::Graph& graph,
                                     unsigned threads, Manifest& manifest) {
    if (!rc.partitions.empty()) {
        manifest.input("partitions", rc.partitions);
        return kgcn::load_partitions(rc.partitions, graph);
    }
    return kgcn::partition_all(graph, rc.model.labeling, rc.model.c, threads);
}

int cmd_gen_grid(const std::string& out_dir, std::size_t height, std::size_t width,
                 const std::string& connectivity, const std::string& task, std::uint64_t seed,
                 const std::string& manifest_path) {
    Manifest manifest("gen-grid", manifest_path);
    manifest.config({{"height", height}, {"width", width}, {"connectivity", connectivity},
                     {"task", task}, {"seed", seed}, {"out_dir", out_dir}});

    const auto conn = kgcn::grid_connectivity_from_string(connectivity);
    const kgcn::Graph grid = kgcn::grid_graph(height, width, conn);
    kgcn::save_graph_tsv(grid, out_dir + "/edges.tsv");
    std::cout << "wrote " << out_dir << "/edges.tsv (" << grid.num_nodes() << " nodes, "
              << grid.num_edges() << " edges)\n";

    if (task == "directional") {
        const kgcn::Dataset ds = kgcn::make_directional_dataset(height, width, seed);
        kgcn::save_features_tsv(ds.features, out_dir + "/features.tsv");
        kgcn::save_labels_tsv(ds.labels, out_dir + "/labels.tsv");
        kgcn::save_masks_tsv({ds.train_mask, ds.val_mask, ds.test_mask}, out_dir + "/masks.tsv");
        std::cout << "wrote directional-task features/labels/masks under " << out_dir << "\n";
    } else if (task != "none") {
        throw CLI::ValidationError("--task", "unknown task '" + task + "' (expected none|directional)");
    }
    manifest.write(0);
    return 0;
}

int cmd_partition(const std::string& graph_path, const std::string& labeling, std::size_t c,
                  const std::string& out_path, unsigned threads, const std::string& manifest_path) {
    Manifest manifest("partition", manifest_path);
    manifest.config({{"graph", graph_path}, {"labeling", labeling}, {"c", c},
                     {"out", out_path}, {"threads", threads}});
    manifest.input("graph", graph_path);

    const kgcn::Graph graph = kgcn::load_graph_tsv(graph_path);
    const auto ps = kgcn::partition_all(graph, labeling, c, threads);
    kgcn::save_partitions(ps, out_path);
    std::cout << "partitioned " << graph.num_nodes() << " nodes (labeling=" << labeling
              << ", c=" << c << ") -> " << out_path << "\n";
    manifest.write(0);
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed, unsigned threads,
              const std::string& manifest_path) {
    Manifest manifest("train", manifest_path);
    manifest.input("config", config_path);

    RunConfig rc = load_run_config(config_path);
    if (seed) {
        rc.model.seed = *seed;
        rc.train.seed = *seed;
    }
    manifest.config({{"run_config", rc.echo}, {"model", model_config_echo(rc.model)},
                     {"train", train_config_echo(rc.train)}, {"out_dir", out_dir}});
    manifest.input("edges", rc.edges);
    manifest.input("features", rc.features);
    manifest.input("labels", rc.labels);
    manifest.input("masks", rc.masks);

    const kgcn::Dataset dataset = kgcn::load_dataset(rc.edges, rc.features, rc.labels, rc.masks);
    const auto ps = obtain_partitions(rc, dataset.graph, threads, manifest);
    const auto result = kgcn::train(rc.model, rc.train, dataset, ps);

    kgcn::save_checkpoint(out_dir + "/checkpoint.json", rc.model, result.params,
                          dataset.features.cols);
    write_text_file(out_dir + "/report.json", result.report.to_json() + "\n");
    write_text_file(out_dir + "/report.txt", result.report.to_table());
    const double final_loss = result.report.train_loss.back();
    std::cout << "trained " << rc.model.layer_widths.size() << " layer(s), " << rc.train.epochs
              << " epochs; final train loss " << final_loss << ", test accuracy "
              << result.report.test_accuracy << " (" << result.report.wall_seconds << " s)\n";
    manifest.write(0);
    return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_dir,
             const std::string& mask_name, const std::string& partitions_path, unsigned threads,
             const std::string& out_path, const std::string& manifest_path) {
    Manifest manifest("eval", manifest_path);
    manifest.config({{"checkpoint", checkpoint_path}, {"data", data_dir}, {"mask", mask_name},
                     {"partitions", partitions_path}, {"out", out_path}});
    manifest.input("checkpoint", checkpoint_path);

    const auto ck = kgcn::load_checkpoint(checkpoint_path);
    const kgcn::Dataset dataset =
        kgcn::load_dataset(data_dir + "/edges.tsv", data_dir + "/features.tsv",
                           data_dir + "/labels.tsv", data_dir + "/masks.tsv");
    manifest.input("edges", data_dir + "/edges.tsv");
    manifest.input("features", data_dir + "/features.tsv");
    manifest.input("labels", data_dir + "/labels.tsv");
    manifest.input("masks", data_dir + "/masks.tsv");

    kgcn::PartitionSet ps;
    if (!partitions_path.empty()) {
        manifest.input("partitions", partitions_path);
        ps = kgcn::load_partitions(partitions_path, dataset.graph);
    } else {
        ps = kgcn::partition_all(dataset.graph, ck.config.labeling, ck.config.c, threads);
    }

    const std::vector<bool>* mask = nullptr;
    if (mask_name == "train") mask = &dataset.train_mask;
    else if (mask_name == "val") mask = &dataset.val_mask;
    else if (mask_name == "test") mask = &dataset.test_mask;
    else throw CLI::ValidationError("--mask", "expected train|val|test");

    const double accuracy = kgcn::evaluate(ck.params, ck.config, dataset, ps, *mask);
    std::cout << "accuracy[" << mask_name << "] = " << accuracy << "\n";
    json out = {{"mask", mask_name}, {"accuracy", accuracy}};
    write_text_file(out_path, out.dump(1) + "\n");
    manifest.write(0);
    return 0;
}

int cmd_gradcheck(const std::string& config_path, double step, double threshold, bool sabotage,
                  unsigned threads, const std::string& manifest_path) {
    Manifest manifest("gradcheck", manifest_path);
    manifest.input("config", config_path);

    RunConfig rc = load_run_config(config_path);
    manifest.config({{"run_config", rc.echo}, {"step", step}, {"threshold", threshold}});
    manifest.input("edges", rc.edges);
    manifest.input("features", rc.features);
    manifest.input("labels", rc.labels);
    manifest.input("masks", rc.masks);

    const kgcn::Dataset dataset = kgcn::load_dataset(rc.edges, rc.features, rc.labels, rc.masks);
    const auto ps = obtain_partitions(rc, dataset.graph, threads, manifest);
    const auto params = kgcn::init_params(rc.model, dataset.features.cols);
    double err = kgcn::gradient_check(rc.model, dataset, ps, params, step);
    // test hook: pretend the analytic gradient is off so the failure path
    // (exit code 1) can be exercised end to end
    if (sabotage) err = std::max(err, threshold * 10.0 + 1.0);
    const bool ok = err <= threshold;
    std::cout << (ok ? "PASS" : "FAIL") << " max_rel_err=" << err << " (threshold " << threshold
              << ")\n";
    manifest.write(ok ? 0 : 1);
    return ok ? 0 : 1;
}

int cmd_verify_grid(std::size_t height, std::size_t width, std::size_t m, std::size_t k,
                    const std::vector<std::uint64_t>& seeds, double tolerance,
                    const std::string& out_path, const std::string& manifest_path) {
    Manifest manifest("verify-grid", manifest_path);
    manifest.config({{"height", height}, {"width", width}, {"m", m}, {"k", k}, {"seeds", seeds},
                     {"tolerance", tolerance}, {"out", out_path}});

    json reports = json::array();
    double worst = 0.0;
    bool ok = true;
    for (std::uint64_t seed : seeds) {
        try {
            const auto report = kgcn::verify_grid_equivalence(height, width, m, k, seed);
            worst = std::max(worst, report.max_abs_deviation);
            ok = ok && report.max_abs_deviation <= tolerance;
            reports.push_back(json::parse(report.to_json(false)));
        } catch (const std::runtime_error& e) {
            // equivalence violation: dump the diagnostic and fail
            std::cout << "FAIL seed=" << seed << ": " << e.what() << "\n";
            reports.push_back({{"seed", seed}, {"error", e.what()}});
            ok = false;
        }
    }
    write_text_file(out_path, reports.dump(1) + "\n");
    std::cout << (ok ? "PASS" : "FAIL") << " max_dev=" << worst << " over " << seeds.size()
              << " seed(s), tolerance " << tolerance << "\n";
    manifest.write(ok ? 0 : 1);
    return ok ? 0 : 1;
}

int cmd_expressivity(std::size_t height, std::size_t width, std::uint64_t seed, std::size_t epochs,
                     const std::string& out_path, const std::string& manifest_path) {
    Manifest manifest("expressivity", manifest_path);
    manifest.config({{"height", height}, {"width", width}, {"seed", seed}, {"epochs", epochs},
                     {"out", out_path}});

    const auto report = kgcn::expressivity_demo(height, width, seed, epochs);
    write_text_file(out_path, report.to_json() + "\n");
    std::cout << "c1_train_accuracy=" << report.c1_train_accuracy
              << " kgcn_train_accuracy=" << report.kgcn_train_accuracy
              << " reflection_max_dev=" << report.reflection_max_deviation
              << " labels_flip=" << (report.labels_flip_under_reflection ? "yes" : "no") << "\n";
    manifest.write(0);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"structural-partition graph convolutional networks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kgcn::kToolName) + " " + kgcn::kVersion);

    unsigned threads = 0;
    app.add_option("--threads", threads, "partitioning worker count (or KGCN_THREADS)");

    // gen-grid
    auto* gen = app.add_subcommand("gen-grid", "generate a grid graph (and optional task data)");
    std::size_t g_height = 0, g_width = 0;
    std::string g_conn = "moore", g_task = "none", g_out = ".", g_manifest = "gen-grid.manifest.json";
    std::uint64_t g_seed = 0;
    gen->add_option("--height", g_height, "grid height")->required()->check(CLI::PositiveNumber);
    gen->add_option("--width", g_width, "grid width")->required()->check(CLI::PositiveNumber);
    gen->add_option("--connectivity", g_conn, "moore|von_neumann");
    gen->add_option("--task", g_task, "none|directional (synthetic features/labels)");
    gen->add_option("--seed", g_seed, "feature seed for --task directional");
    gen->add_option("--out-dir", g_out, "output directory");
    gen->add_option("--manifest", g_manifest, "manifest path");

    // partition
    auto* part = app.add_subcommand("partition", "precompute structural partitions");
    std::string p_graph, p_labeling = "degree", p_out = "partitions.json",
                p_manifest = "partition.manifest.json";
    std::size_t p_c = 1;
    part->add_option("--graph", p_graph, "edges.tsv path")->required();
    part->add_option("--labeling", p_labeling, "degree|wl|closeness|betweenness|canonical");
    part->add_option("--c", p_c, "component count")->required()->check(CLI::PositiveNumber);
    part->add_option("--out", p_out, "partition cache path");
    part->add_option("--manifest", p_manifest, "manifest path");

    // train
    auto* tr = app.add_subcommand("train", "train a model from a run config");
    std::string t_config, t_out = ".", t_manifest = "train.manifest.json";
    std::optional<std::uint64_t> t_seed;
    tr->add_option("--config", t_config, "run config JSON")->required();
    tr->add_option("--out-dir", t_out, "output directory for checkpoint/report");
    tr->add_option("--seed", t_seed, "override model and train seeds");
    tr->add_option("--manifest", t_manifest, "manifest path");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string e_checkpoint, e_data, e_mask = "test", e_partitions, e_out = "eval.json",
                e_manifest = "eval.manifest.json";
    ev->add_option("--checkpoint", e_checkpoint, "checkpoint JSON")->required();
    ev->add_option("--data", e_data, "directory with edges/features/labels/masks .tsv")->required();
    ev->add_option("--mask", e_mask, "train|val|test");
    ev->add_option("--partitions", e_partitions, "partition cache (recomputed if omitted)");
    ev->add_option("--out", e_out, "JSON output path");
    ev->add_option("--manifest", e_manifest, "manifest path");

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient check");
    std::string c_config, c_manifest = "gradcheck.manifest.json";
    double c_step = 1e-4, c_threshold = 1e-4;
    bool c_sabotage = false;
    gc->add_option("--config", c_config, "run config JSON")->required();
    gc->add_option("--step", c_step, "finite-difference step")->check(CLI::PositiveNumber);
    gc->add_option("--threshold", c_threshold, "max allowed relative error");
    gc->add_flag("--sabotage-gradient", c_sabotage)->group("");  // test hook, hidden
    gc->add_option("--manifest", c_manifest, "manifest path");

    // verify-grid
    auto* vg = app.add_subcommand("verify-grid", "grid-equivalence harness");
    std::size_t v_height = 6, v_width = 6, v_m = 2, v_k = 4;
    std::vector<std::uint64_t> v_seeds{0};
    double v_tol = 1e-10;
    std::string v_out = "equivalence.json", v_manifest = "verify-grid.manifest.json";
    vg->add_option("--height", v_height, "grid height");
    vg->add_option("--width", v_width, "grid width");
    vg->add_option("--m", v_m, "receptive-field parameter (only 2 supported)");
    vg->add_option("--k", v_k, "filter count");
    vg->add_option("--seeds", v_seeds, "seed list")->delimiter(',');
    vg->add_option("--tolerance", v_tol, "max allowed deviation");
    vg->add_option("--out", v_out, "JSON report path");
    vg->add_option("--manifest", v_manifest, "manifest path");

    // expressivity
    auto* ex = app.add_subcommand("expressivity", "directional-task separation demo");
    std::size_t x_height = 8, x_width = 8, x_epochs = 500;
    std::uint64_t x_seed = 0;
    std::string x_out = "expressivity.json", x_manifest = "expressivity.manifest.json";
    ex->add_option("--height", x_height, "grid height");
    ex->add_option("--width", x_width, "grid width");
    ex->add_option("--seed", x_seed, "feature/init seed");
    ex->add_option("--epochs", x_epochs, "training budget per model");
    ex->add_option("--out", x_out, "JSON report path");
    ex->add_option("--manifest", x_manifest, "manifest path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // help/version exit 0, usage errors exit 2
    }

    const unsigned worker_count = resolve_threads(threads);
    try {
        if (gen->parsed())
            return cmd_gen_grid(g_out, g_height, g_width, g_conn, g_task, g_seed, g_manifest);
        if (part->parsed())
            return cmd_partition(p_graph, p_labeling, p_c, p_out, worker_count, p_manifest);
        if (tr->parsed()) return cmd_train(t_config, t_out, t_seed, worker_count, t_manifest);
        if (ev->parsed())
            return cmd_eval(e_checkpoint, e_data, e_mask, e_partitions, worker_count, e_out,
                            e_manifest);
        if (gc->parsed())
            return cmd_gradcheck(c_config, c_step, c_threshold, c_sabotage, worker_count,
                                 c_manifest);
        if (vg->parsed())
            return cmd_verify_grid(v_height, v_width, v_m, v_k, v_seeds, v_tol, v_out, v_manifest);
        if (ex->parsed())
            return cmd_expressivity(x_height, x_width, x_seed, x_epochs, x_out, x_manifest);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
