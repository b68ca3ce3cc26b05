// Command-line front end: dataset generation, training, selection, simulation,
// baselines, and the config-driven experiment runner.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fairim/fairim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw fairim::config_error("cannot open config file " + path);
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw fairim::config_error("invalid JSON in " + path + ": " + e.what());
    }
}

fs::path ensure_out_dir(const std::string& out) {
    if (out.empty()) throw fairim::config_error("--out is required for this command");
    fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw fairim::data_error("cannot create output directory " + out);
    return dir;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw fairim::data_error("cannot write " + path.string());
    f << content;
}

std::vector<fairim::NodeId> load_seed_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw fairim::data_error("cannot open seed file " + path);
    std::vector<fairim::NodeId> seeds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        const auto trimmed = fairim::detail::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        const auto value = fairim::detail::parse_u64(trimmed);
        if (!value)
            throw fairim::data_error(path + ":" + std::to_string(line_no) +
                                     ": expected a node id, got '" + std::string(trimmed) +
                                     "'");
        seeds.push_back(static_cast<fairim::NodeId>(*value));
    }
    return seeds;
}

void write_seed_file(const fs::path& path, const std::vector<fairim::NodeId>& seeds) {
    std::ostringstream out;
    for (fairim::NodeId u : seeds) out << u << '\n';
    write_text(path, out.str());
}

json influence_to_json(const fairim::InfluenceReport& r) {
    json doc;
    doc["total_fraction"] = r.total_fraction;
    doc["stderr_total"] = r.stderr_total;
    doc["expected_count"] = r.expected_count;
    doc["rollouts"] = r.rollouts;
    doc["activation_probability"] = r.activation_probability;
    doc["rng_seed"] = r.rng_seed;
    doc["exact"] = r.exact;
    doc["seeds_included"] = r.seeds_included;
    doc["seeds"] = r.seeds;
    json groups = json::object();
    for (const auto& [name, g] : r.per_group) {
        json jg;
        jg["size_A"] = g.size_a;
        jg["size_B"] = g.size_b;
        jg["fraction_A"] = g.fraction_a;
        jg["fraction_B"] = g.fraction_b;
        jg["stderr_A"] = g.stderr_a;
        jg["stderr_B"] = g.stderr_b;
        jg["disparity"] = g.disparity;
        groups[name] = std::move(jg);
    }
    doc["per_group"] = std::move(groups);
    return doc;
}

// Shared dataset loading for the file-based subcommands: edge list plus an
// optional attribute CSV, binarizing label columns on demand.
fairim::AttributedGraph load_graph(const std::string& edges, const std::string& attrs,
                                   const std::vector<std::string>& attr_names) {
    fairim::AttributedGraph g = fairim::load_edge_list(edges);
    if (!attrs.empty()) fairim::load_attributes(attrs, g);
    for (const auto& name : attr_names)
        if (!g.has_attribute(name)) {
            if (!g.has_raw_attribute(name))
                throw fairim::data_error("attribute '" + name + "' not found");
            fairim::binarize_attribute(g, name, fairim::ab_predicate());
        }
    return g;
}

std::string loss_log_csv(const fairim::EmbeddingModel& model) {
    std::ostringstream out;
    out << "phase,epoch,recon";
    for (const auto& a : model.attributes()) out << ",gap_" << a.name;
    out << ",embedder_total\n";
    for (const auto& rec : model.training_log()) {
        out << rec.phase << ',' << rec.epoch << ','
            << fairim::detail::format_double(rec.reconstruction);
        for (std::size_t k = 0; k < model.attributes().size(); ++k) {
            out << ',';
            if (k < rec.gaps.size() && std::isfinite(rec.gaps[k]))
                out << fairim::detail::format_double(rec.gaps[k]);
        }
        out << ',' << fairim::detail::format_double(rec.total) << '\n';
    }
    return out.str();
}

struct GlobalArgs {
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string config;
    std::string out;
};

int run_generate(const GlobalArgs& g, const json* cfg) {
    fairim::SbmParams params;
    std::uint64_t seed = g.seed;
    if (cfg) {
        params.n = fairim::detail::get_or<std::size_t>(*cfg, "n", params.n);
        params.r = fairim::detail::get_or<double>(*cfg, "r", params.r);
        if (cfg->contains("p_intra")) {
            params.p_intra_a = cfg->at("p_intra").get<double>();
            params.p_intra_b = params.p_intra_a;
        }
        params.p_intra_a = fairim::detail::get_or<double>(*cfg, "p_intra_a", params.p_intra_a);
        params.p_intra_b = fairim::detail::get_or<double>(*cfg, "p_intra_b", params.p_intra_b);
        params.p_inter = fairim::detail::get_or<double>(*cfg, "p_inter", params.p_inter);
        if (!g.seed_given && cfg->contains("seed"))
            seed = cfg->at("seed").get<std::uint64_t>();
    }
    const auto dir = ensure_out_dir(g.out);
    const fairim::AttributedGraph graph = fairim::generate_sbm(params, seed);
    fairim::write_edge_list(graph, (dir / "edges.txt").string());
    fairim::write_attributes(graph, (dir / "attributes.csv").string());
    const auto counts = fairim::count_edges_by_group(graph, "block");
    std::cout << "generated SBM: n=" << graph.n() << " edges=" << graph.edge_count()
              << " intra_A=" << counts.intra_a << " intra_B=" << counts.intra_b
              << " inter=" << counts.inter << '\n';
    return 0;
}

int run_train(const GlobalArgs& g, const json& cfg) {
    const auto edges = fairim::detail::get_or<std::string>(cfg, "edges", "");
    if (edges.empty()) throw fairim::config_error("train config needs 'edges'");
    const auto attr_file = fairim::detail::get_or<std::string>(cfg, "attributes_file", "");
    const auto attr_names =
        fairim::detail::get_or<std::vector<std::string>>(cfg, "attributes", {});
    fairim::TrainingConfig training;
    if (cfg.contains("training")) training = fairim::detail::parse_training(cfg.at("training"));
    const bool adversarial =
        fairim::detail::get_or<bool>(cfg, "adversarial", !attr_names.empty());
    if (adversarial && attr_names.empty())
        throw fairim::config_error("adversarial training needs at least one attribute");
    std::uint64_t seed = g.seed;
    if (!g.seed_given && cfg.contains("seed")) seed = cfg.at("seed").get<std::uint64_t>();

    const fairim::AttributedGraph graph = load_graph(edges, attr_file, attr_names);
    const fairim::FeatureMatrix x = fairim::feature_matrix(graph);
    std::vector<fairim::AttributeGroups> attrs =
        fairim::attribute_groups(graph, attr_names, training.default_beta);
    if (cfg.contains("betas"))
        for (auto& a : attrs)
            if (cfg.at("betas").contains(a.name))
                a.beta = cfg.at("betas").at(a.name).get<double>();

    fairim::EmbeddingModel model(graph.n(), std::move(attrs), training, seed);
    model.pretrain_autoencoder(x);
    if (adversarial) {
        model.pretrain_critics(x);
        model.adversarial_train(x);
    }

    const auto dir = ensure_out_dir(g.out);
    write_text(dir / "checkpoint.json", model.checkpoint().dump(2) + "\n");
    write_text(dir / "loss.csv", loss_log_csv(model));
    std::cout << "trained " << (adversarial ? "adversarial" : "plain") << " model: "
              << model.epoch() << " epochs, checkpoint in " << dir.string() << '\n';
    return 0;
}

int run_embed(const GlobalArgs& g, const std::string& checkpoint, const std::string& edges) {
    const fairim::EmbeddingModel model =
        fairim::EmbeddingModel::from_checkpoint(load_json_file(checkpoint));
    const fairim::AttributedGraph graph = fairim::load_edge_list(edges);
    if (graph.n() != model.node_count())
        throw fairim::data_error("graph has " + std::to_string(graph.n()) +
                                 " nodes but checkpoint expects " +
                                 std::to_string(model.node_count()));
    const fairim::EmbeddingMatrix z = model.embed(fairim::feature_matrix(graph));
    std::ostringstream out;
    out << "node_id";
    for (std::size_t j = 0; j < model.embedding_dim(); ++j) out << ",z_" << j;
    out << '\n';
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        out << i;
        for (Eigen::Index j = 0; j < z.cols(); ++j)
            out << ',' << fairim::detail::format_double(z(i, j));
        out << '\n';
    }
    const auto dir = ensure_out_dir(g.out);
    write_text(dir / "embedding.csv", out.str());
    std::cout << "wrote " << z.rows() << "x" << z.cols() << " embedding to "
              << (dir / "embedding.csv").string() << '\n';
    return 0;
}

fairim::EmbeddingMatrix load_embedding_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw fairim::data_error("cannot open embedding file " + path);
    std::string line;
    if (!std::getline(f, line))
        throw fairim::data_error("embedding file " + path + " is empty");
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (fairim::detail::trim(line).empty()) continue;
        const auto fields = fairim::detail::split(line, ',');
        if (fields.size() < 2)
            throw fairim::data_error(path + ":" + std::to_string(line_no) +
                                     ": expected node_id and coordinates");
        std::vector<double> coords;
        for (std::size_t c = 1; c < fields.size(); ++c) {
            try {
                coords.push_back(std::stod(std::string(fields[c])));
            } catch (const std::exception&) {
                throw fairim::data_error(path + ":" + std::to_string(line_no) +
                                         ": bad number '" + std::string(fields[c]) + "'");
            }
        }
        rows.push_back(std::move(coords));
    }
    if (rows.empty()) throw fairim::data_error("embedding file " + path + " has no rows");
    fairim::EmbeddingMatrix z(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size())
            throw fairim::data_error("embedding file " + path + " has ragged rows");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return z;
}

int run_select(const GlobalArgs& g, const std::string& embedding_file,
               const std::string& method, std::size_t budget, std::size_t k_clusters,
               const std::string& edges, const std::string& attr_file,
               const std::string& attribute) {
    const fairim::EmbeddingMatrix z = load_embedding_csv(embedding_file);
    fairim::SeedSet seeds;
    if (method == "normal") {
        seeds = fairim::normal_selection(z, budget, g.seed);
    } else if (method == "fair") {
        if (edges.empty())
            throw fairim::config_error("fair selection needs --edges and an attribute");
        const fairim::AttributedGraph graph = load_graph(edges, attr_file, {attribute});
        if (graph.n() != static_cast<std::size_t>(z.rows()))
            throw fairim::data_error("embedding rows do not match graph nodes");
        seeds = fairim::fair_selection(z, graph, attribute, k_clusters, budget, g.seed);
    } else {
        throw fairim::config_error("unknown selection method '" + method + "'");
    }
    const auto dir = ensure_out_dir(g.out);
    write_seed_file(dir / "seeds.txt", seeds.nodes);
    json meta;
    meta["method"] = seeds.method;
    meta["budget"] = seeds.budget;
    meta["seed"] = g.seed;
    json counts = json::object();
    for (const auto& [name, c] : seeds.group_counts) {
        counts[name] = {{"A", c[0]}, {"B", c[1]}};
    }
    meta["group_counts"] = std::move(counts);
    write_text(dir / "selection.json", meta.dump(2) + "\n");
    std::cout << "selected " << seeds.nodes.size() << " seeds (" << seeds.method << ") into "
              << dir.string() << '\n';
    return 0;
}

int run_simulate(const GlobalArgs& g, const std::string& edges, const std::string& attr_file,
                 const std::vector<std::string>& attr_names, const std::string& seed_file,
                 double p, std::size_t rollouts, bool exact) {
    const fairim::AttributedGraph graph = load_graph(edges, attr_file, attr_names);
    const auto seeds = load_seed_file(seed_file);
    fairim::InfluenceReport report;
    if (exact) {
        report = fairim::exact_influence(graph, seeds, p, attr_names);
    } else {
        fairim::CascadeParams params;
        params.activation_probability = p;
        params.rollouts = rollouts;
        params.rng_seed = g.seed;
        report = fairim::estimate_influence(graph, seeds, params, attr_names);
    }
    const std::string doc = influence_to_json(report).dump(2) + "\n";
    if (!g.out.empty()) {
        const auto dir = ensure_out_dir(g.out);
        write_text(dir / "influence.json", doc);
    }
    std::cout << doc;
    return 0;
}

int run_baseline(const GlobalArgs& g, const std::string& edges, const std::string& method,
                 double p, std::size_t budget, std::size_t rollouts) {
    const fairim::AttributedGraph graph = fairim::load_edge_list(edges);
    const auto dir = ensure_out_dir(g.out);
    if (method == "greedy") {
        const auto res = fairim::greedy_celf(graph, p, budget, rollouts, g.seed);
        write_seed_file(dir / "seeds.txt", res.seeds.nodes);
        std::ostringstream trace;
        trace << "iteration,node,gain,gain_stderr,evaluations\n";
        for (std::size_t i = 0; i < res.trace.steps.size(); ++i) {
            const auto& s = res.trace.steps[i];
            trace << i << ',' << s.node << ',' << fairim::detail::format_double(s.gain) << ','
                  << fairim::detail::format_double(s.gain_stderr) << ',' << s.evaluations
                  << '\n';
        }
        write_text(dir / "trace.csv", trace.str());
    } else if (method == "degree") {
        write_seed_file(dir / "seeds.txt", fairim::degree_seeds(graph, budget).nodes);
    } else if (method == "random") {
        write_seed_file(dir / "seeds.txt", fairim::random_seeds(graph, budget, g.seed).nodes);
    } else {
        throw fairim::config_error("unknown baseline method '" + method + "'");
    }
    std::cout << "wrote " << method << " seeds to " << (dir / "seeds.txt").string() << '\n';
    return 0;
}

int run_experiment_cmd(const GlobalArgs& g) {
    if (g.config.empty()) throw fairim::config_error("experiment needs --config");
    json doc = load_json_file(g.config);
    fairim::ExperimentConfig cfg = fairim::parse_experiment_config(doc);
    if (g.seed_given) {
        cfg.master_seed = g.seed;
        cfg.validate();
    }
    const auto dir = ensure_out_dir(g.out);
    const fairim::ExperimentReport report = fairim::run_experiment(cfg);
    fairim::emit_report(report, dir);
    std::cout << "experiment complete: " << report.rows.size() << " rows, "
              << report.errors.size() << " trial errors, report in " << dir.string() << '\n';
    if (!report.errors.empty())
        for (const auto& e : report.errors)
            std::cerr << "trial " << e.trial << " failed at " << e.stage << ": " << e.message
                      << '\n';
    return 0;
}

int run_report(const GlobalArgs& g, const std::string& rows_path) {
    std::ifstream f(rows_path);
    if (!f) throw fairim::data_error("cannot open rows file " + rows_path);
    std::string line;
    if (!std::getline(f, line))
        throw fairim::data_error("rows file " + rows_path + " is empty");
    const std::string expected =
        "method,budget,trial,total_fraction,frac_A,frac_B,disparity,stderr_total";
    if (fairim::detail::trim(line) != expected)
        throw fairim::data_error("rows file " + rows_path + " has an unexpected header");
    std::vector<fairim::ExperimentRow> rows;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (fairim::detail::trim(line).empty()) continue;
        const auto fields = fairim::detail::split(line, ',');
        if (fields.size() != 8)
            throw fairim::data_error(rows_path + ":" + std::to_string(line_no) +
                                     ": expected 8 fields");
        try {
            fairim::ExperimentRow row;
            row.method = std::string(fields[0]);
            row.budget = std::stoul(std::string(fields[1]));
            row.trial = std::stoul(std::string(fields[2]));
            row.total_fraction = std::stod(std::string(fields[3]));
            row.frac_a = std::stod(std::string(fields[4]));
            row.frac_b = std::stod(std::string(fields[5]));
            row.disparity = std::stod(std::string(fields[6]));
            row.stderr_total = std::stod(std::string(fields[7]));
            rows.push_back(std::move(row));
        } catch (const std::exception&) {
            throw fairim::data_error(rows_path + ":" + std::to_string(line_no) +
                                     ": malformed row");
        }
    }
    const auto dir = ensure_out_dir(g.out);
    std::ostringstream out;
    out << "method,budget,trials,mean_total_fraction,se_total_fraction,mean_frac_A,"
           "mean_frac_B,mean_disparity\n";
    for (const auto& a : fairim::aggregate_rows(rows))
        out << a.method << ',' << a.budget << ',' << a.trials << ','
            << fairim::detail::format_double(a.mean_total) << ','
            << fairim::detail::format_double(a.se_total) << ','
            << fairim::detail::format_double(a.mean_frac_a) << ','
            << fairim::detail::format_double(a.mean_frac_b) << ','
            << fairim::detail::format_double(a.mean_disparity) << '\n';
    write_text(dir / "aggregate.csv", out.str());
    std::cout << "aggregated " << rows.size() << " rows into "
              << (dir / "aggregate.csv").string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fair influence maximization via adversarial graph embeddings"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalArgs g;
    app.add_option("--seed", g.seed, "Master RNG seed")->each([&](const std::string&) {
        g.seed_given = true;
    });
    app.add_option("--config", g.config, "JSON config file");
    app.add_option("--out", g.out, "Output directory");

    auto* generate = app.add_subcommand("generate", "Generate a stochastic block model graph");
    fairim::SbmParams sbm_defaults;
    double gen_r = sbm_defaults.r;
    std::size_t gen_n = sbm_defaults.n;
    double gen_p_intra = -1.0, gen_p_intra_a = sbm_defaults.p_intra_a,
           gen_p_intra_b = sbm_defaults.p_intra_b, gen_p_inter = sbm_defaults.p_inter;
    generate->add_option("--n", gen_n, "Node count");
    generate->add_option("--r", gen_r, "Fraction of nodes in group A");
    generate->add_option("--p-intra", gen_p_intra, "Intra-group edge probability (both)");
    generate->add_option("--p-intra-a", gen_p_intra_a, "Intra-A edge probability");
    generate->add_option("--p-intra-b", gen_p_intra_b, "Intra-B edge probability");
    generate->add_option("--p-inter", gen_p_inter, "Inter-group edge probability");

    auto* train = app.add_subcommand("train", "Train an embedding model from a config");

    auto* embed = app.add_subcommand("embed", "Write node embeddings from a checkpoint");
    std::string embed_checkpoint, embed_edges;
    embed->add_option("--checkpoint", embed_checkpoint, "Checkpoint JSON")->required();
    embed->add_option("--edges", embed_edges, "Edge list file")->required();

    auto* select = app.add_subcommand("select", "Pick seeds from an embedding");
    std::string sel_embedding, sel_method = "normal", sel_edges, sel_attr_file,
                sel_attribute = "block";
    std::size_t sel_budget = 0, sel_k = 4;
    select->add_option("--embedding", sel_embedding, "Embedding CSV")->required();
    select->add_option("--method", sel_method, "normal|fair");
    select->add_option("--budget", sel_budget, "Number of seeds")->required();
    select->add_option("--k", sel_k, "Clusters for fair selection");
    select->add_option("--edges", sel_edges, "Edge list (fair selection)");
    select->add_option("--attributes-file", sel_attr_file, "Attribute CSV");
    select->add_option("--attribute", sel_attribute, "Sensitive attribute name");

    auto* simulate = app.add_subcommand("simulate", "Estimate influence of a seed set");
    std::string sim_edges, sim_attr_file, sim_seeds;
    std::vector<std::string> sim_attrs;
    double sim_p = 0.01;
    std::size_t sim_rollouts = 1000;
    bool sim_exact = false;
    simulate->add_option("--edges", sim_edges, "Edge list file")->required();
    simulate->add_option("--attributes-file", sim_attr_file, "Attribute CSV");
    simulate->add_option("--attribute", sim_attrs, "Attribute name (repeatable)");
    simulate->add_option("--seeds", sim_seeds, "Seed file, one node id per line")->required();
    simulate->add_option("--p", sim_p, "Activation probability");
    simulate->add_option("--rollouts", sim_rollouts, "Monte Carlo rollouts");
    simulate->add_flag("--exact", sim_exact, "Exact enumeration (small graphs)");

    auto* baseline = app.add_subcommand("baseline", "Greedy, degree, or random seeds");
    std::string base_edges, base_method = "greedy";
    double base_p = 0.01;
    std::size_t base_budget = 0, base_rollouts = 1000;
    baseline->add_option("--edges", base_edges, "Edge list file")->required();
    baseline->add_option("--method", base_method, "greedy|degree|random");
    baseline->add_option("--p", base_p, "Activation probability");
    baseline->add_option("--budget", base_budget, "Number of seeds")->required();
    baseline->add_option("--rollouts", base_rollouts, "Rollouts per greedy evaluation");

    auto* experiment = app.add_subcommand("experiment", "Run a config-driven experiment");

    auto* report_cmd = app.add_subcommand("report", "Recompute aggregates from a rows CSV");
    std::string report_rows;
    report_cmd->add_option("--rows", report_rows, "rows.csv from an experiment")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (generate->parsed()) {
            std::optional<json> cfg;
            if (!g.config.empty()) cfg = load_json_file(g.config);
            json merged = cfg.value_or(json::object());
            if (generate->count("--n")) merged["n"] = gen_n;
            if (generate->count("--r")) merged["r"] = gen_r;
            if (generate->count("--p-intra")) merged["p_intra"] = gen_p_intra;
            if (generate->count("--p-intra-a")) merged["p_intra_a"] = gen_p_intra_a;
            if (generate->count("--p-intra-b")) merged["p_intra_b"] = gen_p_intra_b;
            if (generate->count("--p-inter")) merged["p_inter"] = gen_p_inter;
            return run_generate(g, &merged);
        }
        if (train->parsed()) {
            if (g.config.empty()) throw fairim::config_error("train needs --config");
            return run_train(g, load_json_file(g.config));
        }
        if (embed->parsed()) return run_embed(g, embed_checkpoint, embed_edges);
        if (select->parsed())
            return run_select(g, sel_embedding, sel_method, sel_budget, sel_k, sel_edges,
                              sel_attr_file, sel_attribute);
        if (simulate->parsed())
            return run_simulate(g, sim_edges, sim_attr_file, sim_attrs, sim_seeds, sim_p,
                                sim_rollouts, sim_exact);
        if (baseline->parsed())
            return run_baseline(g, base_edges, base_method, base_p, base_budget,
                                base_rollouts);
        if (experiment->parsed()) return run_experiment_cmd(g);
        if (report_cmd->parsed()) return run_report(g, report_rows);
        throw fairim::config_error("no subcommand given");
    } catch (const fairim::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const fairim::data_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const fairim::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
