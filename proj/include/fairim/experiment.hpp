#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairim/baselines.hpp"
#include "fairim/common.hpp"
#include "fairim/datasets.hpp"
#include "fairim/diffusion.hpp"
#include "fairim/embedding.hpp"
#include "fairim/graph.hpp"
#include "fairim/graph_io.hpp"
#include "fairim/rng.hpp"
#include "fairim/selection.hpp"

namespace fairim {

inline constexpr const char* kCodeVersion = "0.1.0";

struct AgeFilterSpec {
    std::string attribute = "age";
    int max_value = 20;
    int group_a_max = 19;
};

struct DatasetSpec {
    std::string kind = "sbm";  // sbm | files
    SbmParams sbm;
    std::optional<std::uint64_t> sbm_seed;  // fixed graph; absent → fresh graph per trial
    std::string edge_file;
    std::string attribute_file;
    std::optional<AgeFilterSpec> age_filter;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    std::vector<std::string> attributes;
    TrainingConfig training;
    std::map<std::string, double> betas;  // per-attribute override of training.default_beta
    std::vector<std::string> methods;
    std::vector<std::size_t> budgets = {5, 10, 15, 20, 25, 30, 35, 40};
    std::size_t k_clusters = 4;
    double activation_probability = 0.01;
    std::size_t rollouts = 1000;
    std::size_t greedy_rollouts = 1000;
    std::size_t trials = 5;
    std::uint64_t master_seed = 0;

    void validate() const;
};

struct ExperimentRow {
    std::string method;
    std::size_t budget = 0;
    std::size_t trial = 0;
    double total_fraction = 0.0;
    double frac_a = 0.0;
    double frac_b = 0.0;
    double disparity = 0.0;
    double stderr_total = 0.0;
};

struct StageTiming {
    std::size_t trial = 0;
    std::string stage;
    double seconds = 0.0;
};

struct TrialError {
    std::size_t trial = 0;
    std::string stage;
    std::string message;
};

struct ExperimentReport {
    nlohmann::json config_echo;
    std::string config_hash;
    std::string code_version = kCodeVersion;
    std::uint64_t master_seed = 0;
    std::string attribute;  // attribute the frac_A/frac_B columns refer to
    std::vector<ExperimentRow> rows;
    std::vector<StageTiming> timings;  // diagnostics, excluded from determinism
    std::vector<TrialError> errors;
};

inline const std::set<std::string>& known_methods() {
    static const std::set<std::string> methods{"fair_embedding", "normal_embedding", "greedy",
                                              "degree", "random"};
    return methods;
}

inline void ExperimentConfig::validate() const {
    if (dataset.kind != "sbm" && dataset.kind != "files")
        throw config_error("dataset.kind must be 'sbm' or 'files'");
    if (dataset.kind == "sbm") dataset.sbm.validate();
    if (dataset.kind == "files" && dataset.edge_file.empty())
        throw config_error("dataset.edges is required for kind 'files'");
    if (methods.empty()) throw config_error("methods must be non-empty");
    for (const auto& m : methods)
        if (!known_methods().count(m)) throw config_error("unknown method '" + m + "'");
    if (budgets.empty()) throw config_error("budgets must be non-empty");
    for (std::size_t i = 0; i < budgets.size(); ++i) {
        if (budgets[i] == 0) throw config_error("budgets must be positive");
        if (i > 0 && budgets[i] <= budgets[i - 1])
            throw config_error("budgets must be strictly ascending");
    }
    if (attributes.empty())
        throw config_error("at least one sensitive attribute is required");
    if (activation_probability < 0.0 || activation_probability > 1.0)
        throw config_error("activation_probability must be in [0,1]");
    if (rollouts == 0 || greedy_rollouts == 0)
        throw config_error("rollouts must be positive");
    if (trials == 0) throw config_error("trials must be positive");
    if (k_clusters == 0) throw config_error("k_clusters must be positive");
    training.validate();
    for (const auto& [name, beta] : betas) {
        if (beta < 0.0) throw config_error("beta for '" + name + "' must be >= 0");
        if (std::find(attributes.begin(), attributes.end(), name) == attributes.end())
            throw config_error("beta given for unknown attribute '" + name + "'");
    }
}

// ---- config JSON parsing ----

namespace detail {

template <typename T>
T get_or(const nlohmann::json& doc, const char* key, T fallback) {
    if (!doc.contains(key)) return fallback;
    try {
        return doc.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw config_error(std::string("config field '") + key + "' has the wrong type");
    }
}

inline TrainingConfig parse_training(const nlohmann::json& doc) {
    TrainingConfig t;
    t.embedding_dim = get_or<std::size_t>(doc, "embedding_dim", t.embedding_dim);
    t.encoder_hidden =
        get_or<std::vector<std::size_t>>(doc, "encoder_hidden", t.encoder_hidden);
    t.critic_hidden = get_or<std::vector<std::size_t>>(doc, "critic_hidden", t.critic_hidden);
    if (doc.contains("loss")) t.loss = recon_loss_from_name(doc.at("loss").get<std::string>());
    t.embedder_adam.learning_rate =
        get_or<double>(doc, "embedder_lr", t.embedder_adam.learning_rate);
    t.critic_adam.learning_rate = get_or<double>(doc, "critic_lr", t.critic_adam.learning_rate);
    t.batch_size = get_or<std::size_t>(doc, "batch_size", t.batch_size);
    t.pretrain_epochs = get_or<std::size_t>(doc, "pretrain_epochs", t.pretrain_epochs);
    t.critic_pretrain_steps =
        get_or<std::size_t>(doc, "critic_pretrain_steps", t.critic_pretrain_steps);
    t.adversarial_epochs = get_or<std::size_t>(doc, "adversarial_epochs", t.adversarial_epochs);
    t.critic_steps_per_batch =
        get_or<std::size_t>(doc, "critic_steps_per_batch", t.critic_steps_per_batch);
    t.weight_clip = get_or<double>(doc, "weight_clip", t.weight_clip);
    t.default_beta = get_or<double>(doc, "beta", t.default_beta);
    return t;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const nlohmann::json& doc) {
    if (!doc.is_object()) throw config_error("experiment config must be a JSON object");
    ExperimentConfig cfg;
    if (doc.contains("dataset")) {
        const auto& d = doc.at("dataset");
        cfg.dataset.kind = detail::get_or<std::string>(d, "kind", "sbm");
        if (cfg.dataset.kind == "sbm") {
            cfg.dataset.sbm.n = detail::get_or<std::size_t>(d, "n", cfg.dataset.sbm.n);
            cfg.dataset.sbm.r = detail::get_or<double>(d, "r", cfg.dataset.sbm.r);
            cfg.dataset.sbm.p_intra_a =
                detail::get_or<double>(d, "p_intra_a", cfg.dataset.sbm.p_intra_a);
            cfg.dataset.sbm.p_intra_b =
                detail::get_or<double>(d, "p_intra_b", cfg.dataset.sbm.p_intra_b);
            if (d.contains("p_intra")) {
                cfg.dataset.sbm.p_intra_a = d.at("p_intra").get<double>();
                cfg.dataset.sbm.p_intra_b = cfg.dataset.sbm.p_intra_a;
            }
            cfg.dataset.sbm.p_inter =
                detail::get_or<double>(d, "p_inter", cfg.dataset.sbm.p_inter);
            if (d.contains("seed"))
                cfg.dataset.sbm_seed = d.at("seed").get<std::uint64_t>();
        } else {
            cfg.dataset.edge_file = detail::get_or<std::string>(d, "edges", "");
            cfg.dataset.attribute_file = detail::get_or<std::string>(d, "attributes", "");
            if (d.contains("age_filter")) {
                const auto& f = d.at("age_filter");
                AgeFilterSpec spec;
                spec.attribute = detail::get_or<std::string>(f, "attribute", spec.attribute);
                spec.max_value = detail::get_or<int>(f, "max_value", spec.max_value);
                spec.group_a_max = detail::get_or<int>(f, "group_a_max", spec.group_a_max);
                cfg.dataset.age_filter = spec;
            }
        }
    }
    cfg.attributes = detail::get_or<std::vector<std::string>>(doc, "attributes", {"block"});
    if (doc.contains("training")) cfg.training = detail::parse_training(doc.at("training"));
    if (doc.contains("betas")) {
        for (const auto& [name, value] : doc.at("betas").items())
            cfg.betas[name] = value.get<double>();
    }
    cfg.methods = detail::get_or<std::vector<std::string>>(doc, "methods", {});
    cfg.budgets = detail::get_or<std::vector<std::size_t>>(doc, "budgets", cfg.budgets);
    cfg.k_clusters = detail::get_or<std::size_t>(doc, "k_clusters", cfg.k_clusters);
    cfg.activation_probability =
        detail::get_or<double>(doc, "activation_probability", cfg.activation_probability);
    cfg.rollouts = detail::get_or<std::size_t>(doc, "rollouts", cfg.rollouts);
    cfg.greedy_rollouts = detail::get_or<std::size_t>(doc, "greedy_rollouts", cfg.rollouts);
    cfg.trials = detail::get_or<std::size_t>(doc, "trials", cfg.trials);
    cfg.master_seed = detail::get_or<std::uint64_t>(doc, "seed", cfg.master_seed);
    cfg.validate();
    return cfg;
}

inline nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json doc;
    nlohmann::json d;
    d["kind"] = cfg.dataset.kind;
    if (cfg.dataset.kind == "sbm") {
        d["n"] = cfg.dataset.sbm.n;
        d["r"] = cfg.dataset.sbm.r;
        d["p_intra_a"] = cfg.dataset.sbm.p_intra_a;
        d["p_intra_b"] = cfg.dataset.sbm.p_intra_b;
        d["p_inter"] = cfg.dataset.sbm.p_inter;
        if (cfg.dataset.sbm_seed) d["seed"] = *cfg.dataset.sbm_seed;
    } else {
        d["edges"] = cfg.dataset.edge_file;
        d["attributes"] = cfg.dataset.attribute_file;
        if (cfg.dataset.age_filter) {
            nlohmann::json f;
            f["attribute"] = cfg.dataset.age_filter->attribute;
            f["max_value"] = cfg.dataset.age_filter->max_value;
            f["group_a_max"] = cfg.dataset.age_filter->group_a_max;
            d["age_filter"] = std::move(f);
        }
    }
    doc["dataset"] = std::move(d);
    doc["attributes"] = cfg.attributes;
    nlohmann::json t;
    t["embedding_dim"] = cfg.training.embedding_dim;
    t["encoder_hidden"] = cfg.training.encoder_hidden;
    t["critic_hidden"] = cfg.training.critic_hidden;
    t["loss"] = recon_loss_name(cfg.training.loss);
    t["embedder_lr"] = cfg.training.embedder_adam.learning_rate;
    t["critic_lr"] = cfg.training.critic_adam.learning_rate;
    t["batch_size"] = cfg.training.batch_size;
    t["pretrain_epochs"] = cfg.training.pretrain_epochs;
    t["critic_pretrain_steps"] = cfg.training.critic_pretrain_steps;
    t["adversarial_epochs"] = cfg.training.adversarial_epochs;
    t["critic_steps_per_batch"] = cfg.training.critic_steps_per_batch;
    t["weight_clip"] = cfg.training.weight_clip;
    t["beta"] = cfg.training.default_beta;
    doc["training"] = std::move(t);
    if (!cfg.betas.empty()) doc["betas"] = cfg.betas;
    doc["methods"] = cfg.methods;
    doc["budgets"] = cfg.budgets;
    doc["k_clusters"] = cfg.k_clusters;
    doc["activation_probability"] = cfg.activation_probability;
    doc["rollouts"] = cfg.rollouts;
    doc["greedy_rollouts"] = cfg.greedy_rollouts;
    doc["trials"] = cfg.trials;
    doc["seed"] = cfg.master_seed;
    return doc;
}

namespace detail {

inline std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    static const char* digits = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = digits[h & 0xF];
        h >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf);
}

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline AttributedGraph build_dataset(const DatasetSpec& spec,
                                     const std::vector<std::string>& attributes,
                                     std::uint64_t trial_seed) {
    if (spec.kind == "sbm") {
        const std::uint64_t seed =
            spec.sbm_seed ? *spec.sbm_seed : derive_seed(trial_seed, 0);
        return generate_sbm(spec.sbm, seed);
    }
    AttributedGraph g = load_edge_list(spec.edge_file);
    if (!spec.attribute_file.empty()) load_attributes(spec.attribute_file, g);
    if (spec.age_filter) {
        const auto& f = *spec.age_filter;
        g = age_filter(g, f.attribute, f.max_value, f.group_a_max);
    }
    // raw label columns become binary groups; A/B letters by default
    for (const auto& name : attributes)
        if (!g.has_attribute(name) && g.has_raw_attribute(name))
            binarize_attribute(g, name, ab_predicate());
    return g;
}

class StageClock {
  public:
    StageClock(std::vector<StageTiming>& sink, std::size_t trial) : sink_(sink), trial_(trial) {}

    void start(std::string stage) {
        stage_ = std::move(stage);
        begin_ = std::chrono::steady_clock::now();
    }

    void stop() {
        if (stage_.empty()) return;
        const auto end = std::chrono::steady_clock::now();
        sink_.push_back(
            {trial_, stage_, std::chrono::duration<double>(end - begin_).count()});
        stage_.clear();
    }

    const std::string& stage() const { return stage_; }

  private:
    std::vector<StageTiming>& sink_;
    std::size_t trial_;
    std::string stage_;
    std::chrono::steady_clock::time_point begin_;
};

}  // namespace detail

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentReport report;
    report.config_echo = experiment_config_to_json(cfg);
    report.config_hash = detail::fnv1a_hex(report.config_echo.dump());
    report.master_seed = cfg.master_seed;
    report.attribute = cfg.attributes.front();

    const bool want_fair = std::find(cfg.methods.begin(), cfg.methods.end(),
                                     "fair_embedding") != cfg.methods.end();
    const bool want_normal = std::find(cfg.methods.begin(), cfg.methods.end(),
                                       "normal_embedding") != cfg.methods.end();
    const bool want_greedy =
        std::find(cfg.methods.begin(), cfg.methods.end(), "greedy") != cfg.methods.end();
    const bool want_degree =
        std::find(cfg.methods.begin(), cfg.methods.end(), "degree") != cfg.methods.end();
    const bool want_random =
        std::find(cfg.methods.begin(), cfg.methods.end(), "random") != cfg.methods.end();
    const std::size_t max_budget = cfg.budgets.back();

    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        const std::uint64_t trial_seed = derive_seed(cfg.master_seed, trial);
        detail::StageClock clock(report.timings, trial);
        try {
            clock.start("dataset");
            const AttributedGraph g =
                detail::build_dataset(cfg.dataset, cfg.attributes, trial_seed);
            for (const auto& name : cfg.attributes)
                if (std::find(g.attribute_names().begin(), g.attribute_names().end(), name) ==
                    g.attribute_names().end())
                    throw data_error("attribute '" + name + "' missing from dataset");
            if (max_budget > g.n())
                throw config_error("budget exceeds dataset node count");
            clock.stop();

            // seed sets per method, keyed by budget
            std::map<std::string, std::map<std::size_t, std::vector<NodeId>>> seeds;

            if (want_fair || want_normal) {
                const FeatureMatrix x = feature_matrix(g);
                if (want_fair) {
                    clock.start("train_fair");
                    std::vector<AttributeGroups> attrs =
                        attribute_groups(g, cfg.attributes, cfg.training.default_beta);
                    for (auto& a : attrs) {
                        const auto it = cfg.betas.find(a.name);
                        if (it != cfg.betas.end()) a.beta = it->second;
                    }
                    EmbeddingModel model(g.n(), std::move(attrs), cfg.training,
                                         derive_seed(trial_seed, 1));
                    model.pretrain_autoencoder(x);
                    model.pretrain_critics(x);
                    model.adversarial_train(x);
                    const EmbeddingMatrix z = model.embed(x);
                    clock.stop();
                    clock.start("select_fair");
                    for (std::size_t budget : cfg.budgets) {
                        auto s = fair_selection(z, g, cfg.attributes.front(), cfg.k_clusters,
                                                budget, derive_seed(trial_seed, 2));
                        seeds["fair_embedding"][budget] = std::move(s.nodes);
                    }
                    clock.stop();
                }
                if (want_normal) {
                    clock.start("train_normal");
                    EmbeddingModel model(g.n(), {}, cfg.training, derive_seed(trial_seed, 3));
                    model.pretrain_autoencoder(x);
                    const EmbeddingMatrix z = model.embed(x);
                    clock.stop();
                    clock.start("select_normal");
                    for (std::size_t budget : cfg.budgets) {
                        auto s = normal_selection(z, budget, derive_seed(trial_seed, 4));
                        seeds["normal_embedding"][budget] = std::move(s.nodes);
                    }
                    clock.stop();
                }
            }

            if (want_greedy) {
                clock.start("greedy");
                const auto res = greedy_celf(g, cfg.activation_probability, max_budget,
                                             cfg.greedy_rollouts, derive_seed(trial_seed, 5));
                for (std::size_t budget : cfg.budgets)
                    seeds["greedy"][budget] = std::vector<NodeId>(
                        res.seeds.nodes.begin(),
                        res.seeds.nodes.begin() + static_cast<std::ptrdiff_t>(budget));
                clock.stop();
            }
            if (want_degree) {
                const auto all = degree_seeds(g, max_budget);
                for (std::size_t budget : cfg.budgets)
                    seeds["degree"][budget] = std::vector<NodeId>(
                        all.nodes.begin(),
                        all.nodes.begin() + static_cast<std::ptrdiff_t>(budget));
            }
            if (want_random) {
                const auto all = random_seeds(g, max_budget, derive_seed(trial_seed, 7));
                for (std::size_t budget : cfg.budgets)
                    seeds["random"][budget] = std::vector<NodeId>(
                        all.nodes.begin(),
                        all.nodes.begin() + static_cast<std::ptrdiff_t>(budget));
            }

            clock.start("evaluate");
            CascadeParams params;
            params.activation_probability = cfg.activation_probability;
            params.rollouts = cfg.rollouts;
            params.rng_seed = derive_seed(trial_seed, 6);
            for (const auto& [method, by_budget] : seeds) {
                for (const auto& [budget, nodes] : by_budget) {
                    const InfluenceReport inf =
                        estimate_influence(g, nodes, params, cfg.attributes);
                    const auto& pg = inf.per_group.at(cfg.attributes.front());
                    ExperimentRow row;
                    row.method = method;
                    row.budget = budget;
                    row.trial = trial;
                    row.total_fraction = inf.total_fraction;
                    row.frac_a = pg.fraction_a;
                    row.frac_b = pg.fraction_b;
                    row.disparity = pg.disparity;
                    row.stderr_total = inf.stderr_total;
                    report.rows.push_back(std::move(row));
                }
            }
            clock.stop();
        } catch (const std::exception& ex) {
            const std::string stage = clock.stage().empty() ? "unknown" : clock.stage();
            clock.stop();
            report.errors.push_back({trial, stage, ex.what()});
        }
    }

    std::sort(report.rows.begin(), report.rows.end(),
              [](const ExperimentRow& a, const ExperimentRow& b) {
                  if (a.method != b.method) return a.method < b.method;
                  if (a.budget != b.budget) return a.budget < b.budget;
                  return a.trial < b.trial;
              });

    if (report.rows.empty() && !report.errors.empty()) {
        const auto& first = report.errors.front();
        throw data_error("all trials failed; first error at trial " +
                         std::to_string(first.trial) + " stage " + first.stage + ": " +
                         first.message);
    }
    return report;
}

struct AggregateRow {
    std::string method;
    std::size_t budget = 0;
    std::size_t trials = 0;
    double mean_total = 0.0;
    double se_total = 0.0;
    double mean_frac_a = 0.0;
    double mean_frac_b = 0.0;
    double mean_disparity = 0.0;
};

inline std::vector<AggregateRow> aggregate_rows(const std::vector<ExperimentRow>& rows) {
    std::map<std::pair<std::string, std::size_t>, std::vector<const ExperimentRow*>> cells;
    for (const auto& row : rows) cells[{row.method, row.budget}].push_back(&row);
    std::vector<AggregateRow> out;
    for (const auto& [key, members] : cells) {
        AggregateRow agg;
        agg.method = key.first;
        agg.budget = key.second;
        agg.trials = members.size();
        double sum = 0.0, sum_sq = 0.0;
        for (const auto* row : members) {
            sum += row->total_fraction;
            sum_sq += row->total_fraction * row->total_fraction;
            agg.mean_frac_a += row->frac_a;
            agg.mean_frac_b += row->frac_b;
            agg.mean_disparity += row->disparity;
        }
        const double m = static_cast<double>(members.size());
        agg.mean_total = sum / m;
        agg.mean_frac_a /= m;
        agg.mean_frac_b /= m;
        agg.mean_disparity /= m;
        if (members.size() > 1) {
            const double var = std::max(0.0, (sum_sq - sum * sum / m) / (m - 1.0));
            agg.se_total = std::sqrt(var / m);
        }
        out.push_back(std::move(agg));
    }
    return out;
}

inline void emit_report(const ExperimentReport& report, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw data_error("cannot create output directory " + out_dir.string());

    const auto open = [&](const std::filesystem::path& p) {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw data_error("cannot write " + p.string());
        return f;
    };

    {
        auto f = open(out_dir / "rows.csv");
        f << "method,budget,trial,total_fraction,frac_A,frac_B,disparity,stderr_total\n";
        for (const auto& r : report.rows)
            f << r.method << ',' << r.budget << ',' << r.trial << ','
              << detail::format_double(r.total_fraction) << ','
              << detail::format_double(r.frac_a) << ',' << detail::format_double(r.frac_b)
              << ',' << detail::format_double(r.disparity) << ','
              << detail::format_double(r.stderr_total) << '\n';
    }
    {
        auto f = open(out_dir / "aggregate.csv");
        f << "method,budget,trials,mean_total_fraction,se_total_fraction,mean_frac_A,"
             "mean_frac_B,mean_disparity\n";
        for (const auto& a : aggregate_rows(report.rows))
            f << a.method << ',' << a.budget << ',' << a.trials << ','
              << detail::format_double(a.mean_total) << ','
              << detail::format_double(a.se_total) << ','
              << detail::format_double(a.mean_frac_a) << ','
              << detail::format_double(a.mean_frac_b) << ','
              << detail::format_double(a.mean_disparity) << '\n';
    }
    {
        nlohmann::json manifest;
        manifest["code_version"] = report.code_version;
        manifest["config"] = report.config_echo;
        manifest["config_hash"] = report.config_hash;
        manifest["master_seed"] = report.master_seed;
        manifest["attribute"] = report.attribute;
        manifest["row_count"] = report.rows.size();
        nlohmann::json errors = nlohmann::json::array();
        for (const auto& e : report.errors) {
            nlohmann::json je;
            je["trial"] = e.trial;
            je["stage"] = e.stage;
            je["message"] = e.message;
            errors.push_back(std::move(je));
        }
        manifest["errors"] = std::move(errors);
        auto f = open(out_dir / "manifest.json");
        f << manifest.dump(2) << '\n';
    }
    {
        // wall-clock diagnostics; the one file allowed to differ between runs
        auto f = open(out_dir / "timings.csv");
        f << "trial,stage,seconds\n";
        for (const auto& t : report.timings)
            f << t.trial << ',' << t.stage << ',' << detail::format_double(t.seconds) << '\n';
    }
}

}  // namespace fairim
