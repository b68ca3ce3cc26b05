#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "fairim/common.hpp"
#include "fairim/graph.hpp"
#include "fairim/mlp.hpp"
#include "fairim/rng.hpp"

namespace fairim {

using EmbeddingMatrix = Eigen::MatrixXd;  // n rows, one embedding per node

enum class ReconLoss : std::uint8_t { CrossEntropy, SquaredError };

inline const char* recon_loss_name(ReconLoss l) {
    return l == ReconLoss::CrossEntropy ? "cross_entropy" : "squared_error";
}

inline ReconLoss recon_loss_from_name(const std::string& name) {
    if (name == "cross_entropy") return ReconLoss::CrossEntropy;
    if (name == "squared_error") return ReconLoss::SquaredError;
    throw config_error("unknown reconstruction loss '" + name + "'");
}

struct TrainingConfig {
    std::size_t embedding_dim = 8;
    std::vector<std::size_t> encoder_hidden = {128, 64};
    std::vector<std::size_t> critic_hidden = {16};
    ReconLoss loss = ReconLoss::CrossEntropy;
    AdamParams embedder_adam{1e-3, 0.9, 0.999, 1e-8};
    AdamParams critic_adam{5e-4, 0.9, 0.999, 1e-8};
    std::size_t batch_size = 32;
    std::size_t pretrain_epochs = 100;
    std::size_t critic_pretrain_steps = 50;
    std::size_t adversarial_epochs = 200;
    std::size_t critic_steps_per_batch = 1;
    double weight_clip = 0.05;
    double default_beta = 1.0;

    void validate() const {
        if (embedding_dim == 0) throw config_error("embedding_dim must be positive");
        if (batch_size == 0) throw config_error("batch_size must be positive");
        if (weight_clip <= 0.0) throw config_error("weight_clip must be positive");
        if (default_beta < 0.0) throw config_error("beta must be >= 0");
    }
};

// One sensitive attribute as seen by the trainer: the binary partition plus
// its adversarial weight.
struct AttributeGroups {
    std::string name;
    std::vector<NodeId> group_a;
    std::vector<NodeId> group_b;
    double beta = 1.0;
};

inline std::vector<AttributeGroups> attribute_groups(const AttributedGraph& g,
                                                     const std::vector<std::string>& names,
                                                     double beta) {
    std::vector<AttributeGroups> out;
    for (const auto& name : names) {
        auto [a, b] = group_nodes(g, name);
        out.push_back(AttributeGroups{name, std::move(a), std::move(b), beta});
    }
    return out;
}

struct EpochRecord {
    std::string phase;  // pretrain | critic_pretrain | adversarial
    std::size_t epoch = 0;
    double reconstruction = 0.0;
    std::vector<double> gaps;  // one per attribute, NaN when never defined
    double total = 0.0;
};

// Mean binary cross-entropy over all entries, probabilities clamped away
// from {0,1} so the logs stay finite.
inline double reconstruction_loss(const Eigen::MatrixXd& output, const Eigen::MatrixXd& target,
                                  ReconLoss kind = ReconLoss::CrossEntropy) {
    if (output.rows() != target.rows() || output.cols() != target.cols())
        throw config_error("reconstruction_loss: shape mismatch");
    const double entries = static_cast<double>(output.rows()) * static_cast<double>(output.cols());
    if (entries == 0.0) throw config_error("reconstruction_loss: empty input");
    if (kind == ReconLoss::SquaredError) return (output - target).squaredNorm() / entries;
    constexpr double kEps = 1e-12;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < output.rows(); ++i)
        for (Eigen::Index j = 0; j < output.cols(); ++j) {
            const double p = std::clamp(output(i, j), kEps, 1.0 - kEps);
            const double t = target(i, j);
            sum -= t * std::log(p) + (1.0 - t) * std::log1p(-p);
        }
    return sum / entries;
}

// Mean critic score over A-rows minus mean over B-rows.
inline double critic_loss(const Mlp& critic, const Eigen::MatrixXd& z_a,
                          const Eigen::MatrixXd& z_b) {
    if (z_a.rows() == 0 || z_b.rows() == 0)
        throw data_error("critic_loss: a group has no rows in the batch");
    const Eigen::MatrixXd sa = forward(critic, z_a);
    const Eigen::MatrixXd sb = forward(critic, z_b);
    return sa.mean() - sb.mean();
}

namespace detail {

inline double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

// numerically stable BCE evaluated on pre-sigmoid logits
inline double bce_from_logits(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& target) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i)
        for (Eigen::Index j = 0; j < logits.cols(); ++j)
            sum += softplus(logits(i, j)) - target(i, j) * logits(i, j);
    return sum / (static_cast<double>(logits.rows()) * static_cast<double>(logits.cols()));
}

}  // namespace detail

class EmbeddingModel {
  public:
    EmbeddingModel(std::size_t n, std::vector<AttributeGroups> attributes,
                   TrainingConfig config, std::uint64_t seed)
        : n_(n), config_(std::move(config)), attributes_(std::move(attributes)), seed_(seed) {
        config_.validate();
        if (n_ == 0) throw config_error("embedding model needs at least one node");
        validate_attributes();

        SplitMix64 init_rng(derive_seed(seed_, kPurposeInit));
        encoder_ = init_mlp(encoder_spec(), init_rng);
        decoder_ = init_mlp(decoder_spec(), init_rng);
        for (std::size_t k = 0; k < attributes_.size(); ++k)
            critics_.push_back(init_mlp(critic_spec(), init_rng));
        encoder_adam_ = AdamState::zeros_like(encoder_);
        decoder_adam_ = AdamState::zeros_like(decoder_);
        for (const auto& c : critics_) critic_adams_.push_back(AdamState::zeros_like(c));
        build_cells();
    }

    std::size_t node_count() const { return n_; }
    std::size_t embedding_dim() const { return config_.embedding_dim; }
    const TrainingConfig& config() const { return config_; }
    const std::vector<AttributeGroups>& attributes() const { return attributes_; }
    const Mlp& encoder() const { return encoder_; }
    const Mlp& decoder() const { return decoder_; }
    const std::vector<Mlp>& critics() const { return critics_; }
    Mlp& critic(std::size_t k) { return critics_.at(k); }
    std::uint64_t seed() const { return seed_; }
    std::size_t epoch() const { return epoch_; }
    const std::vector<EpochRecord>& training_log() const { return log_; }

    void pretrain_autoencoder(const FeatureMatrix& x) {
        pretrain_autoencoder(x, config_.pretrain_epochs);
    }

    void pretrain_autoencoder(const FeatureMatrix& x, std::size_t epochs) {
        check_features(x);
        for (std::size_t e = 0; e < epochs; ++e) run_epoch(x, false);
    }

    void pretrain_critics(const FeatureMatrix& x) {
        pretrain_critics(x, config_.critic_pretrain_steps);
    }

    void pretrain_critics(const FeatureMatrix& x, std::size_t steps) {
        check_features(x);
        if (attributes_.empty()) return;
        const EmbeddingMatrix z = embed(x);
        std::vector<double> gaps(attributes_.size(),
                                 std::numeric_limits<double>::quiet_NaN());
        for (std::size_t step = 0; step < steps; ++step)
            for (std::size_t k = 0; k < attributes_.size(); ++k)
                gaps[k] = critic_ascent_step(k, z, is_a_[k]);
        if (steps > 0) {
            EpochRecord rec{"critic_pretrain", epoch_, 0.0, gaps, 0.0};
            log_.push_back(std::move(rec));
        }
    }

    void adversarial_train(const FeatureMatrix& x) {
        adversarial_train(x, config_.adversarial_epochs);
    }

    void adversarial_train(const FeatureMatrix& x, std::size_t epochs) {
        check_features(x);
        for (std::size_t e = 0; e < epochs; ++e) run_epoch(x, true);
    }

    EmbeddingMatrix embed(const FeatureMatrix& x) const {
        check_features(x);
        return forward(encoder_, x);
    }

    nlohmann::json checkpoint() const;
    static EmbeddingModel from_checkpoint(const nlohmann::json& doc);

  private:
    static constexpr std::uint64_t kPurposeInit = 0;
    static constexpr std::uint64_t kPurposeBatch = 1;

    struct Tag {};  // bypasses initialization when restoring a checkpoint
    EmbeddingModel(Tag, std::size_t n, std::vector<AttributeGroups> attributes,
                   TrainingConfig config, std::uint64_t seed)
        : n_(n), config_(std::move(config)), attributes_(std::move(attributes)), seed_(seed) {
        config_.validate();
        validate_attributes();
        build_cells();
    }

    void validate_attributes() {
        is_a_.clear();
        for (const auto& attr : attributes_) {
            if (attr.group_a.empty() || attr.group_b.empty())
                throw data_error("attribute '" + attr.name + "' has an empty group");
            if (attr.beta < 0.0)
                throw config_error("attribute '" + attr.name + "' has negative beta");
            std::vector<std::uint8_t> mark(n_, 0);
            for (NodeId u : attr.group_a) {
                if (u >= n_) throw data_error("attribute '" + attr.name + "': node out of range");
                mark[u] = 1;
            }
            for (NodeId u : attr.group_b)
                if (u >= n_ || mark[u])
                    throw data_error("attribute '" + attr.name + "': groups must partition nodes");
            if (attr.group_a.size() + attr.group_b.size() != n_)
                throw data_error("attribute '" + attr.name + "': groups must cover all nodes");
            is_a_.push_back(std::move(mark));
        }
    }

    MlpSpec encoder_spec() const {
        MlpSpec s;
        s.layer_sizes.push_back(n_);
        for (std::size_t h : config_.encoder_hidden) s.layer_sizes.push_back(h);
        s.layer_sizes.push_back(config_.embedding_dim);
        s.activations.assign(s.layer_sizes.size() - 1, Activation::Relu);
        s.activations.back() = Activation::Identity;
        return s;
    }

    MlpSpec decoder_spec() const {
        MlpSpec s;
        s.layer_sizes.push_back(config_.embedding_dim);
        for (auto it = config_.encoder_hidden.rbegin(); it != config_.encoder_hidden.rend(); ++it)
            s.layer_sizes.push_back(*it);
        s.layer_sizes.push_back(n_);
        s.activations.assign(s.layer_sizes.size() - 1, Activation::Relu);
        s.activations.back() = Activation::Sigmoid;
        return s;
    }

    MlpSpec critic_spec() const {
        MlpSpec s;
        s.layer_sizes.push_back(config_.embedding_dim);
        for (std::size_t h : config_.critic_hidden) s.layer_sizes.push_back(h);
        s.layer_sizes.push_back(1);
        s.activations.assign(s.layer_sizes.size() - 1, Activation::Relu);
        s.activations.back() = Activation::Identity;
        return s;
    }

    void check_features(const FeatureMatrix& x) const {
        if (static_cast<std::size_t>(x.rows()) != n_ ||
            static_cast<std::size_t>(x.cols()) != n_)
            throw config_error("feature matrix must be " + std::to_string(n_) + "x" +
                               std::to_string(n_));
    }

    // Stratification cells: one per combination of group labels across all
    // attributes, so round-robin dealing spreads every group over the batches.
    void build_cells() {
        cells_.clear();
        const std::size_t masks = std::size_t{1} << attributes_.size();
        std::vector<std::vector<Eigen::Index>> raw(masks);
        for (std::size_t u = 0; u < n_; ++u) {
            std::size_t mask = 0;
            for (std::size_t k = 0; k < attributes_.size(); ++k)
                if (!is_a_[k][u]) mask |= std::size_t{1} << k;
            raw[mask].push_back(static_cast<Eigen::Index>(u));
        }
        for (auto& cell : raw)
            if (!cell.empty()) cells_.push_back(std::move(cell));
    }

    std::vector<std::vector<Eigen::Index>> make_batches(std::size_t epoch_index) const {
        const std::size_t batch_count = (n_ + config_.batch_size - 1) / config_.batch_size;
        std::vector<std::vector<Eigen::Index>> batches(batch_count);
        SplitMix64 rng(derive_seed(derive_seed(seed_, kPurposeBatch), epoch_index));
        std::size_t position = 0;
        for (const auto& cell : cells_) {
            std::vector<Eigen::Index> order = cell;
            shuffle(order, rng);
            for (Eigen::Index u : order) batches[position++ % batch_count].push_back(u);
        }
        return batches;
    }

    // One pass over all mini-batches. The adversarial flag adds the critic gap
    // terms to the embedder objective and runs the critic updates; with it off
    // this is exactly one epoch of plain autoencoder training.
    void run_epoch(const FeatureMatrix& x, bool adversarial) {
        const auto batches = make_batches(epoch_);
        double recon_sum = 0.0;
        std::vector<double> gap_sum(attributes_.size(), 0.0);
        std::vector<std::size_t> gap_count(attributes_.size(), 0);

        for (const auto& rows : batches) {
            if (rows.empty()) continue;
            std::vector<double> batch_gaps;
            const double recon = embedder_step(x, rows, adversarial, batch_gaps);
            recon_sum += recon * static_cast<double>(rows.size());
            if (adversarial) {
                for (std::size_t k = 0; k < batch_gaps.size(); ++k)
                    if (std::isfinite(batch_gaps[k])) {
                        gap_sum[k] += batch_gaps[k];
                        ++gap_count[k];
                    }
                critic_steps(x, rows);
            }
        }

        EpochRecord rec;
        rec.phase = adversarial ? "adversarial" : "pretrain";
        rec.epoch = epoch_;
        rec.reconstruction = recon_sum / static_cast<double>(n_);
        rec.total = rec.reconstruction;
        if (adversarial) {
            for (std::size_t k = 0; k < attributes_.size(); ++k) {
                const double gap = gap_count[k] > 0
                                       ? gap_sum[k] / static_cast<double>(gap_count[k])
                                       : std::numeric_limits<double>::quiet_NaN();
                rec.gaps.push_back(gap);
                if (std::isfinite(gap)) rec.total += attributes_[k].beta * gap;
            }
        }
        if (!std::isfinite(rec.reconstruction))
            throw numeric_error("training diverged at epoch " + std::to_string(epoch_));
        log_.push_back(std::move(rec));
        ++epoch_;
    }

    // Descends L_recon plus the beta-weighted critic gaps; attributes with
    // beta zero contribute no term at all so the plain-autoencoder trajectory
    // is reproduced bit for bit.
    double embedder_step(const FeatureMatrix& x, const std::vector<Eigen::Index>& rows,
                         bool adversarial, std::vector<double>& batch_gaps) {
        const Eigen::Index b = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd xr(b, x.cols());
        for (Eigen::Index i = 0; i < b; ++i) xr.row(i) = x.row(rows[i]);

        ForwardCache enc_cache, dec_cache;
        const Eigen::MatrixXd z = forward(encoder_, xr, &enc_cache);
        const Eigen::MatrixXd out = forward(decoder_, z, &dec_cache);
        const double entries = static_cast<double>(b) * static_cast<double>(x.cols());

        double recon;
        Gradients dec_grads;
        Eigen::MatrixXd dz;
        if (config_.loss == ReconLoss::CrossEntropy) {
            recon = detail::bce_from_logits(dec_cache.pre_activations.back(), xr);
            const Eigen::MatrixXd glogit = (out - xr) / entries;
            dz = backward_from_logits(decoder_, dec_cache, glogit, dec_grads);
        } else {
            recon = (out - xr).squaredNorm() / entries;
            const Eigen::MatrixXd gout = 2.0 * (out - xr) / entries;
            dz = backward(decoder_, dec_cache, gout, dec_grads);
        }

        if (adversarial) {
            batch_gaps.assign(attributes_.size(), std::numeric_limits<double>::quiet_NaN());
            for (std::size_t k = 0; k < attributes_.size(); ++k) {
                if (attributes_[k].beta == 0.0) continue;
                const auto [na, nb] = batch_group_sizes(k, rows);
                if (na == 0 || nb == 0) continue;
                ForwardCache c_cache;
                const Eigen::MatrixXd scores = forward(critics_[k], z, &c_cache);
                double mean_a = 0.0, mean_b = 0.0;
                for (Eigen::Index i = 0; i < b; ++i)
                    (is_a_[k][static_cast<std::size_t>(rows[i])] ? mean_a : mean_b) +=
                        scores(i, 0);
                mean_a /= static_cast<double>(na);
                mean_b /= static_cast<double>(nb);
                batch_gaps[k] = mean_a - mean_b;

                Eigen::MatrixXd g(b, 1);
                const double beta = attributes_[k].beta;
                for (Eigen::Index i = 0; i < b; ++i)
                    g(i, 0) = is_a_[k][static_cast<std::size_t>(rows[i])]
                                  ? beta / static_cast<double>(na)
                                  : -beta / static_cast<double>(nb);
                Gradients ignored;
                dz += backward(critics_[k], c_cache, g, ignored);
            }
        }

        Gradients enc_grads;
        backward(encoder_, enc_cache, dz, enc_grads);
        adam_step(encoder_, encoder_adam_, enc_grads, config_.embedder_adam);
        adam_step(decoder_, decoder_adam_, dec_grads, config_.embedder_adam);
        return recon;
    }

    std::pair<std::size_t, std::size_t> batch_group_sizes(
        std::size_t k, const std::vector<Eigen::Index>& rows) const {
        std::size_t na = 0;
        for (Eigen::Index r : rows)
            if (is_a_[k][static_cast<std::size_t>(r)]) ++na;
        return {na, rows.size() - na};
    }

    // Critic updates see the refreshed embeddings, after the embedder moved.
    void critic_steps(const FeatureMatrix& x, const std::vector<Eigen::Index>& rows) {
        if (attributes_.empty()) return;
        const Eigen::Index b = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd xr(b, x.cols());
        for (Eigen::Index i = 0; i < b; ++i) xr.row(i) = x.row(rows[i]);
        const Eigen::MatrixXd z = forward(encoder_, xr);
        for (std::size_t k = 0; k < attributes_.size(); ++k) {
            const auto [na, nb] = batch_group_sizes(k, rows);
            if (na == 0 || nb == 0) continue;
            std::vector<std::uint8_t> row_is_a(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i)
                row_is_a[i] = is_a_[k][static_cast<std::size_t>(rows[i])];
            for (std::size_t s = 0; s < config_.critic_steps_per_batch; ++s)
                critic_ascent_step(k, z, row_is_a);
        }
    }

    // One gradient-ascent step on the critic's group-mean gap, then clip.
    // `row_is_a` flags each row of z; returns the gap before the update.
    double critic_ascent_step(std::size_t k, const Eigen::MatrixXd& z,
                              const std::vector<std::uint8_t>& row_is_a) {
        const Eigen::Index b = z.rows();
        std::size_t na = 0;
        for (std::uint8_t f : row_is_a)
            if (f) ++na;
        const std::size_t nb = row_is_a.size() - na;
        if (na == 0 || nb == 0)
            throw data_error("attribute '" + attributes_[k].name +
                             "' has an empty group in the critic batch");

        ForwardCache cache;
        const Eigen::MatrixXd scores = forward(critics_[k], z, &cache);
        double mean_a = 0.0, mean_b = 0.0;
        for (Eigen::Index i = 0; i < b; ++i)
            (row_is_a[static_cast<std::size_t>(i)] ? mean_a : mean_b) += scores(i, 0);
        mean_a /= static_cast<double>(na);
        mean_b /= static_cast<double>(nb);

        // minimize the negated gap so Adam performs ascent on the gap itself
        Eigen::MatrixXd g(b, 1);
        for (Eigen::Index i = 0; i < b; ++i)
            g(i, 0) = row_is_a[static_cast<std::size_t>(i)]
                          ? -1.0 / static_cast<double>(na)
                          : 1.0 / static_cast<double>(nb);
        Gradients grads;
        backward(critics_[k], cache, g, grads);
        adam_step(critics_[k], critic_adams_[k], grads, config_.critic_adam);
        clip_weights(critics_[k], config_.weight_clip);
        return mean_a - mean_b;
    }

    std::size_t n_;
    TrainingConfig config_;
    std::vector<AttributeGroups> attributes_;
    std::vector<std::vector<std::uint8_t>> is_a_;
    std::uint64_t seed_;
    Mlp encoder_, decoder_;
    std::vector<Mlp> critics_;
    AdamState encoder_adam_, decoder_adam_;
    std::vector<AdamState> critic_adams_;
    std::vector<std::vector<Eigen::Index>> cells_;
    std::size_t epoch_ = 0;
    std::vector<EpochRecord> log_;

    friend EmbeddingModel pretrain_autoencoder(const FeatureMatrix&,
                                               std::vector<AttributeGroups>,
                                               const TrainingConfig&, std::uint64_t);
};

// Convenience constructor: build from scratch and run the reconstruction
// phase; critics stay at their initial weights.
inline EmbeddingModel pretrain_autoencoder(const FeatureMatrix& x,
                                           std::vector<AttributeGroups> attributes,
                                           const TrainingConfig& config, std::uint64_t seed) {
    EmbeddingModel model(static_cast<std::size_t>(x.rows()), std::move(attributes), config,
                         seed);
    model.pretrain_autoencoder(x);
    return model;
}

namespace detail {

inline nlohmann::json mlp_to_json(const Mlp& mlp) {
    nlohmann::json doc;
    doc["layer_sizes"] = mlp.spec.layer_sizes;
    std::vector<std::string> acts;
    for (Activation a : mlp.spec.activations) acts.emplace_back(activation_name(a));
    doc["activations"] = acts;
    nlohmann::json weights = nlohmann::json::array();
    nlohmann::json biases = nlohmann::json::array();
    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
        std::vector<double> flat;
        flat.reserve(static_cast<std::size_t>(mlp.weights[l].size()));
        for (Eigen::Index i = 0; i < mlp.weights[l].rows(); ++i)
            for (Eigen::Index j = 0; j < mlp.weights[l].cols(); ++j)
                flat.push_back(mlp.weights[l](i, j));
        weights.push_back(flat);
        std::vector<double> bias(mlp.biases[l].data(),
                                 mlp.biases[l].data() + mlp.biases[l].size());
        biases.push_back(bias);
    }
    doc["weights"] = std::move(weights);
    doc["biases"] = std::move(biases);
    return doc;
}

inline Mlp mlp_from_json(const nlohmann::json& doc) {
    Mlp mlp;
    mlp.spec.layer_sizes = doc.at("layer_sizes").get<std::vector<std::size_t>>();
    for (const auto& name : doc.at("activations"))
        mlp.spec.activations.push_back(activation_from_name(name.get<std::string>()));
    mlp.spec.validate();
    const auto& weights = doc.at("weights");
    const auto& biases = doc.at("biases");
    if (weights.size() != mlp.spec.layer_sizes.size() - 1 ||
        biases.size() != weights.size())
        throw data_error("checkpoint: layer count mismatch");
    for (std::size_t l = 0; l + 1 < mlp.spec.layer_sizes.size(); ++l) {
        const auto in = static_cast<Eigen::Index>(mlp.spec.layer_sizes[l]);
        const auto out = static_cast<Eigen::Index>(mlp.spec.layer_sizes[l + 1]);
        const auto flat = weights.at(l).get<std::vector<double>>();
        if (flat.size() != static_cast<std::size_t>(in * out))
            throw data_error("checkpoint: weight block size mismatch");
        Eigen::MatrixXd w(out, in);
        for (Eigen::Index i = 0; i < out; ++i)
            for (Eigen::Index j = 0; j < in; ++j)
                w(i, j) = flat[static_cast<std::size_t>(i * in + j)];
        mlp.weights.push_back(std::move(w));
        const auto bias = biases.at(l).get<std::vector<double>>();
        if (bias.size() != static_cast<std::size_t>(out))
            throw data_error("checkpoint: bias size mismatch");
        mlp.biases.push_back(
            Eigen::Map<const Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(out)));
    }
    return mlp;
}

}  // namespace detail

inline nlohmann::json EmbeddingModel::checkpoint() const {
    nlohmann::json doc;
    doc["format"] = "fairim-checkpoint-1";
    doc["nodes"] = n_;
    doc["seed"] = seed_;
    doc["epoch"] = epoch_;
    nlohmann::json cfg;
    cfg["embedding_dim"] = config_.embedding_dim;
    cfg["encoder_hidden"] = config_.encoder_hidden;
    cfg["critic_hidden"] = config_.critic_hidden;
    cfg["loss"] = recon_loss_name(config_.loss);
    cfg["embedder_lr"] = config_.embedder_adam.learning_rate;
    cfg["critic_lr"] = config_.critic_adam.learning_rate;
    cfg["batch_size"] = config_.batch_size;
    cfg["pretrain_epochs"] = config_.pretrain_epochs;
    cfg["critic_pretrain_steps"] = config_.critic_pretrain_steps;
    cfg["adversarial_epochs"] = config_.adversarial_epochs;
    cfg["critic_steps_per_batch"] = config_.critic_steps_per_batch;
    cfg["weight_clip"] = config_.weight_clip;
    cfg["default_beta"] = config_.default_beta;
    doc["config"] = std::move(cfg);
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& a : attributes_) {
        nlohmann::json ja;
        ja["name"] = a.name;
        ja["beta"] = a.beta;
        ja["group_a"] = a.group_a;
        ja["group_b"] = a.group_b;
        attrs.push_back(std::move(ja));
    }
    doc["attributes"] = std::move(attrs);
    doc["encoder"] = detail::mlp_to_json(encoder_);
    doc["decoder"] = detail::mlp_to_json(decoder_);
    nlohmann::json critics = nlohmann::json::array();
    for (const auto& c : critics_) critics.push_back(detail::mlp_to_json(c));
    doc["critics"] = std::move(critics);
    return doc;
}

inline EmbeddingModel EmbeddingModel::from_checkpoint(const nlohmann::json& doc) {
    if (doc.value("format", "") != "fairim-checkpoint-1")
        throw data_error("checkpoint: unknown format tag");
    const auto n = doc.at("nodes").get<std::size_t>();
    const auto& cfg = doc.at("config");
    TrainingConfig config;
    config.embedding_dim = cfg.at("embedding_dim").get<std::size_t>();
    config.encoder_hidden = cfg.at("encoder_hidden").get<std::vector<std::size_t>>();
    config.critic_hidden = cfg.at("critic_hidden").get<std::vector<std::size_t>>();
    config.loss = recon_loss_from_name(cfg.at("loss").get<std::string>());
    config.embedder_adam.learning_rate = cfg.at("embedder_lr").get<double>();
    config.critic_adam.learning_rate = cfg.at("critic_lr").get<double>();
    config.batch_size = cfg.at("batch_size").get<std::size_t>();
    config.pretrain_epochs = cfg.at("pretrain_epochs").get<std::size_t>();
    config.critic_pretrain_steps = cfg.at("critic_pretrain_steps").get<std::size_t>();
    config.adversarial_epochs = cfg.at("adversarial_epochs").get<std::size_t>();
    config.critic_steps_per_batch = cfg.at("critic_steps_per_batch").get<std::size_t>();
    config.weight_clip = cfg.at("weight_clip").get<double>();
    config.default_beta = cfg.at("default_beta").get<double>();

    std::vector<AttributeGroups> attrs;
    for (const auto& ja : doc.at("attributes")) {
        AttributeGroups a;
        a.name = ja.at("name").get<std::string>();
        a.beta = ja.at("beta").get<double>();
        a.group_a = ja.at("group_a").get<std::vector<NodeId>>();
        a.group_b = ja.at("group_b").get<std::vector<NodeId>>();
        attrs.push_back(std::move(a));
    }

    EmbeddingModel model(Tag{}, n, std::move(attrs), config,
                         doc.at("seed").get<std::uint64_t>());
    model.epoch_ = doc.at("epoch").get<std::size_t>();
    model.encoder_ = detail::mlp_from_json(doc.at("encoder"));
    model.decoder_ = detail::mlp_from_json(doc.at("decoder"));
    for (const auto& jc : doc.at("critics"))
        model.critics_.push_back(detail::mlp_from_json(jc));
    if (model.critics_.size() != model.attributes_.size())
        throw data_error("checkpoint: critic count does not match attributes");
    if (model.encoder_.input_dim() != n || model.decoder_.output_dim() != n)
        throw data_error("checkpoint: network size does not match node count");
    model.encoder_adam_ = AdamState::zeros_like(model.encoder_);
    model.decoder_adam_ = AdamState::zeros_like(model.decoder_);
    for (const auto& c : model.critics_)
        model.critic_adams_.push_back(AdamState::zeros_like(c));
    return model;
}

}  // namespace fairim
