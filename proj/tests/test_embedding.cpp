#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "fairim/datasets.hpp"
#include "fairim/embedding.hpp"

using namespace fairim;

namespace {

TrainingConfig small_config() {
    TrainingConfig cfg;
    cfg.embedding_dim = 4;
    cfg.encoder_hidden = {16, 8};
    cfg.critic_hidden = {8};
    cfg.batch_size = 16;
    cfg.pretrain_epochs = 5;
    cfg.critic_pretrain_steps = 10;
    cfg.adversarial_epochs = 5;
    return cfg;
}

AttributedGraph small_graph(std::uint64_t seed) {
    SbmParams p;
    p.n = 40;
    p.r = 0.4;
    p.p_intra_a = 0.25;
    p.p_intra_b = 0.25;
    p.p_inter = 0.05;
    return generate_sbm(p, seed);
}

std::vector<AttributeGroups> block_attr(const AttributedGraph& g, double beta) {
    return attribute_groups(g, {"block"}, beta);
}

bool same_weights(const Mlp& a, const Mlp& b) {
    if (a.layer_count() != b.layer_count()) return false;
    for (std::size_t l = 0; l < a.layer_count(); ++l) {
        if (a.weights[l] != b.weights[l]) return false;
        if (a.biases[l] != b.biases[l]) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("reconstruction loss closed forms") {
    Eigen::MatrixXd half = Eigen::MatrixXd::Constant(2, 2, 0.5);
    Eigen::MatrixXd target(2, 2);
    target << 1, 0, 0, 1;
    // flat 0.5 prediction costs ln 2 per entry regardless of the target
    CHECK(reconstruction_loss(half, target) == Catch::Approx(std::log(2.0)).margin(1e-12));

    Eigen::MatrixXd conf = Eigen::MatrixXd::Constant(1, 1, 0.9);
    Eigen::MatrixXd one = Eigen::MatrixXd::Constant(1, 1, 1.0);
    CHECK(reconstruction_loss(conf, one) == Catch::Approx(-std::log(0.9)).margin(1e-12));

    // squared error path
    Eigen::MatrixXd out(1, 2);
    out << 0.0, 1.0;
    Eigen::MatrixXd tgt(1, 2);
    tgt << 1.0, 1.0;
    CHECK(reconstruction_loss(out, tgt, ReconLoss::SquaredError) ==
          Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("reconstruction loss clamps extreme probabilities") {
    Eigen::MatrixXd zero = Eigen::MatrixXd::Constant(1, 1, 0.0);
    Eigen::MatrixXd one = Eigen::MatrixXd::Constant(1, 1, 1.0);
    const double loss = reconstruction_loss(zero, one);
    CHECK(std::isfinite(loss));
    CHECK(loss > 20.0);  // -log(1e-12)
}

TEST_CASE("reconstruction loss validates shapes") {
    Eigen::MatrixXd a(1, 2), b(2, 1);
    a.setZero();
    b.setZero();
    CHECK_THROWS_AS(reconstruction_loss(a, b), config_error);
}

TEST_CASE("critic loss is the mean score gap") {
    MlpSpec spec;
    spec.layer_sizes = {1, 1};
    spec.activations = {Activation::Identity};
    SplitMix64 rng(0);
    Mlp critic = init_mlp(spec, rng);
    critic.weights[0](0, 0) = 2.0;
    critic.biases[0](0) = 0.5;

    Eigen::MatrixXd za(2, 1), zb(1, 1);
    za << 1.0, 3.0;
    zb << 0.0;
    // scores 2.5 and 6.5 vs 0.5
    CHECK(critic_loss(critic, za, zb) == Catch::Approx(4.0).margin(1e-12));

    Eigen::MatrixXd empty(0, 1);
    CHECK_THROWS_AS(critic_loss(critic, empty, zb), data_error);
}

TEST_CASE("network shapes follow the config") {
    const AttributedGraph g = small_graph(1);
    EmbeddingModel model(g.n(), block_attr(g, 1.0), small_config(), 7);
    CHECK(model.encoder().input_dim() == 40);
    CHECK(model.encoder().output_dim() == 4);
    CHECK(model.decoder().input_dim() == 4);
    CHECK(model.decoder().output_dim() == 40);
    REQUIRE(model.critics().size() == 1);
    CHECK(model.critics()[0].input_dim() == 4);
    CHECK(model.critics()[0].output_dim() == 1);
    // decoder mirrors the encoder stack
    CHECK(model.decoder().spec.layer_sizes == std::vector<std::size_t>{4, 8, 16, 40});
    CHECK(model.decoder().spec.activations.back() == Activation::Sigmoid);
    CHECK(model.encoder().spec.activations.back() == Activation::Identity);
}

TEST_CASE("pretraining reduces reconstruction loss") {
    const AttributedGraph g = small_graph(2);
    const FeatureMatrix x = feature_matrix(g);
    EmbeddingModel model(g.n(), block_attr(g, 1.0), small_config(), 11);
    model.pretrain_autoencoder(x, 30);

    const auto& log = model.training_log();
    REQUIRE(log.size() == 30);
    CHECK(log.front().phase == "pretrain");
    CHECK(log.back().reconstruction < log.front().reconstruction);
    // pretrain totals are pure reconstruction
    CHECK(log.back().total == log.back().reconstruction);
    CHECK(model.epoch() == 30);
}

TEST_CASE("embedding output has the configured shape and is deterministic") {
    const AttributedGraph g = small_graph(3);
    const FeatureMatrix x = feature_matrix(g);

    EmbeddingModel m1(g.n(), block_attr(g, 1.0), small_config(), 5);
    EmbeddingModel m2(g.n(), block_attr(g, 1.0), small_config(), 5);
    EmbeddingModel m3(g.n(), block_attr(g, 1.0), small_config(), 6);
    m1.pretrain_autoencoder(x, 5);
    m2.pretrain_autoencoder(x, 5);
    m3.pretrain_autoencoder(x, 5);

    const EmbeddingMatrix z1 = m1.embed(x);
    const EmbeddingMatrix z2 = m2.embed(x);
    const EmbeddingMatrix z3 = m3.embed(x);
    CHECK(z1.rows() == 40);
    CHECK(z1.cols() == 4);
    CHECK(z1 == z2);
    CHECK(z1 != z3);
}

TEST_CASE("zero beta reproduces the plain autoencoder bit for bit") {
    const AttributedGraph g = small_graph(4);
    const FeatureMatrix x = feature_matrix(g);
    const TrainingConfig cfg = small_config();

    EmbeddingModel adversarial(g.n(), block_attr(g, 0.0), cfg, 99);
    adversarial.pretrain_autoencoder(x, 3);
    adversarial.adversarial_train(x, 10);

    EmbeddingModel plain(g.n(), block_attr(g, 0.0), cfg, 99);
    plain.pretrain_autoencoder(x, 13);

    CHECK(same_weights(adversarial.encoder(), plain.encoder()));
    CHECK(same_weights(adversarial.decoder(), plain.decoder()));
    CHECK(adversarial.embed(x) == plain.embed(x));
}

TEST_CASE("nonzero beta diverges from the plain trajectory") {
    const AttributedGraph g = small_graph(4);
    const FeatureMatrix x = feature_matrix(g);
    const TrainingConfig cfg = small_config();

    EmbeddingModel adversarial(g.n(), block_attr(g, 2.0), cfg, 99);
    adversarial.pretrain_autoencoder(x, 3);
    adversarial.pretrain_critics(x, 20);
    adversarial.adversarial_train(x, 10);

    EmbeddingModel plain(g.n(), block_attr(g, 0.0), cfg, 99);
    plain.pretrain_autoencoder(x, 13);

    CHECK_FALSE(same_weights(adversarial.encoder(), plain.encoder()));
}

TEST_CASE("critic ascent opens a positive gap on frozen embeddings") {
    const AttributedGraph g = small_graph(8);
    const FeatureMatrix x = feature_matrix(g);
    EmbeddingModel model(g.n(), block_attr(g, 1.0), small_config(), 17);
    model.pretrain_autoencoder(x, 10);
    model.pretrain_critics(x, 200);

    const EmbeddingMatrix z = model.embed(x);
    const auto& attr = model.attributes()[0];
    Eigen::MatrixXd za(attr.group_a.size(), z.cols()), zb(attr.group_b.size(), z.cols());
    for (std::size_t i = 0; i < attr.group_a.size(); ++i) za.row(i) = z.row(attr.group_a[i]);
    for (std::size_t i = 0; i < attr.group_b.size(); ++i) zb.row(i) = z.row(attr.group_b[i]);
    CHECK(critic_loss(model.critics()[0], za, zb) > 0.0);

    // pretraining critics logs one record without advancing the epoch counter
    CHECK(model.epoch() == 10);
    CHECK(model.training_log().back().phase == "critic_pretrain");
}

TEST_CASE("critic weights stay inside the clip bound") {
    const AttributedGraph g = small_graph(9);
    const FeatureMatrix x = feature_matrix(g);
    TrainingConfig cfg = small_config();
    cfg.weight_clip = 0.05;
    EmbeddingModel model(g.n(), block_attr(g, 1.0), cfg, 23);
    model.pretrain_autoencoder(x, 2);
    model.pretrain_critics(x, 50);
    model.adversarial_train(x, 3);
    CHECK(max_abs_weight(model.critics()[0]) <= 0.05 + 1e-15);
}

TEST_CASE("adversarial epochs log per-attribute gaps") {
    const AttributedGraph g = small_graph(10);
    const FeatureMatrix x = feature_matrix(g);
    EmbeddingModel model(g.n(), block_attr(g, 1.0), small_config(), 29);
    model.pretrain_autoencoder(x, 2);
    model.adversarial_train(x, 3);

    const auto& rec = model.training_log().back();
    CHECK(rec.phase == "adversarial");
    REQUIRE(rec.gaps.size() == 1);
    CHECK(std::isfinite(rec.gaps[0]));
    CHECK(rec.total == Catch::Approx(rec.reconstruction + rec.gaps[0]).margin(1e-12));
}

TEST_CASE("attribute validation rejects bad partitions") {
    const TrainingConfig cfg = small_config();
    AttributeGroups empty_a{"x", {}, {0, 1}, 1.0};
    CHECK_THROWS_AS(EmbeddingModel(2, {empty_a}, cfg, 0), data_error);

    AttributeGroups overlap{"x", {0, 1}, {1}, 1.0};
    CHECK_THROWS_AS(EmbeddingModel(2, {overlap}, cfg, 0), data_error);

    AttributeGroups partial{"x", {0}, {1}, 1.0};
    CHECK_THROWS_AS(EmbeddingModel(3, {partial}, cfg, 0), data_error);

    AttributeGroups negative{"x", {0}, {1}, -1.0};
    CHECK_THROWS_AS(EmbeddingModel(2, {negative}, cfg, 0), config_error);
}

TEST_CASE("feature matrix shape is checked") {
    const AttributedGraph g = small_graph(11);
    EmbeddingModel model(g.n(), block_attr(g, 1.0), small_config(), 31);
    Eigen::MatrixXd bad(10, 10);
    bad.setZero();
    CHECK_THROWS_AS(model.pretrain_autoencoder(bad, 1), config_error);
    CHECK_THROWS_AS(model.embed(bad), config_error);
}

TEST_CASE("checkpoint round trips the model") {
    const AttributedGraph g = small_graph(12);
    const FeatureMatrix x = feature_matrix(g);
    EmbeddingModel model(g.n(), block_attr(g, 1.5), small_config(), 37);
    model.pretrain_autoencoder(x, 4);
    model.pretrain_critics(x, 5);
    model.adversarial_train(x, 4);

    const nlohmann::json doc = model.checkpoint();
    CHECK(doc.at("format") == "fairim-checkpoint-1");
    const EmbeddingModel restored = EmbeddingModel::from_checkpoint(doc);

    CHECK(restored.node_count() == model.node_count());
    CHECK(restored.epoch() == model.epoch());
    CHECK(restored.attributes()[0].beta == 1.5);
    CHECK(restored.embed(x) == model.embed(x));
    CHECK(same_weights(restored.critics()[0], model.critics()[0]));

    // serialization is stable text
    CHECK(doc.dump() == restored.checkpoint().dump());
}

TEST_CASE("checkpoint loader rejects corrupted documents") {
    const AttributedGraph g = small_graph(13);
    EmbeddingModel model(g.n(), block_attr(g, 1.0), small_config(), 41);
    nlohmann::json doc = model.checkpoint();

    nlohmann::json bad_tag = doc;
    bad_tag["format"] = "something-else";
    CHECK_THROWS_AS(EmbeddingModel::from_checkpoint(bad_tag), data_error);

    nlohmann::json bad_weights = doc;
    bad_weights["encoder"]["weights"][0] = std::vector<double>{1.0, 2.0};
    CHECK_THROWS_AS(EmbeddingModel::from_checkpoint(bad_weights), data_error);

    nlohmann::json bad_critics = doc;
    bad_critics["critics"] = nlohmann::json::array();
    CHECK_THROWS_AS(EmbeddingModel::from_checkpoint(bad_critics), data_error);
}

TEST_CASE("free pretrain helper trains in one call") {
    const AttributedGraph g = small_graph(14);
    const FeatureMatrix x = feature_matrix(g);
    TrainingConfig cfg = small_config();
    cfg.pretrain_epochs = 3;
    const EmbeddingModel model = pretrain_autoencoder(x, block_attr(g, 1.0), cfg, 43);
    CHECK(model.epoch() == 3);
    CHECK(model.training_log().size() == 3);
}

TEST_CASE("training with no attributes works for normal embeddings") {
    const AttributedGraph g = small_graph(15);
    const FeatureMatrix x = feature_matrix(g);
    EmbeddingModel model(g.n(), {}, small_config(), 47);
    model.pretrain_autoencoder(x, 3);
    model.pretrain_critics(x, 10);  // no-op without attributes
    CHECK(model.critics().empty());
    CHECK(model.embed(x).rows() == 40);
}
