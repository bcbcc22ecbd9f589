#include "catch_amalgamated.hpp"

#include <cmath>
#include <filesystem>
#include <numeric>

#include <plugsense/net.hpp>

using namespace plugsense;
using Catch::Approx;

namespace {

NetConfig tiny(Normalization n = Normalization::standardize) {
    NetConfig c;
    c.conv1 = {3, 3, 3};
    c.conv2 = {4, 3, 3};
    c.fc1_width = 12;
    c.fc2_width = 8;
    c.normalization = n;
    c.init_seed = 7;
    return c;
}

Matrix random_input(std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix x(static_cast<Eigen::Index>(kFeatureSize), static_cast<Eigen::Index>(cols));
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = rng.uniform(0.0, 1.0);
    return x;
}

Matrix target_of(const LabelSet& ls, const NetConfig& cfg) { return target_column(ls, cfg); }

}  // namespace

TEST_CASE("parameter layout") {
    const NetConfig c = tiny();
    const NetShape s(c);
    CHECK(s.h1 == 12);
    CHECK(s.w1 == 18);
    CHECK(s.h2 == 10);
    CHECK(s.w2 == 16);
    const std::size_t expect = 3 * 18 + 3 + 4 * 27 + 4 + 12 * 4 * 160 + 12 + 8 * 12 + 8 + 14 * 8 + 14;
    CHECK(parameter_count(c) == expect);
    const auto t = tensor_layout(c);
    CHECK(t[0].offset == 0);
    for (std::size_t k = 1; k < t.size(); ++k) CHECK(t[k].offset == t[k - 1].offset + t[k - 1].size());
    const NetConfig def;
    CHECK(NetShape(def).outputs == 14);
}

TEST_CASE("config validation") {
    NetConfig c;
    c.conv1.kernel_h = 15;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.count_outputs = 2;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("init is deterministic and bounded") {
    const NetConfig c = tiny();
    CHECK(init(c) == init(c));
    NetConfig other = c;
    other.init_seed = 8;
    CHECK_FALSE(init(c).values == init(other).values);
    const auto p = init(c);
    for (const auto& slot : tensor_layout(c)) {
        const double a = slot.cols == 1 ? 1.0 / std::sqrt(double(slot.fan_in)) : std::sqrt(6.0 / double(slot.fan_in));
        for (std::size_t k = 0; k < slot.size(); ++k) CHECK(std::abs(p.values[slot.offset + k]) <= a);
    }
}

TEST_CASE("top_n breaks ties toward the lower index") {
    const std::vector<double> p{0.1, 0.3, 0.3, 0.2, 0.3};
    CHECK(top_n(p, 1) == std::vector<std::size_t>{1});
    CHECK(top_n(p, 2) == std::vector<std::size_t>{1, 2});
    CHECK(top_n(p, 4) == std::vector<std::size_t>{1, 2, 3, 4});
}

TEST_CASE("split softmax outputs are distributions") {
    const auto p = init(tiny());
    const auto preds = predict(p, random_input(5, 3));
    for (const auto& pr : preds) {
        CHECK(std::accumulate(pr.class_probs.begin(), pr.class_probs.end(), 0.0) == Approx(1.0));
        CHECK(std::accumulate(pr.count_probs.begin(), pr.count_probs.end(), 0.0) == Approx(1.0));
        CHECK(pr.top_set.size() == pr.n_hat);
        CHECK(std::is_sorted(pr.top_set.begin(), pr.top_set.end()));
    }
}

TEST_CASE("zero weights give uniform outputs") {
    auto p = init(tiny());
    std::fill(p.values.begin(), p.values.end(), 0.0);
    const auto pr = predict(p, random_input(1, 4)).front();
    for (double v : pr.class_probs) CHECK(v == Approx(1.0 / 11.0));
    for (double v : pr.count_probs) CHECK(v == Approx(1.0 / 3.0));
    CHECK(pr.n_hat == 1);
    CHECK(pr.top_set == std::vector<std::size_t>{0});
}

TEST_CASE("predictions ignore a common shift of the logits") {
    std::vector<double> logits{0.3, -1.0, 2.0, 0.5, 0.1, 0.0, 1.9, -0.2, 0.4, 0.7, 1.1, 0.2, 0.9, -0.5};
    const auto a = predict_from_logits(logits, 11);
    for (std::size_t k = 0; k < 11; ++k) logits[k] += 100.0;
    for (std::size_t k = 11; k < 14; ++k) logits[k] -= 40.0;
    const auto b = predict_from_logits(logits, 11);
    for (std::size_t k = 0; k < 11; ++k) CHECK(a.class_probs[k] == Approx(b.class_probs[k]));
    CHECK(a.top_set == b.top_set);
    CHECK(a.n_hat == b.n_hat);
    CHECK(a.n_hat == 2);
    CHECK(a.top_set == std::vector<std::size_t>{2, 6});
}

TEST_CASE("loss values at known points") {
    const LabelSet single{LoadClass::fan};
    const LabelSet pair{LoadClass::USB, LoadClass::monitor};
    const std::vector<double> zeros(14, 0.0);
    CHECK(loss(zeros, encode_target(single), 11) == Approx(std::log(11.0) + std::log(3.0)));
    // Class mass split evenly over the pair: the class term bottoms out at ln 2.
    std::vector<double> logits(14, -1e3);
    logits[0] = logits[9] = 0.0;
    logits[12] = 50.0;
    CHECK(loss(logits, encode_target(pair), 11) == Approx(std::log(2.0)).margin(1e-12));
    const std::vector<double> short_logits(5, 0.0);
    CHECK_THROWS_AS(loss(short_logits, encode_target(single), 11), ShapeMismatch);
}

TEST_CASE("analytic gradient matches central differences") {
    for (auto n : {Normalization::standardize, Normalization::softmax, Normalization::scaled_softmax, Normalization::none}) {
        const NetConfig c = tiny(n);
        const auto p = init(c);
        const Matrix x = random_input(1, 12);
        const Matrix t = target_of({LoadClass::fan, LoadClass::laptop}, c);
        // Softmax squashes the conv output by ~1/n, so upstream gradients are
        // tiny and a 1e-5 step sits in round-off; 1e-4 is the sweet spot there.
        const bool squashed = n == Normalization::softmax || n == Normalization::scaled_softmax;
        const auto r = grad_check(p, x, t, 250, 99, GradientFault::none, squashed ? 1e-4 : 1e-5);
        INFO("normalization " << kNormalizationNames[static_cast<std::size_t>(n)]);
        CHECK(r.checked == 250);
        CHECK(r.max_relative_error < 1e-4);
    }
}

TEST_CASE("single-label variant gradient") {
    NetConfig c = tiny();
    c.count_outputs = 0;
    const auto p = init(c);
    const auto r = grad_check(p, random_input(1, 5), target_of({LoadClass::monitor}, c), 250, 3);
    CHECK(r.max_relative_error < 1e-4);
    CHECK_THROWS_AS(target_column(LabelSet{LoadClass::USB, LoadClass::fan}, c), InvalidArgument);
}

TEST_CASE("gradient checker catches a sign flip") {
    const NetConfig c = tiny();
    const auto p = init(c);
    const Matrix x = random_input(1, 12);
    const Matrix t = target_of({LoadClass::hairdryer}, c);
    // Check every parameter so the flipped tensor is certainly sampled.
    const auto r = grad_check(p, x, t, parameter_count(c), 1, GradientFault::flip_fc2);
    CHECK(r.max_relative_error > 0.1);
}

TEST_CASE("forward rejects wrong input size") {
    const auto p = init(tiny());
    Workspace ws;
    CHECK_THROWS_AS(forward_batch(p, Matrix::Zero(10, 1), ws), ShapeMismatch);
}

TEST_CASE("training fits a separable toy problem") {
    NetConfig c = tiny();
    c.epochs = 60;
    c.batch_size = 8;
    c.learning_rate = 3e-3;
    const std::vector<LabelSet> labels{{LoadClass::USB}, {LoadClass::fan}, {LoadClass::fan, LoadClass::laptop}};
    ExampleSet ex;
    ex.inputs = random_input(30, 21) * 0.05;
    ex.targets.resize(14, 30);
    for (Eigen::Index j = 0; j < 30; ++j) {
        const auto k = static_cast<std::size_t>(j % 3);
        // Distinct row bands per label.
        ex.inputs.block(static_cast<Eigen::Index>(k * 80), j, 80, 1).array() += 1.0;
        ex.targets.col(j) = target_column(labels[k], c);
        ex.labels.push_back(labels[k]);
    }
    const auto r = train(init(c), ex, c);
    CHECK(r.epoch_loss.back() < r.epoch_loss.front());
    const auto preds = predict(r.params, ex.inputs);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        ok += preds[i].top_set == ex.labels[i].indices() && preds[i].n_hat == ex.labels[i].size();
    CHECK(ok == preds.size());
}

TEST_CASE("zero epochs leave parameters unchanged") {
    NetConfig c = tiny();
    c.epochs = 0;
    ExampleSet ex;
    ex.inputs = random_input(4, 1);
    ex.targets = Matrix::Zero(14, 4);
    ex.targets.row(0).setConstant(1.0);
    ex.targets.row(11).setConstant(1.0);
    ex.labels.assign(4, LabelSet{LoadClass::USB});
    const auto p = init(c);
    const auto r = train(p, ex, c);
    CHECK(r.params.values == p.values);
    CHECK(r.steps == 0);
    CHECK(r.epoch_loss.empty());
}

TEST_CASE("step count is epochs times batches") {
    NetConfig c = tiny();
    c.epochs = 3;
    c.batch_size = 4;
    ExampleSet ex;
    ex.inputs = random_input(10, 1);
    ex.targets = Matrix::Zero(14, 10);
    ex.targets.row(0).setConstant(1.0);
    ex.targets.row(11).setConstant(1.0);
    ex.labels.assign(10, LabelSet{LoadClass::USB});
    for (auto opt : {Optimizer::sgd, Optimizer::adam}) {
        c.optimizer = opt;
        const auto r = train(init(c), ex, c);
        CHECK(r.steps == 9);
        CHECK(r.epoch_loss.size() == 3);
        // Same seed, same result.
        CHECK(train(init(c), ex, c).params == r.params);
    }
}

TEST_CASE("training divergence is reported") {
    NetConfig c = tiny(Normalization::none);
    c.optimizer = Optimizer::sgd;
    c.learning_rate = 1e12;
    c.epochs = 5;
    ExampleSet ex;
    ex.inputs = random_input(4, 1) * 1e3;
    ex.targets = Matrix::Zero(14, 4);
    ex.targets.row(2).setConstant(1.0);
    ex.targets.row(11).setConstant(1.0);
    ex.labels.assign(4, LabelSet{LoadClass::batterycharger800mA});
    CHECK_THROWS_AS(train(init(c), ex, c), DivergedToNaN);
}

TEST_CASE("checkpoint round trip") {
    const NetConfig c = tiny();
    const auto p = init(c);
    const auto path = std::filesystem::temp_directory_path() / "plugsense_test_net.json";
    save_checkpoint(p, path);
    const auto back = load_checkpoint(path, c);
    CHECK(back.values == p.values);
    NetConfig wider = c;
    wider.fc1_width = 13;
    CHECK_THROWS_AS(load_checkpoint(path, wider), ShapeMismatch);
    CHECK_THROWS_AS(load_checkpoint(path.string() + ".missing", c), IoError);
}
