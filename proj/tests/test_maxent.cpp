#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <random>

#include "sfc/maxent.hpp"

using namespace sfc;

namespace {

SparseVector sv(std::initializer_list<std::pair<int, int>> entries) {
    SparseVector v;
    v.entries = entries;
    return v;
}

struct RandomProblem {
    std::vector<SparseVector> docs;
    std::vector<int> labels;
    int k, v;
};

RandomProblem random_problem(std::mt19937& rng, int k, int v, int n) {
    RandomProblem p{{}, {}, k, v};
    for (int d = 0; d < n; ++d) {
        SparseVector doc;
        for (int t = 0; t < v; ++t)
            if (bounded_uint(rng, 2)) doc.entries.emplace_back(t, 1 + bounded_uint(rng, 3));
        p.docs.push_back(doc);
        p.labels.push_back(d < k ? d : static_cast<int>(bounded_uint(rng, static_cast<uint32_t>(k))));
    }
    return p;
}

}  // namespace

TEST_CASE("zero weights give the uniform distribution") {
    MaxentModel model;
    model.num_classes = 3;
    model.num_features = 4;
    model.weights.assign(12, 0.0);
    auto probs = maxent_prob(model, sv({{0, 2}, {3, 1}}));
    for (double p : probs) CHECK_THAT(p, Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-15));
    CHECK(predict_maxent(model, sv({{1, 1}})) == 0);  // tie goes to the lowest id
}

TEST_CASE("probabilities are shift-invariant in the weights") {
    std::mt19937 rng(5);
    MaxentModel model;
    model.num_classes = 3;
    model.num_features = 5;
    model.weights.resize(15);
    for (double& w : model.weights) w = uniform_real(rng, -2.0, 2.0);
    auto shifted = model;
    for (double& w : shifted.weights) w += 0.731;

    auto doc = sv({{0, 1}, {2, 3}, {4, 2}});
    auto a = maxent_prob(model, doc);
    auto b = maxent_prob(shifted, doc);
    for (int c = 0; c < 3; ++c) CHECK_THAT(a[c], Catch::Matchers::WithinAbs(b[c], 1e-12));
}

TEST_CASE("two-class single-feature probability matches the closed form") {
    MaxentModel model;
    model.num_classes = 2;
    model.num_features = 1;
    model.weights = {1.0, 0.0};
    auto probs = maxent_prob(model, sv({{0, 1}}));
    const double expect = std::exp(1.0) / (std::exp(1.0) + 1.0);
    CHECK_THAT(probs[0], Catch::Matchers::WithinAbs(expect, 1e-12));
    CHECK_THAT(probs[0], Catch::Matchers::WithinAbs(0.7310585786300049, 1e-12));
    CHECK(predict_maxent(model, sv({{0, 1}})) == 0);
}

TEST_CASE("probabilities form a valid distribution for random weights") {
    std::mt19937 rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        MaxentModel model;
        model.num_classes = 2 + static_cast<int>(bounded_uint(rng, 3));
        model.num_features = 1 + static_cast<int>(bounded_uint(rng, 5));
        model.weights.resize(static_cast<std::size_t>(model.num_classes) *
                             static_cast<std::size_t>(model.num_features));
        for (double& w : model.weights) w = uniform_real(rng, -30.0, 30.0);
        SparseVector doc;
        for (int t = 0; t < model.num_features; ++t)
            if (bounded_uint(rng, 2)) doc.entries.emplace_back(t, 1 + bounded_uint(rng, 4));
        auto probs = maxent_prob(model, doc);
        double sum = 0.0;
        for (double p : probs) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("gradient at zero weights shows the half-count pattern") {
    // balanced two-class data, one private feature per class, counts 2
    std::vector<SparseVector> docs = {sv({{0, 2}}), sv({{1, 2}})};
    std::vector<int> labels = {0, 1};
    MaxentModel model;
    model.num_classes = 2;
    model.num_features = 2;
    model.sigma2 = 1e12;  // penalty negligible
    model.weights.assign(4, 0.0);
    auto obj = objective_and_gradient(model, docs, labels);
    CHECK_THAT(obj.gradient[0], Catch::Matchers::WithinAbs(+1.0, 1e-12));  // (1-0.5)*2
    CHECK_THAT(obj.gradient[1], Catch::Matchers::WithinAbs(-1.0, 1e-12));
    CHECK_THAT(obj.gradient[2], Catch::Matchers::WithinAbs(-1.0, 1e-12));
    CHECK_THAT(obj.gradient[3], Catch::Matchers::WithinAbs(+1.0, 1e-12));
    CHECK_THAT(obj.value, Catch::Matchers::WithinAbs(2.0 * std::log(0.5), 1e-12));
}

TEST_CASE("analytic gradient matches central finite differences") {
    std::mt19937 rng(31);
    auto p = random_problem(rng, 3, 5, 8);
    MaxentModel model;
    model.num_classes = p.k;
    model.num_features = p.v;
    model.sigma2 = 10.0;
    model.weights.resize(15);
    for (double& w : model.weights) w = uniform_real(rng, -1.0, 1.0);

    auto obj = objective_and_gradient(model, p.docs, p.labels);
    const double h = 1e-5;
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
        auto plus = model;
        auto minus = model;
        plus.weights[i] += h;
        minus.weights[i] -= h;
        const double fd = (objective_and_gradient(plus, p.docs, p.labels).value -
                           objective_and_gradient(minus, p.docs, p.labels).value) /
                          (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(obj.gradient[i]), 1e-8});
        CHECK(std::abs(fd - obj.gradient[i]) / denom < 1e-4);
    }
}

TEST_CASE("training separates a linearly separable toy set") {
    std::vector<SparseVector> docs = {sv({{0, 1}}), sv({{0, 2}}), sv({{1, 1}}), sv({{1, 3}})};
    std::vector<int> labels = {0, 0, 1, 1};
    MaxentTrainConfig config;
    config.epochs = 300;
    auto model = train_maxent(docs, labels, 2, 2, config);
    for (std::size_t d = 0; d < docs.size(); ++d)
        CHECK(predict_maxent(model, docs[d]) == labels[d]);
}

TEST_CASE("gradient norm is small at the penalised optimum") {
    std::vector<SparseVector> docs = {sv({{0, 1}}), sv({{1, 1}})};
    std::vector<int> labels = {0, 1};
    MaxentTrainConfig config;
    config.sigma2 = 10.0;
    config.epochs = 20000;
    config.tolerance = 1e-14;
    auto model = train_maxent(docs, labels, 2, 2, config);
    auto obj = objective_and_gradient(model, docs, labels);
    double norm = 0.0;
    for (double g : obj.gradient) norm += g * g;
    CHECK(std::sqrt(norm) < 1e-3);
}

TEST_CASE("a tiny sigma^2 shrinks weights toward zero") {
    std::vector<SparseVector> docs = {sv({{0, 1}}), sv({{1, 1}})};
    std::vector<int> labels = {0, 1};
    MaxentTrainConfig config;
    config.sigma2 = 1e-6;
    config.epochs = 2000;
    auto model = train_maxent(docs, labels, 2, 2, config);
    for (double w : model.weights) CHECK(std::abs(w) < 1e-3);
    auto probs = maxent_prob(model, docs[0]);
    CHECK_THAT(probs[0], Catch::Matchers::WithinAbs(0.5, 1e-3));
}

TEST_CASE("training is bit-deterministic") {
    std::mt19937 rng(37);
    auto p = random_problem(rng, 3, 6, 10);
    MaxentTrainConfig config;
    config.epochs = 50;
    auto a = train_maxent(p.docs, p.labels, p.k, p.v, config);
    auto b = train_maxent(p.docs, p.labels, p.k, p.v, config);
    REQUIRE(a.weights.size() == b.weights.size());
    CHECK(std::memcmp(a.weights.data(), b.weights.data(),
                      a.weights.size() * sizeof(double)) == 0);
}

TEST_CASE("different step sizes converge to the same objective") {
    std::mt19937 rng(41);
    auto p = random_problem(rng, 3, 4, 12);
    MaxentTrainConfig slow, fast;
    slow.learning_rate = 0.05;
    fast.learning_rate = 0.5;
    slow.epochs = fast.epochs = 50000;
    slow.tolerance = fast.tolerance = 1e-13;
    auto a = train_maxent(p.docs, p.labels, p.k, p.v, slow);
    auto b = train_maxent(p.docs, p.labels, p.k, p.v, fast);
    const double la = objective_and_gradient(a, p.docs, p.labels).value;
    const double lb = objective_and_gradient(b, p.docs, p.labels).value;
    CHECK_THAT(la, Catch::Matchers::WithinAbs(lb, 1e-6));
}

TEST_CASE("train_maxent validates input") {
    std::vector<SparseVector> docs = {sv({{0, 1}})};
    CHECK_THROWS_AS(train_maxent(docs, {0}, 2, 1, {}), DataError);  // class 1 missing
    MaxentTrainConfig bad;
    bad.learning_rate = -1.0;
    CHECK_THROWS_AS(train_maxent(docs, {0}, 1, 1, bad), UsageError);
}

TEST_CASE("out-of-range feature ids are rejected") {
    MaxentModel model;
    model.num_classes = 2;
    model.num_features = 2;
    model.weights.assign(4, 0.0);
    CHECK_THROWS_AS(maxent_prob(model, sv({{7, 1}})), DataError);
}

TEST_CASE("maxent model serialisation round-trips") {
    MaxentModel model;
    model.num_classes = 2;
    model.num_features = 3;
    model.sigma2 = 4.0;
    model.weights = {0.5, -1.0, 0.0, 2.0, 0.25, -0.125};
    auto restored = MaxentModel::from_json(model.to_json());
    CHECK(restored.weights == model.weights);
    CHECK(restored.sigma2 == model.sigma2);
}
