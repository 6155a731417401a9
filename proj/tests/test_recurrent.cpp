#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "sfc/recurrent.hpp"

using namespace sfc;

namespace {

std::vector<Eigen::VectorXd> random_sequence(std::mt19937& rng, int steps, int dim) {
    std::vector<Eigen::VectorXd> seq;
    for (int t = 0; t < steps; ++t) {
        Eigen::VectorXd x(dim);
        for (int d = 0; d < dim; ++d) x(d) = uniform_real(rng, -1.0, 1.0);
        seq.push_back(x);
    }
    return seq;
}

template <typename Fn>
void for_each_param_tensor(SequenceClassifier& net, NetworkGradients& grads, Fn&& fn) {
    for (std::size_t l = 0; l < net.forward_layers.size(); ++l) {
        auto collect = [](LstmParams& p) {
            std::vector<Eigen::Map<Eigen::VectorXd>> flat;
            p.for_each_tensor([&](auto& tensor) {
                flat.emplace_back(tensor.data(), tensor.size());
            });
            return flat;
        };
        auto params = collect(net.forward_layers[l]);
        auto grad = collect(grads.forward_layers[l]);
        for (std::size_t i = 0; i < params.size(); ++i) fn(params[i], grad[i]);
    }
    for (std::size_t l = 0; l < net.backward_layers.size(); ++l) {
        auto collect = [](LstmParams& p) {
            std::vector<Eigen::Map<Eigen::VectorXd>> flat;
            p.for_each_tensor([&](auto& tensor) {
                flat.emplace_back(tensor.data(), tensor.size());
            });
            return flat;
        };
        auto params = collect(net.backward_layers[l]);
        auto grad = collect(grads.backward_layers[l]);
        for (std::size_t i = 0; i < params.size(); ++i) fn(params[i], grad[i]);
    }
    Eigen::Map<Eigen::VectorXd> hw(net.head_w.data(), net.head_w.size());
    Eigen::Map<Eigen::VectorXd> ghw(grads.head_w.data(), grads.head_w.size());
    fn(hw, ghw);
    Eigen::Map<Eigen::VectorXd> hb(net.head_b.data(), net.head_b.size());
    Eigen::Map<Eigen::VectorXd> ghb(grads.head_b.data(), grads.head_b.size());
    fn(hb, ghb);
}

// Central-difference comparison of every parameter against the analytic BPTT
// gradient on one example.
void check_gradients(SequenceClassifier net, const std::vector<Eigen::VectorXd>& seq, int gold,
                     double step, double tol) {
    auto fwd = forward_sequence(net, seq);
    auto grads = backward_sequence(net, fwd.cache, gold);
    const auto loss_at = [&]() {
        return -std::log(forward_sequence(net, seq).probs(gold));
    };
    for_each_param_tensor(net, grads, [&](auto param, auto grad) {
        for (Eigen::Index i = 0; i < param.size(); ++i) {
            const double saved = param(i);
            param(i) = saved + step;
            const double up = loss_at();
            param(i) = saved - step;
            const double down = loss_at();
            param(i) = saved;
            const double fd = (up - down) / (2.0 * step);
            const double denom = std::max({std::abs(fd), std::abs(grad(i)), 1e-7});
            REQUIRE(std::abs(fd - grad(i)) / denom < tol);
        }
    });
}

}  // namespace

TEST_CASE("lstm_step with all-zero parameters") {
    auto params = LstmParams::zeros(3, 2);
    auto prev = LstmState::zeros(3);
    Eigen::VectorXd x(2);
    x << 0.7, -1.3;
    auto next = lstm_step(params, x, prev);
    CHECK(next.c.norm() == 0.0);
    CHECK(next.h.norm() == 0.0);
}

TEST_CASE("saturated gates copy the cell state") {
    auto params = LstmParams::zeros(2, 2);
    params.b_f().setConstant(40.0);   // forget gate ~ 1
    params.b_i().setConstant(-40.0);  // input gate ~ 0
    LstmState prev;
    prev.h = Eigen::VectorXd::Zero(2);
    prev.c.resize(2);
    prev.c << 0.37, -0.81;
    Eigen::VectorXd x(2);
    x << 1.0, 2.0;
    auto next = lstm_step(params, x, prev);
    CHECK_THAT(next.c(0), Catch::Matchers::WithinAbs(0.37, 1e-12));
    CHECK_THAT(next.c(1), Catch::Matchers::WithinAbs(-0.81, 1e-12));
}

TEST_CASE("lstm_step matches a scalar hand trace") {
    LstmParams p = LstmParams::zeros(1, 1);
    p.w_f()(0, 0) = 0.5;
    p.u_f()(0, 0) = -0.3;
    p.b_f()(0) = 0.1;
    p.w_i()(0, 0) = -0.2;
    p.u_i()(0, 0) = 0.4;
    p.w_c()(0, 0) = 0.7;
    p.u_c()(0, 0) = 0.2;
    p.b_c()(0) = -0.1;
    p.w_o()(0, 0) = 0.3;
    p.u_o()(0, 0) = -0.5;
    p.b_o()(0) = 0.2;
    p.v_o(0, 0) = 0.6;
    LstmState prev;
    prev.h = Eigen::VectorXd::Constant(1, 0.2);
    prev.c = Eigen::VectorXd::Constant(1, -0.4);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.5);

    // scalar evaluation of the same equations
    const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    const double f = sig(0.5 * 1.5 + -0.3 * 0.2 + 0.1);
    const double i = sig(-0.2 * 1.5 + 0.4 * 0.2 + 0.0);
    const double g = std::tanh(0.7 * 1.5 + 0.2 * 0.2 + -0.1);
    const double c = i * g + f * -0.4;
    const double o = sig(0.3 * 1.5 + -0.5 * 0.2 + 0.6 * c + 0.2);
    const double h = o * std::tanh(c);

    auto next = lstm_step(p, x, prev);
    CHECK_THAT(next.c(0), Catch::Matchers::WithinAbs(c, 1e-12));
    CHECK_THAT(next.h(0), Catch::Matchers::WithinAbs(h, 1e-12));

    // the peephole term must actually matter here
    auto no_peep = lstm_step(p, x, prev, /*use_peephole=*/false);
    CHECK(std::abs(no_peep.h(0) - h) > 1e-6);
}

TEST_CASE("lstm_step rejects dimension mismatches") {
    auto params = LstmParams::zeros(2, 3);
    CHECK_THROWS_AS(lstm_step(params, Eigen::VectorXd::Zero(2), LstmState::zeros(2)), DataError);
    CHECK_THROWS_AS(lstm_step(params, Eigen::VectorXd::Zero(3), LstmState::zeros(1)), DataError);
}

TEST_CASE("zero-weight network yields uniform probabilities") {
    NetworkConfig config;
    config.layers = 2;
    config.hidden = 4;
    config.input_dim = 3;
    config.num_classes = 3;
    config.init_range = 0.0;
    std::mt19937 rng(1);
    auto net = init_network(config, Direction::bidirectional, rng);
    std::mt19937 rng2(2);
    auto probs = forward_sequence(net, random_sequence(rng2, 5, 3)).probs;
    for (int c = 0; c < 3; ++c)
        CHECK_THAT(probs(c), Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-15));
}

TEST_CASE("probabilities sum to one for random weights") {
    std::mt19937 rng(3);
    NetworkConfig config;
    config.layers = 2;
    config.hidden = 5;
    config.input_dim = 4;
    config.num_classes = 4;
    config.init_range = 0.5;
    auto net = init_network(config, Direction::bidirectional, rng);
    for (int trial = 0; trial < 20; ++trial) {
        auto probs =
            forward_sequence(net, random_sequence(rng, 1 + trial % 6, 4)).probs;
        CHECK_THAT(probs.sum(), Catch::Matchers::WithinAbs(1.0, 1e-12));
        CHECK(probs.minCoeff() >= 0.0);
    }
}

TEST_CASE("gate activations and hidden states stay inside their ranges") {
    std::mt19937 rng(5);
    NetworkConfig config;
    config.layers = 2;
    config.hidden = 6;
    config.input_dim = 3;
    config.num_classes = 2;
    config.init_range = 2.0;  // deliberately large
    auto net = init_network(config, Direction::forward_only, rng);
    auto fwd = forward_sequence(net, random_sequence(rng, 7, 3));
    for (const auto& layer : fwd.cache.fwd) {
        for (const auto* gate : {&layer.f, &layer.i, &layer.o}) {
            CHECK(gate->minCoeff() > 0.0);
            CHECK(gate->maxCoeff() < 1.0);
        }
        CHECK(layer.h.minCoeff() > -1.0);
        CHECK(layer.h.maxCoeff() < 1.0);
    }
}

TEST_CASE("palindromic input with tied directions gives equal document halves") {
    std::mt19937 rng(7);
    NetworkConfig config;
    config.layers = 2;
    config.hidden = 4;
    config.input_dim = 3;
    config.num_classes = 2;
    auto net = init_network(config, Direction::bidirectional, rng);
    net.backward_layers = net.forward_layers;  // tie the directions

    Eigen::VectorXd a(3), b(3);
    a << 0.3, -0.7, 0.2;
    b << -0.1, 0.5, 0.9;
    std::vector<Eigen::VectorXd> palindrome = {a, b, a};
    auto fwd = forward_sequence(net, palindrome);
    const int h = config.hidden;
    CHECK((fwd.cache.doc.head(h) - fwd.cache.doc.tail(h)).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("a zeroed backward half reproduces the forward-only network") {
    std::mt19937 rng(11);
    NetworkConfig config;
    config.layers = 2;
    config.hidden = 4;
    config.input_dim = 3;
    config.num_classes = 3;
    auto fwd_net = init_network(config, Direction::forward_only, rng);

    SequenceClassifier bi;
    bi.direction = Direction::bidirectional;
    bi.config = config;
    bi.forward_layers = fwd_net.forward_layers;
    for (int l = 0; l < config.layers; ++l)
        bi.backward_layers.push_back(
            LstmParams::zeros(config.hidden, l == 0 ? config.input_dim : config.hidden));
    bi.head_w = Eigen::MatrixXd::Zero(config.num_classes, 2 * config.hidden);
    bi.head_w.leftCols(config.hidden) = fwd_net.head_w;
    bi.head_b = fwd_net.head_b;

    std::mt19937 rng2(13);
    for (int trial = 0; trial < 10; ++trial) {
        auto seq = random_sequence(rng2, 1 + trial % 5, 3);
        auto pf = forward_sequence(fwd_net, seq).probs;
        auto pb = forward_sequence(bi, seq).probs;
        CHECK((pf - pb).lpNorm<Eigen::Infinity>() < 1e-15);
    }
}

TEST_CASE("reversing input and swapping directions leaves probabilities unchanged") {
    std::mt19937 rng(17);
    NetworkConfig config;
    config.layers = 2;
    config.hidden = 4;
    config.input_dim = 3;
    config.num_classes = 3;
    auto net = init_network(config, Direction::bidirectional, rng);

    SequenceClassifier swapped = net;
    std::swap(swapped.forward_layers, swapped.backward_layers);
    swapped.head_w.leftCols(config.hidden) = net.head_w.rightCols(config.hidden);
    swapped.head_w.rightCols(config.hidden) = net.head_w.leftCols(config.hidden);

    for (int trial = 0; trial < 10; ++trial) {
        auto seq = random_sequence(rng, 1 + trial % 6, 3);
        std::vector<Eigen::VectorXd> reversed(seq.rbegin(), seq.rend());
        auto p1 = forward_sequence(net, seq).probs;
        auto p2 = forward_sequence(swapped, reversed).probs;
        CHECK((p1 - p2).lpNorm<Eigen::Infinity>() < 1e-12);
    }
}

TEST_CASE("analytic BPTT gradients match finite differences") {
    std::mt19937 rng(19);
    NetworkConfig config;
    config.layers = 2;
    config.hidden = 3;
    config.input_dim = 2;
    config.num_classes = 3;
    config.init_range = 0.4;
    config.clip_norm = 1e9;  // effectively off for the check
    auto seq = random_sequence(rng, 4, 2);

    SECTION("forward-only with peephole") {
        auto net = init_network(config, Direction::forward_only, rng);
        check_gradients(net, seq, 1, 1e-4, 1e-3);
    }
    SECTION("forward-only without peephole") {
        config.use_peephole = false;
        auto net = init_network(config, Direction::forward_only, rng);
        check_gradients(net, seq, 2, 1e-4, 1e-3);
    }
    SECTION("bidirectional with peephole") {
        auto net = init_network(config, Direction::bidirectional, rng);
        check_gradients(net, seq, 0, 1e-4, 1e-3);
    }
    SECTION("single timestep") {
        auto net = init_network(config, Direction::bidirectional, rng);
        check_gradients(net, {seq[0]}, 1, 1e-4, 1e-3);
    }
}

TEST_CASE("gradient is near zero when the prediction is already one-hot") {
    std::mt19937 rng(23);
    NetworkConfig config;
    config.layers = 1;
    config.hidden = 3;
    config.input_dim = 2;
    config.num_classes = 2;
    auto net = init_network(config, Direction::forward_only, rng);
    net.head_b(0) = 60.0;  // saturate the softmax on class 0
    net.head_b(1) = -60.0;
    auto seq = random_sequence(rng, 3, 2);
    auto fwd = forward_sequence(net, seq);
    REQUIRE(fwd.probs(0) > 1.0 - 1e-12);
    auto grads = backward_sequence(net, fwd.cache, 0);
    CHECK(std::sqrt(grads.squared_norm()) < 1e-9);
}

TEST_CASE("gradient clipping caps the global norm") {
    std::mt19937 rng(29);
    NetworkConfig config;
    config.layers = 2;
    config.hidden = 4;
    config.input_dim = 3;
    config.num_classes = 3;
    config.init_range = 1.5;
    config.clip_norm = 0.05;  // low enough that clipping must engage
    auto net = init_network(config, Direction::bidirectional, rng);
    auto seq = random_sequence(rng, 6, 3);
    auto fwd = forward_sequence(net, seq);
    auto grads = backward_sequence(net, fwd.cache, 2);
    CHECK(std::sqrt(grads.squared_norm()) <= config.clip_norm + 1e-12);
}

namespace {

// tiny separable dataset: each class draws its own basis vector, with a
// shared distractor token appearing everywhere
std::vector<EmbeddedExample> toy_training_set(int per_class, std::mt19937& rng) {
    std::vector<EmbeddedExample> data;
    const int dim = 4;
    for (int c = 0; c < 3; ++c)
        for (int k = 0; k < per_class; ++k) {
            std::vector<Eigen::VectorXd> seq;
            const int len = 2 + static_cast<int>(bounded_uint(rng, 4));
            for (int t = 0; t < len; ++t) {
                Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
                if (bounded_uint(rng, 4) == 0)
                    x(3) = 1.0;  // distractor
                else
                    x(c) = 1.0;
                seq.push_back(x);
            }
            data.emplace_back(std::move(seq), c);
        }
    return data;
}

}  // namespace

TEST_CASE("training overfits a separable toy set") {
    std::mt19937 rng(31);
    auto data = toy_training_set(7, rng);  // 21 examples
    NetworkConfig config;
    config.layers = 2;
    config.hidden = 8;
    config.input_dim = 4;
    config.num_classes = 3;
    config.epochs = 200;
    config.learning_rate = 0.1;
    config.init_range = 0.5;  // break the softmax plateau from the start
    config.dropout = 0.0;
    config.seed = 7;

    for (auto direction : {Direction::forward_only, Direction::bidirectional}) {
        auto result = train_network(data, config, direction);
        int correct = 0;
        for (const auto& [seq, gold] : data)
            correct += predict_sequence(result.model, seq).label == gold;
        CHECK(correct == static_cast<int>(data.size()));

        // mean loss decreases over the first epochs
        for (int e = 0; e + 1 < 5; ++e) CHECK(result.epoch_loss[e + 1] <= result.epoch_loss[e] + 1e-9);
    }
}

TEST_CASE("network training is deterministic under a fixed seed") {
    std::mt19937 rng(37);
    auto data = toy_training_set(3, rng);
    NetworkConfig config;
    config.layers = 2;
    config.hidden = 5;
    config.input_dim = 4;
    config.num_classes = 3;
    config.epochs = 4;
    config.learning_rate = 0.05;
    config.dropout = 0.4;
    config.seed = 11;
    auto a = train_network(data, config, Direction::bidirectional);
    auto b = train_network(data, config, Direction::bidirectional);
    REQUIRE(a.epoch_loss.size() == b.epoch_loss.size());
    for (std::size_t e = 0; e < a.epoch_loss.size(); ++e)
        CHECK(a.epoch_loss[e] == b.epoch_loss[e]);
    CHECK(a.model.head_w == b.model.head_w);
}

TEST_CASE("prediction ignores dropout and flags empty input") {
    std::mt19937 rng(41);
    NetworkConfig config;
    config.layers = 1;
    config.hidden = 3;
    config.input_dim = 2;
    config.num_classes = 3;
    config.init_range = 0.0;  // zero weights: tie -> class 0
    auto net = init_network(config, Direction::forward_only, rng);

    auto pred = predict_sequence(net, random_sequence(rng, 4, 2));
    CHECK(pred.label == 0);
    CHECK_FALSE(pred.fallback);

    auto fallback = predict_sequence(net, {});
    CHECK(fallback.label == 0);
    CHECK(fallback.fallback);

    CHECK_THROWS_AS(forward_sequence(net, {}), DataError);
}

TEST_CASE("exploding training reports a numerical failure") {
    std::mt19937 rng(47);
    auto data = toy_training_set(3, rng);
    NetworkConfig config;
    config.layers = 1;
    config.hidden = 6;
    config.input_dim = 4;
    config.num_classes = 3;
    config.epochs = 300;
    config.learning_rate = 5e4;  // drives the head into softmax underflow
    config.clip_norm = 0.0;      // clipping off
    config.init_range = 0.5;
    config.dropout = 0.0;
    CHECK_THROWS_AS(train_network(data, config, Direction::forward_only), NumericError);
}

TEST_CASE("network serialisation round-trips") {
    std::mt19937 rng(43);
    NetworkConfig config;
    config.layers = 2;
    config.hidden = 3;
    config.input_dim = 2;
    config.num_classes = 3;
    auto net = init_network(config, Direction::bidirectional, rng);
    auto restored = SequenceClassifier::from_json(net.to_json());
    CHECK(restored.head_w == net.head_w);
    CHECK(restored.head_b == net.head_b);
    REQUIRE(restored.forward_layers.size() == net.forward_layers.size());
    CHECK(restored.forward_layers[0].w == net.forward_layers[0].w);
    CHECK(restored.backward_layers[1].v_o == net.backward_layers[1].v_o);

    auto seq = random_sequence(rng, 3, 2);
    CHECK((forward_sequence(net, seq).probs - forward_sequence(restored, seq).probs).norm() ==
          0.0);
}
