#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "sfc/common.hpp"

namespace sfc {

// Gate parameters for one cell layer, stored with the four gate blocks
// stacked (rows f, i, c, o) so a step costs one matrix-vector product per
// operand instead of four. The output gate additionally reads the freshly
// updated cell state through the peephole matrix v_o; the other gates have
// no peephole, and a config switch turns the term off.
struct LstmParams {
    Eigen::MatrixXd w;    // 4H x D input weights, gate-major
    Eigen::MatrixXd u;    // 4H x H recurrent weights
    Eigen::MatrixXd v_o;  // H x H peephole on the output gate
    Eigen::VectorXd b;    // 4H biases

    int hidden() const { return static_cast<int>(w.rows()) / 4; }
    int input() const { return static_cast<int>(w.cols()); }

    // per-gate views (f, i, c, o)
    auto w_f() { return w.middleRows(0 * hidden(), hidden()); }
    auto w_i() { return w.middleRows(1 * hidden(), hidden()); }
    auto w_c() { return w.middleRows(2 * hidden(), hidden()); }
    auto w_o() { return w.middleRows(3 * hidden(), hidden()); }
    auto u_f() { return u.middleRows(0 * hidden(), hidden()); }
    auto u_i() { return u.middleRows(1 * hidden(), hidden()); }
    auto u_c() { return u.middleRows(2 * hidden(), hidden()); }
    auto u_o() { return u.middleRows(3 * hidden(), hidden()); }
    auto b_f() { return b.segment(0 * hidden(), hidden()); }
    auto b_i() { return b.segment(1 * hidden(), hidden()); }
    auto b_c() { return b.segment(2 * hidden(), hidden()); }
    auto b_o() { return b.segment(3 * hidden(), hidden()); }
    auto w_f() const { return w.middleRows(0 * hidden(), hidden()); }
    auto w_i() const { return w.middleRows(1 * hidden(), hidden()); }
    auto w_c() const { return w.middleRows(2 * hidden(), hidden()); }
    auto w_o() const { return w.middleRows(3 * hidden(), hidden()); }
    auto u_f() const { return u.middleRows(0 * hidden(), hidden()); }
    auto u_i() const { return u.middleRows(1 * hidden(), hidden()); }
    auto u_c() const { return u.middleRows(2 * hidden(), hidden()); }
    auto u_o() const { return u.middleRows(3 * hidden(), hidden()); }
    auto b_f() const { return b.segment(0 * hidden(), hidden()); }
    auto b_i() const { return b.segment(1 * hidden(), hidden()); }
    auto b_c() const { return b.segment(2 * hidden(), hidden()); }
    auto b_o() const { return b.segment(3 * hidden(), hidden()); }

    static LstmParams zeros(int hidden, int input) {
        LstmParams p;
        p.w.setZero(4 * hidden, input);
        p.u.setZero(4 * hidden, hidden);
        p.v_o.setZero(hidden, hidden);
        p.b.setZero(4 * hidden);
        return p;
    }

    template <typename Fn>
    void for_each_tensor(Fn&& fn) {
        fn(w);
        fn(u);
        fn(v_o);
        fn(b);
    }
};

struct LstmState {
    Eigen::VectorXd h;
    Eigen::VectorXd c;

    static LstmState zeros(int hidden) {
        return {Eigen::VectorXd::Zero(hidden), Eigen::VectorXd::Zero(hidden)};
    }
};

inline Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
    return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

// One cell update:
//   f = sig(w_f x + u_f h + b_f)        i = sig(w_i x + u_i h + b_i)
//   g = tanh(w_c x + u_c h + b_c)       c' = i*g + f*c
//   o = sig(w_o x + u_o h + v_o c' + b_o)
//   h' = o * tanh(c')
inline LstmState lstm_step(const LstmParams& params, const Eigen::VectorXd& x,
                           const LstmState& prev, bool use_peephole = true) {
    const int hidden = params.hidden();
    if (x.size() != params.input() || prev.h.size() != hidden || prev.c.size() != hidden)
        throw DataError("lstm_step dimension mismatch");
    Eigen::VectorXd z = params.w * x + params.u * prev.h + params.b;
    const Eigen::VectorXd f = sigmoid(z.segment(0 * hidden, hidden));
    const Eigen::VectorXd i = sigmoid(z.segment(1 * hidden, hidden));
    const Eigen::VectorXd g = z.segment(2 * hidden, hidden).array().tanh();
    LstmState next;
    next.c = i.cwiseProduct(g) + f.cwiseProduct(prev.c);
    Eigen::VectorXd zo = z.segment(3 * hidden, hidden);
    if (use_peephole) zo.noalias() += params.v_o * next.c;
    next.h = sigmoid(zo).cwiseProduct(next.c.array().tanh().matrix());
    return next;
}

struct NetworkConfig {
    int layers = 2;
    int hidden = 128;
    int input_dim = 300;
    int num_classes = 3;
    int epochs = 10;
    double learning_rate = 0.02;
    double dropout = 0.4;  // drop probability on each layer's output
    double clip_norm = 5.0;
    double init_range = 0.08;
    bool use_peephole = true;
    unsigned seed = 42;

    nlohmann::json to_json() const {
        return {{"layers", layers},       {"hidden", hidden},
                {"input_dim", input_dim}, {"num_classes", num_classes},
                {"epochs", epochs},       {"learning_rate", learning_rate},
                {"dropout", dropout},     {"clip_norm", clip_norm},
                {"init_range", init_range}, {"use_peephole", use_peephole},
                {"seed", seed}};
    }

    static NetworkConfig from_json(const nlohmann::json& j) {
        NetworkConfig c;
        c.layers = j.at("layers").get<int>();
        c.hidden = j.at("hidden").get<int>();
        c.input_dim = j.at("input_dim").get<int>();
        c.num_classes = j.at("num_classes").get<int>();
        c.epochs = j.at("epochs").get<int>();
        c.learning_rate = j.at("learning_rate").get<double>();
        c.dropout = j.at("dropout").get<double>();
        c.clip_norm = j.at("clip_norm").get<double>();
        c.init_range = j.at("init_range").get<double>();
        c.use_peephole = j.at("use_peephole").get<bool>();
        c.seed = j.at("seed").get<unsigned>();
        return c;
    }
};

enum class Direction { forward_only, bidirectional };

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty()) return {};
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return m;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    const auto data = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(data.data(),
                                             static_cast<Eigen::Index>(data.size()));
}

// Serialized per gate for readability; the stacked layout is an in-memory
// detail.
inline nlohmann::json lstm_params_to_json(const LstmParams& p) {
    return {{"w_f", matrix_to_json(p.w_f())}, {"w_i", matrix_to_json(p.w_i())},
            {"w_c", matrix_to_json(p.w_c())}, {"w_o", matrix_to_json(p.w_o())},
            {"u_f", matrix_to_json(p.u_f())}, {"u_i", matrix_to_json(p.u_i())},
            {"u_c", matrix_to_json(p.u_c())}, {"u_o", matrix_to_json(p.u_o())},
            {"v_o", matrix_to_json(p.v_o)},   {"b_f", vector_to_json(p.b_f())},
            {"b_i", vector_to_json(p.b_i())}, {"b_c", vector_to_json(p.b_c())},
            {"b_o", vector_to_json(p.b_o())}};
}

inline LstmParams lstm_params_from_json(const nlohmann::json& j) {
    const auto w_f = matrix_from_json(j.at("w_f"));
    const auto hidden = static_cast<int>(w_f.rows());
    const auto input = static_cast<int>(w_f.cols());
    LstmParams p = LstmParams::zeros(hidden, input);
    p.w_f() = w_f;
    p.w_i() = matrix_from_json(j.at("w_i"));
    p.w_c() = matrix_from_json(j.at("w_c"));
    p.w_o() = matrix_from_json(j.at("w_o"));
    p.u_f() = matrix_from_json(j.at("u_f"));
    p.u_i() = matrix_from_json(j.at("u_i"));
    p.u_c() = matrix_from_json(j.at("u_c"));
    p.u_o() = matrix_from_json(j.at("u_o"));
    p.v_o = matrix_from_json(j.at("v_o"));
    p.b_f() = vector_from_json(j.at("b_f"));
    p.b_i() = vector_from_json(j.at("b_i"));
    p.b_c() = vector_from_json(j.at("b_c"));
    p.b_o() = vector_from_json(j.at("b_o"));
    return p;
}

}  // namespace detail

// Stacked (optionally bidirectional) LSTM with a softmax head over the final
// forward state, concatenated with the backward pass's state at the original
// first position when bidirectional.
struct SequenceClassifier {
    Direction direction = Direction::forward_only;
    NetworkConfig config;
    std::vector<LstmParams> forward_layers;
    std::vector<LstmParams> backward_layers;  // empty for forward_only
    Eigen::MatrixXd head_w;                   // K x doc_dim
    Eigen::VectorXd head_b;                   // K

    int doc_dim() const {
        return direction == Direction::bidirectional ? 2 * config.hidden : config.hidden;
    }

    nlohmann::json to_json() const {
        nlohmann::json fwd = nlohmann::json::array();
        for (const auto& p : forward_layers) fwd.push_back(detail::lstm_params_to_json(p));
        nlohmann::json bwd = nlohmann::json::array();
        for (const auto& p : backward_layers) bwd.push_back(detail::lstm_params_to_json(p));
        return {{"version", 1},
                {"direction",
                 direction == Direction::bidirectional ? "bidirectional" : "forward"},
                {"config", config.to_json()},
                {"forward_layers", std::move(fwd)},
                {"backward_layers", std::move(bwd)},
                {"head_w", detail::matrix_to_json(head_w)},
                {"head_b", detail::vector_to_json(head_b)}};
    }

    static SequenceClassifier from_json(const nlohmann::json& j) {
        if (!j.contains("version") || j.at("version").get<int>() != 1)
            throw DataError("unsupported network model version");
        SequenceClassifier net;
        net.direction = j.at("direction").get<std::string>() == "bidirectional"
                            ? Direction::bidirectional
                            : Direction::forward_only;
        net.config = NetworkConfig::from_json(j.at("config"));
        for (const auto& p : j.at("forward_layers"))
            net.forward_layers.push_back(detail::lstm_params_from_json(p));
        for (const auto& p : j.at("backward_layers"))
            net.backward_layers.push_back(detail::lstm_params_from_json(p));
        net.head_w = detail::matrix_from_json(j.at("head_w"));
        net.head_b = detail::vector_from_json(j.at("head_b"));
        return net;
    }
};

inline SequenceClassifier init_network(const NetworkConfig& config, Direction direction,
                                       std::mt19937& rng) {
    if (config.layers < 1 || config.hidden < 1 || config.input_dim < 1 ||
        config.num_classes < 1 || config.dropout < 0.0 || config.dropout >= 1.0)
        throw UsageError("bad network configuration");
    SequenceClassifier net;
    net.direction = direction;
    net.config = config;
    const double r = config.init_range;
    auto fill = [&](Eigen::Ref<Eigen::MatrixXd> m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = uniform_real(rng, -r, r);
    };
    auto make_layers = [&](std::vector<LstmParams>& layers) {
        for (int l = 0; l < config.layers; ++l) {
            const int input = l == 0 ? config.input_dim : config.hidden;
            auto p = LstmParams::zeros(config.hidden, input);
            p.for_each_tensor([&](auto& tensor) { fill(tensor); });
            if (!config.use_peephole) p.v_o.setZero();
            layers.push_back(std::move(p));
        }
    };
    make_layers(net.forward_layers);
    if (direction == Direction::bidirectional) make_layers(net.backward_layers);
    net.head_w.resize(config.num_classes, net.doc_dim());
    fill(net.head_w);
    net.head_b.resize(config.num_classes);
    fill(net.head_b);
    return net;
}

// Activations stored with one column per timestep so the time dimension can
// be batched into matrix products on both passes.
struct LayerCache {
    Eigen::MatrixXd x;                          // layer input, D_l x T
    Eigen::MatrixXd f, i, g, o, c, tanh_c, h;   // H x T
    Eigen::MatrixXd mask;  // H x T inverted-dropout masks; 0x0 when off

    Eigen::VectorXd output(Eigen::Index t) const {
        if (mask.size() == 0) return h.col(t);
        return mask.col(t).cwiseProduct(h.col(t));
    }

    Eigen::MatrixXd outputs() const {
        return mask.size() == 0 ? h : mask.cwiseProduct(h);
    }
};

struct ForwardCache {
    std::vector<LayerCache> fwd;  // one per layer
    std::vector<LayerCache> bwd;  // reversed-sequence pass; empty if forward-only
    Eigen::VectorXd doc;          // head input
    Eigen::VectorXd probs;        // K
    std::size_t steps = 0;
};

struct ForwardResult {
    Eigen::VectorXd probs;
    ForwardCache cache;
};

namespace detail {

// Runs one direction's stack over the given input columns, creating dropout
// masks from rng when training. The input-to-hidden term for all timesteps
// is one matrix product per layer; only the recurrence runs step by step.
inline std::vector<LayerCache> run_stack(const std::vector<LstmParams>& layers,
                                         Eigen::MatrixXd inputs, const NetworkConfig& config,
                                         bool train_mode, std::mt19937* rng) {
    const bool use_dropout = train_mode && config.dropout > 0.0;
    const double keep_scale = use_dropout ? 1.0 / (1.0 - config.dropout) : 1.0;
    const int hidden = config.hidden;
    const Eigen::Index steps = inputs.cols();
    const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };

    std::vector<LayerCache> stack(layers.size());
    Eigen::MatrixXd layer_in = std::move(inputs);
    Eigen::VectorXd z(4 * hidden);
    Eigen::VectorXd zo(hidden);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& p = layers[l];
        auto& cache = stack[l];
        if (layer_in.rows() != p.input()) throw DataError("network input dimension mismatch");
        cache.x = std::move(layer_in);
        for (auto* m : {&cache.f, &cache.i, &cache.g, &cache.o, &cache.c, &cache.tanh_c,
                        &cache.h})
            m->resize(hidden, steps);

        Eigen::MatrixXd z_in = p.w * cache.x;  // 4H x T
        z_in.colwise() += p.b;
        for (Eigen::Index t = 0; t < steps; ++t) {
            z = z_in.col(t);
            if (t > 0) z.noalias() += p.u * cache.h.col(t - 1);
            cache.f.col(t) = z.segment(0 * hidden, hidden).unaryExpr(sig);
            cache.i.col(t) = z.segment(1 * hidden, hidden).unaryExpr(sig);
            cache.g.col(t) = z.segment(2 * hidden, hidden).array().tanh();
            cache.c.col(t) = cache.i.col(t).cwiseProduct(cache.g.col(t));
            if (t > 0) cache.c.col(t) += cache.f.col(t).cwiseProduct(cache.c.col(t - 1));
            zo = z.segment(3 * hidden, hidden);
            if (config.use_peephole) zo.noalias() += p.v_o * cache.c.col(t);
            cache.o.col(t) = zo.unaryExpr(sig);
            cache.tanh_c.col(t) = cache.c.col(t).array().tanh();
            cache.h.col(t) = cache.o.col(t).cwiseProduct(cache.tanh_c.col(t));
        }
        if (use_dropout) {
            cache.mask.resize(hidden, steps);
            for (Eigen::Index t = 0; t < steps; ++t)
                for (int d = 0; d < hidden; ++d)
                    cache.mask(d, t) = unit_real(*rng) < config.dropout ? 0.0 : keep_scale;
        }
        layer_in = cache.outputs();
    }
    return stack;
}

}  // namespace detail

// Layer 1 consumes the embedded tokens, layer 2 the (dropped-out) layer-1
// states. The bidirectional half runs independently over the reversed
// sequence; the head sees [final forward state ; backward state at the
// original first position].
inline ForwardResult forward_sequence(const SequenceClassifier& net,
                                      const std::vector<Eigen::VectorXd>& inputs,
                                      bool train_mode = false, std::mt19937* rng = nullptr) {
    if (inputs.empty()) throw DataError("cannot run the network on an empty sequence");
    if (train_mode && net.config.dropout > 0.0 && rng == nullptr)
        throw UsageError("training-mode forward pass needs an rng for dropout");

    ForwardResult result;
    auto& cache = result.cache;
    cache.steps = inputs.size();
    const auto steps = static_cast<Eigen::Index>(inputs.size());
    Eigen::MatrixXd columns(inputs[0].size(), steps);
    for (Eigen::Index t = 0; t < steps; ++t) columns.col(t) = inputs[static_cast<std::size_t>(t)];
    cache.fwd = detail::run_stack(net.forward_layers, columns, net.config, train_mode, rng);

    const Eigen::Index last = steps - 1;
    if (net.direction == Direction::bidirectional) {
        Eigen::MatrixXd reversed = columns.rowwise().reverse();
        cache.bwd = detail::run_stack(net.backward_layers, std::move(reversed), net.config,
                                      train_mode, rng);
        cache.doc.resize(2 * net.config.hidden);
        cache.doc << cache.fwd.back().output(last), cache.bwd.back().output(last);
    } else {
        cache.doc = cache.fwd.back().output(last);
    }

    Eigen::VectorXd scores = net.head_w * cache.doc + net.head_b;
    const double max_score = scores.maxCoeff();
    Eigen::VectorXd exps = (scores.array() - max_score).exp();
    cache.probs = exps / exps.sum();
    result.probs = cache.probs;
    return result;
}

struct NetworkGradients {
    std::vector<LstmParams> forward_layers;
    std::vector<LstmParams> backward_layers;
    Eigen::MatrixXd head_w;
    Eigen::VectorXd head_b;

    double squared_norm() {
        double s = 0.0;
        for (auto* layers : {&forward_layers, &backward_layers})
            for (auto& p : *layers)
                p.for_each_tensor([&](auto& tensor) { s += tensor.squaredNorm(); });
        s += head_w.squaredNorm();
        s += head_b.squaredNorm();
        return s;
    }

    void scale(double factor) {
        for (auto* layers : {&forward_layers, &backward_layers})
            for (auto& p : *layers)
                p.for_each_tensor([&](auto& tensor) { tensor *= factor; });
        head_w *= factor;
        head_b *= factor;
    }
};

namespace detail {

// Backpropagation through time over one direction's stack. dh_out_top holds
// the loss gradient on the top layer's post-dropout output, one column per
// timestep. The sequential sweep only fills the gate pre-activation
// gradients; every parameter accumulation is a batched product over time.
inline void stack_backward(const std::vector<LstmParams>& layers,
                           const std::vector<LayerCache>& stack, Eigen::MatrixXd dh_out_top,
                           bool use_peephole, std::vector<LstmParams>& grads) {
    const Eigen::Index steps = stack.front().x.cols();
    Eigen::MatrixXd dh_out = std::move(dh_out_top);
    for (std::size_t l = layers.size(); l-- > 0;) {
        const auto& p = layers[l];
        const auto& cache = stack[l];
        auto& g = grads[l];
        const int hidden = p.hidden();

        Eigen::MatrixXd dz(4 * hidden, steps);
        Eigen::VectorXd dh_carry = Eigen::VectorXd::Zero(hidden);
        Eigen::VectorXd dc_carry = Eigen::VectorXd::Zero(hidden);
        Eigen::VectorXd dh_total(hidden), dc(hidden);
        for (Eigen::Index t = steps - 1; t >= 0; --t) {
            // through this layer's dropout mask, plus the recurrent carry
            if (cache.mask.size() == 0)
                dh_total = dh_out.col(t) + dh_carry;
            else
                dh_total = cache.mask.col(t).cwiseProduct(dh_out.col(t)) + dh_carry;
            const auto o = cache.o.col(t).array();
            const auto f = cache.f.col(t).array();
            const auto i = cache.i.col(t).array();
            const auto gc = cache.g.col(t).array();
            const auto tanh_c = cache.tanh_c.col(t).array();

            auto dzf = dz.col(t).segment(0 * hidden, hidden);
            auto dzi = dz.col(t).segment(1 * hidden, hidden);
            auto dzc = dz.col(t).segment(2 * hidden, hidden);
            auto dzo = dz.col(t).segment(3 * hidden, hidden);

            dzo = (dh_total.array() * tanh_c * o * (1.0 - o)).matrix();
            dc = (dh_total.array() * o * (1.0 - tanh_c.square())).matrix() + dc_carry;
            if (use_peephole) dc.noalias() += p.v_o.transpose() * dzo;

            if (t > 0)
                dzf = (dc.array() * cache.c.col(t - 1).array() * f * (1.0 - f)).matrix();
            else
                dzf.setZero();  // c_prev is the zero state
            dzi = (dc.array() * gc * i * (1.0 - i)).matrix();
            dzc = (dc.array() * i * (1.0 - gc.square())).matrix();

            dh_carry.noalias() = p.u.transpose() * dz.col(t);
            dc_carry = dc.cwiseProduct(cache.f.col(t));
        }

        // each tensor is produced exactly once per pass, so assign, not accumulate
        g.w.noalias() = dz * cache.x.transpose();
        if (steps > 1)
            g.u.noalias() = dz.rightCols(steps - 1) * cache.h.leftCols(steps - 1).transpose();
        else
            g.u.setZero();
        if (use_peephole)
            g.v_o.noalias() = dz.middleRows(3 * hidden, hidden) * cache.c.transpose();
        else
            g.v_o.setZero();
        g.b = dz.rowwise().sum();
        dh_out = p.w.transpose() * dz;  // output gradient of the layer below
    }
}

}  // namespace detail

namespace detail {

inline void size_like(const std::vector<LstmParams>& params, std::vector<LstmParams>& grads) {
    bool match = grads.size() == params.size();
    for (std::size_t l = 0; match && l < params.size(); ++l)
        match = grads[l].w.rows() == params[l].w.rows() &&
                grads[l].w.cols() == params[l].w.cols();
    if (match) return;  // stack_backward overwrites every tensor
    grads.clear();
    for (const auto& p : params) grads.push_back(LstmParams::zeros(p.hidden(), p.input()));
}

}  // namespace detail

// Cross-entropy BPTT through the head and both stacks, clipped to the
// configured global norm. The grads buffer is zeroed and reused across calls.
inline void backward_sequence(const SequenceClassifier& net, const ForwardCache& cache,
                              int gold, NetworkGradients& grads) {
    if (gold < 0 || gold >= net.config.num_classes) throw DataError("gold class out of range");

    detail::size_like(net.forward_layers, grads.forward_layers);
    detail::size_like(net.backward_layers, grads.backward_layers);

    Eigen::VectorXd dscores = cache.probs;
    dscores(gold) -= 1.0;
    grads.head_w = dscores * cache.doc.transpose();
    grads.head_b = dscores;
    const Eigen::VectorXd ddoc = net.head_w.transpose() * dscores;

    const auto steps = static_cast<Eigen::Index>(cache.steps);
    const int hidden = net.config.hidden;
    Eigen::MatrixXd dh_top = Eigen::MatrixXd::Zero(hidden, steps);
    dh_top.col(steps - 1) = ddoc.head(hidden);
    detail::stack_backward(net.forward_layers, cache.fwd, std::move(dh_top),
                           net.config.use_peephole, grads.forward_layers);
    if (net.direction == Direction::bidirectional) {
        Eigen::MatrixXd dh_bwd = Eigen::MatrixXd::Zero(hidden, steps);
        dh_bwd.col(steps - 1) = ddoc.tail(hidden);
        detail::stack_backward(net.backward_layers, cache.bwd, std::move(dh_bwd),
                               net.config.use_peephole, grads.backward_layers);
    }

    if (net.config.clip_norm > 0.0) {
        const double norm = std::sqrt(grads.squared_norm());
        if (norm > net.config.clip_norm) grads.scale(net.config.clip_norm / norm);
    }
}

inline NetworkGradients backward_sequence(const SequenceClassifier& net,
                                          const ForwardCache& cache, int gold) {
    NetworkGradients grads;
    backward_sequence(net, cache, gold, grads);
    return grads;
}

struct TrainResult {
    SequenceClassifier model;
    std::vector<double> epoch_loss;  // mean cross-entropy per epoch
};

using EmbeddedExample = std::pair<std::vector<Eigen::VectorXd>, int>;

// Per-example SGD in seeded shuffled order; embeddings are frozen inputs.
inline TrainResult train_network(const std::vector<EmbeddedExample>& examples,
                                 const NetworkConfig& config, Direction direction) {
    if (examples.empty()) throw DataError("cannot train a network on an empty set");
    std::vector<bool> present(static_cast<std::size_t>(config.num_classes), false);
    for (const auto& [seq, label] : examples) {
        if (label < 0 || label >= config.num_classes) throw DataError("label id out of range");
        if (seq.empty()) throw DataError("training sequences must be non-empty");
        present[static_cast<std::size_t>(label)] = true;
    }
    for (int c = 0; c < config.num_classes; ++c)
        if (!present[static_cast<std::size_t>(c)])
            throw DataError("class " + std::to_string(c) + " has no training examples");
    if (config.epochs < 1 || config.learning_rate <= 0.0)
        throw UsageError("network training parameters must be positive");

    std::mt19937 rng(config.seed);
    TrainResult result;
    result.model = init_network(config, direction, rng);
    auto& net = result.model;

    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const double lr = config.learning_rate;
    const auto apply = [&](std::vector<LstmParams>& params, std::vector<LstmParams>& grads) {
        for (std::size_t l = 0; l < params.size(); ++l) {
            params[l].w.noalias() -= lr * grads[l].w;
            params[l].u.noalias() -= lr * grads[l].u;
            if (config.use_peephole) params[l].v_o.noalias() -= lr * grads[l].v_o;
            params[l].b -= lr * grads[l].b;
        }
    };

    NetworkGradients grads;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_in_place(order, rng);
        double loss_sum = 0.0;
        for (std::size_t k = 0; k < order.size(); ++k) {
            const auto& [seq, gold] = examples[order[k]];
            auto fwd = forward_sequence(net, seq, /*train_mode=*/true, &rng);
            const double loss = -std::log(fwd.probs(gold));
            if (!std::isfinite(loss))
                throw NumericError("training loss is not finite at epoch " +
                                   std::to_string(epoch) + ", example " + std::to_string(k));
            loss_sum += loss;
            backward_sequence(net, fwd.cache, gold, grads);
            apply(net.forward_layers, grads.forward_layers);
            if (net.direction == Direction::bidirectional)
                apply(net.backward_layers, grads.backward_layers);
            net.head_w.noalias() -= lr * grads.head_w;
            net.head_b -= lr * grads.head_b;
        }
        result.epoch_loss.push_back(loss_sum / static_cast<double>(examples.size()));
    }
    return result;
}

struct SequencePrediction {
    int label = 0;
    bool fallback = false;  // empty input, no forward pass ran
    Eigen::VectorXd probs;
};

// Dropout-free argmax; empty sequences fall back to class 0 with a flag.
inline SequencePrediction predict_sequence(const SequenceClassifier& net,
                                           const std::vector<Eigen::VectorXd>& inputs) {
    SequencePrediction pred;
    if (inputs.empty()) {
        pred.fallback = true;
        pred.probs = Eigen::VectorXd::Zero(net.config.num_classes);
        return pred;
    }
    const auto result = forward_sequence(net, inputs, /*train_mode=*/false, nullptr);
    pred.probs = result.probs;
    for (int c = 1; c < net.config.num_classes; ++c)
        if (pred.probs(c) > pred.probs(pred.label)) pred.label = c;
    return pred;
}

}  // namespace sfc
