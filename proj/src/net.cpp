#include "averl/net.hpp"

#include <cmath>

#include <json.hpp>

#include "averl/errors.hpp"
#include "averl/serialize.hpp"

namespace averl {

using nlohmann::json;

namespace {

DenseLayer zero_layer(int rows, int cols) {
    return DenseLayer{Eigen::MatrixXd::Zero(rows, cols), Eigen::VectorXd::Zero(rows)};
}

DenseLayer random_layer(int rows, int cols, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    DenseLayer layer = zero_layer(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) layer.w(r, c) = rng.uniform(-bound, bound);
    return layer;
}

void check_dims(int input_dim, int num_actions, const std::vector<int>& hidden) {
    if (input_dim < 1 || num_actions < 1)
        throw ContractError("NetworkParameters: input_dim and num_actions must be >= 1");
    for (int h : hidden)
        if (h < 1) throw ContractError("NetworkParameters: hidden sizes must be >= 1");
}

}  // namespace

NetworkParameters NetworkParameters::zeros(int input_dim, int num_actions,
                                           const std::vector<int>& hidden) {
    check_dims(input_dim, num_actions, hidden);
    NetworkParameters p;
    p.input_dim = input_dim;
    p.num_actions = num_actions;
    int in = input_dim;
    for (int h : hidden) {
        p.trunk.push_back(zero_layer(h, in));
        in = h;
    }
    p.value_head = zero_layer(1, in);
    p.adv_head = zero_layer(num_actions, in);
    return p;
}

NetworkParameters NetworkParameters::randomized(int input_dim, int num_actions,
                                                const std::vector<int>& hidden, Rng& rng) {
    check_dims(input_dim, num_actions, hidden);
    NetworkParameters p;
    p.input_dim = input_dim;
    p.num_actions = num_actions;
    int in = input_dim;
    for (int h : hidden) {
        p.trunk.push_back(random_layer(h, in, rng));
        in = h;
    }
    p.value_head = random_layer(1, in, rng);
    p.adv_head = random_layer(num_actions, in, rng);
    return p;
}

bool NetworkParameters::same_shape(const NetworkParameters& other) const {
    if (input_dim != other.input_dim || num_actions != other.num_actions ||
        trunk.size() != other.trunk.size())
        return false;
    for (std::size_t i = 0; i < trunk.size(); ++i)
        if (trunk[i].w.rows() != other.trunk[i].w.rows() ||
            trunk[i].w.cols() != other.trunk[i].w.cols())
            return false;
    return true;
}

GradientSet GradientSet::zeros_like(const NetworkParameters& params) {
    GradientSet g;
    for (const auto& layer : params.trunk)
        g.trunk.push_back(
            zero_layer(static_cast<int>(layer.w.rows()), static_cast<int>(layer.w.cols())));
    g.value_head = zero_layer(1, static_cast<int>(params.value_head.w.cols()));
    g.adv_head = zero_layer(params.num_actions, static_cast<int>(params.adv_head.w.cols()));
    return g;
}

Eigen::MatrixXd forward_batch(const NetworkParameters& params, const Eigen::MatrixXd& features) {
    if (features.rows() != params.input_dim)
        throw ContractError("forward: feature dimension " + std::to_string(features.rows()) +
                            " does not match input_dim " + std::to_string(params.input_dim));
    Eigen::MatrixXd h = features;
    for (const auto& layer : params.trunk)
        h = ((layer.w * h).colwise() + layer.b).cwiseMax(0.0);
    const Eigen::RowVectorXd v = ((params.value_head.w * h).colwise() + params.value_head.b).row(0);
    Eigen::MatrixXd adv = (params.adv_head.w * h).colwise() + params.adv_head.b;
    const Eigen::RowVectorXd adv_mean = adv.colwise().mean();
    Eigen::MatrixXd q = adv.rowwise() - adv_mean;
    q.rowwise() += v;
    return q;
}

Eigen::VectorXd forward(const NetworkParameters& params, const Eigen::VectorXd& features) {
    return forward_batch(params, features).col(0);
}

double backward_batch(const NetworkParameters& params, const Eigen::MatrixXd& features,
                      const std::vector<int>& actions, const Eigen::VectorXd& targets,
                      GradientSet& grads) {
    const auto batch = static_cast<int>(features.cols());
    if (batch == 0) throw ContractError("backward: empty batch");
    if (static_cast<int>(actions.size()) != batch || targets.size() != batch)
        throw ContractError("backward: actions/targets size does not match batch");
    if (features.rows() != params.input_dim)
        throw ContractError("backward: feature dimension does not match input_dim");
    for (int a : actions)
        if (a < 0 || a >= params.num_actions)
            throw ContractError("backward: action index out of range");

    // forward, keeping activations
    std::vector<Eigen::MatrixXd> acts;    // acts[0] = input, acts[l] = relu output of layer l
    acts.reserve(params.trunk.size() + 1);
    acts.push_back(features);
    for (const auto& layer : params.trunk)
        acts.push_back(((layer.w * acts.back()).colwise() + layer.b).cwiseMax(0.0));
    const Eigen::MatrixXd& top = acts.back();
    const Eigen::RowVectorXd v =
        ((params.value_head.w * top).colwise() + params.value_head.b).row(0);
    Eigen::MatrixXd adv = (params.adv_head.w * top).colwise() + params.adv_head.b;
    const Eigen::RowVectorXd adv_mean = adv.colwise().mean();
    Eigen::MatrixXd q = adv.rowwise() - adv_mean;
    q.rowwise() += v;

    // loss and its gradient at the combined q output
    const double inv_batch = 1.0 / batch;
    double loss = 0.0;
    Eigen::MatrixXd gq = Eigen::MatrixXd::Zero(params.num_actions, batch);
    for (int j = 0; j < batch; ++j) {
        const double err = q(actions[j], j) - targets(j);
        loss += 0.5 * err * err;
        gq(actions[j], j) = err * inv_batch;
    }
    loss *= inv_batch;

    // dueling combine: dq/dA = I - 1/m, dq/dv = 1
    const Eigen::RowVectorXd gq_colsum = gq.colwise().sum();
    const Eigen::MatrixXd g_adv =
        gq - Eigen::MatrixXd::Constant(params.num_actions, 1, 1.0 / params.num_actions) *
                 gq_colsum;
    const Eigen::RowVectorXd g_v = gq_colsum;

    grads.value_head.w = g_v * top.transpose();
    grads.value_head.b = Eigen::VectorXd::Constant(1, g_v.sum());
    grads.adv_head.w = g_adv * top.transpose();
    grads.adv_head.b = g_adv.rowwise().sum();

    Eigen::MatrixXd gh =
        params.value_head.w.transpose() * g_v + params.adv_head.w.transpose() * g_adv;
    for (int l = static_cast<int>(params.trunk.size()) - 1; l >= 0; --l) {
        const Eigen::MatrixXd gz =
            (acts[l + 1].array() > 0.0).cast<double>() * gh.array();
        grads.trunk[l].w = gz * acts[l].transpose();
        grads.trunk[l].b = gz.rowwise().sum();
        if (l > 0) gh = params.trunk[l].w.transpose() * gz;
    }
    return loss;
}

BackwardResult backward(const NetworkParameters& params, const Eigen::VectorXd& features,
                        int action, double target) {
    BackwardResult result;
    result.grads = GradientSet::zeros_like(params);
    Eigen::VectorXd t(1);
    t(0) = target;
    result.loss = backward_batch(params, features, {action}, t, result.grads);
    return result;
}

Optimizer::Optimizer(Kind kind, double lr) : kind_(kind), lr_(lr) {
    if (!(lr >= 0.0)) throw ContractError("Optimizer: learning rate must be >= 0");
}

void Optimizer::step(NetworkParameters& params, const GradientSet& grads) {
    if (kind_ == Kind::Sgd) {
        for_each_tensor_pair(params, const_cast<GradientSet&>(grads),
                             [this](auto& p, auto& g) { p -= lr_ * g; });
        return;
    }
    if (!state_ready_) {
        m_ = GradientSet::zeros_like(params);
        v_ = GradientSet::zeros_like(params);
        state_ready_ = true;
    }
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    auto adam = [&](auto& p, auto& g, auto& m, auto& v) {
        m = kBeta1 * m + (1.0 - kBeta1) * g;
        v = (kBeta2 * v.array() + (1.0 - kBeta2) * g.array().square()).matrix();
        p.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
    };
    for (std::size_t i = 0; i < params.trunk.size(); ++i) {
        adam(params.trunk[i].w, grads.trunk[i].w, m_.trunk[i].w, v_.trunk[i].w);
        adam(params.trunk[i].b, grads.trunk[i].b, m_.trunk[i].b, v_.trunk[i].b);
    }
    adam(params.value_head.w, grads.value_head.w, m_.value_head.w, v_.value_head.w);
    adam(params.value_head.b, grads.value_head.b, m_.value_head.b, v_.value_head.b);
    adam(params.adv_head.w, grads.adv_head.w, m_.adv_head.w, v_.adv_head.w);
    adam(params.adv_head.b, grads.adv_head.b, m_.adv_head.b, v_.adv_head.b);
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows, int expect_rows, int expect_cols) {
    if (static_cast<int>(rows.size()) != expect_rows)
        throw ParseError("network checkpoint: tensor row count mismatch");
    Eigen::MatrixXd m(expect_rows, expect_cols);
    for (int r = 0; r < expect_rows; ++r) {
        const auto& row = rows.at(r);
        if (static_cast<int>(row.size()) != expect_cols)
            throw ParseError("network checkpoint: tensor column count mismatch");
        for (int c = 0; c < expect_cols; ++c) m(r, c) = row.at(c).get<double>();
    }
    return m;
}

json layer_to_json(const DenseLayer& layer) {
    json b = json::array();
    for (int i = 0; i < layer.b.size(); ++i) b.push_back(layer.b(i));
    return json{{"rows", layer.w.rows()},
                {"cols", layer.w.cols()},
                {"w", matrix_to_json(layer.w)},
                {"b", std::move(b)}};
}

DenseLayer layer_from_json(const json& j) {
    const int rows = j.at("rows").get<int>();
    const int cols = j.at("cols").get<int>();
    DenseLayer layer;
    layer.w = matrix_from_json(j.at("w"), rows, cols);
    const auto& b = j.at("b");
    if (static_cast<int>(b.size()) != rows)
        throw ParseError("network checkpoint: bias length mismatch");
    layer.b.resize(rows);
    for (int i = 0; i < rows; ++i) layer.b(i) = b.at(i).get<double>();
    return layer;
}

}  // namespace

std::string params_to_json(const NetworkParameters& params) {
    json trunk = json::array();
    for (const auto& layer : params.trunk) trunk.push_back(layer_to_json(layer));
    json doc = {{"format_version", 1},
                {"input_dim", params.input_dim},
                {"num_actions", params.num_actions},
                {"trunk", std::move(trunk)},
                {"value_head", layer_to_json(params.value_head)},
                {"adv_head", layer_to_json(params.adv_head)}};
    return doc.dump();
}

NetworkParameters params_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("network checkpoint: ") + e.what());
    }
    try {
        if (doc.at("format_version").get<int>() != 1)
            throw ParseError("network checkpoint: unsupported format_version");
        NetworkParameters p;
        p.input_dim = doc.at("input_dim").get<int>();
        p.num_actions = doc.at("num_actions").get<int>();
        for (const auto& layer : doc.at("trunk")) p.trunk.push_back(layer_from_json(layer));
        p.value_head = layer_from_json(doc.at("value_head"));
        p.adv_head = layer_from_json(doc.at("adv_head"));
        return p;
    } catch (const json::exception& e) {
        throw ParseError(std::string("network checkpoint: ") + e.what());
    }
}

void save_params(const NetworkParameters& params, const std::string& path) {
    write_text_file(path, params_to_json(params));
}

NetworkParameters load_params(const std::string& path) {
    return params_from_json(read_text_file(path));
}

}  // namespace averl
