#include "fdnn/dnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fdnn/errors.hpp"

namespace fdnn {

void NetworkArchitecture::validate() const {
    require(input_dim >= 1, ErrorKind::InvalidArgument, "network input dimension must be >= 1");
    require(!widths.empty(), ErrorKind::InvalidArgument, "network needs at least one hidden layer");
    for (int w : widths) require(w >= 1, ErrorKind::InvalidArgument, "hidden widths must be >= 1");
    require(std::isfinite(bound) && bound > 0.0, ErrorKind::InvalidArgument, "weight bound B must be finite and > 0");
}

double NetworkParams::max_abs() const {
    double m = 0.0;
    for (const auto& w : weights)
        if (w.size() > 0) m = std::max(m, w.cwiseAbs().maxCoeff());
    for (const auto& v : shifts)
        if (v.size() > 0) m = std::max(m, v.cwiseAbs().maxCoeff());
    return m;
}

std::size_t NetworkParams::parameter_count() const {
    std::size_t count = 0;
    for (const auto& w : weights) count += static_cast<std::size_t>(w.size());
    for (const auto& v : shifts) count += static_cast<std::size_t>(v.size());
    return count;
}

void NetworkParams::check_shapes() const {
    require(!shifts.empty() && weights.size() == shifts.size() + 1, ErrorKind::InvalidArgument,
            "network needs L shift vectors and L+1 weight matrices");
    require(weights.front().cols() >= 1, ErrorKind::InvalidArgument, "network input dimension must be >= 1");
    for (std::size_t l = 0; l < shifts.size(); ++l) {
        require(weights[l].rows() == shifts[l].size(), ErrorKind::InvalidArgument, "shift length does not match layer width");
        require(weights[l + 1].cols() == weights[l].rows(), ErrorKind::InvalidArgument, "weight shapes do not chain");
    }
    require(weights.back().rows() == 1, ErrorKind::InvalidArgument, "output layer must have one row");
}

NetworkParams NetworkParams::zeros(const NetworkArchitecture& arch) {
    arch.validate();
    NetworkParams p;
    int fan_in = arch.input_dim;
    for (int width : arch.widths) {
        p.weights.push_back(Eigen::MatrixXd::Zero(width, fan_in));
        p.shifts.push_back(Eigen::VectorXd::Zero(width));
        fan_in = width;
    }
    p.weights.push_back(Eigen::MatrixXd::Zero(1, fan_in));
    return p;
}

void TrainConfig::validate() const {
    require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorKind::InvalidArgument, "learning rate must be > 0");
    require(decay > 0.0 && decay <= 1.0, ErrorKind::InvalidArgument, "learning-rate decay must lie in (0, 1]");
    require(epochs >= 1, ErrorKind::InvalidArgument, "epochs must be >= 1");
    require(batch_size >= 1, ErrorKind::InvalidArgument, "batch size must be >= 1");
    require(init_scale > 0.0 && std::isfinite(init_scale), ErrorKind::InvalidArgument, "init scale must be > 0");
}

namespace {

// Column-per-sample activations of one mini-batch.
struct Workspace {
    std::vector<Eigen::MatrixXd> activations;  // H_0 = inputs, H_l after layer l
    std::vector<Eigen::MatrixXd> preactivations;
    Eigen::RowVectorXd output;
};

void forward_batch(const NetworkParams& params, Workspace& ws) {
    const std::size_t depth = params.shifts.size();
    ws.activations.resize(depth + 1);
    ws.preactivations.resize(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        ws.preactivations[l].noalias() = params.weights[l] * ws.activations[l];
        ws.preactivations[l].colwise() -= params.shifts[l];
        ws.activations[l + 1] = ws.preactivations[l].cwiseMax(0.0);
    }
    ws.output.noalias() = params.weights[depth] * ws.activations[depth];
}

// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
void backward_batch(const NetworkParams& params, const Workspace& ws, const Eigen::RowVectorXd& output_grad,
                    NetworkParams& grad) {
    const std::size_t depth = params.shifts.size();
    grad.weights[depth].noalias() = output_grad * ws.activations[depth].transpose();
    Eigen::MatrixXd delta = params.weights[depth].transpose() * output_grad;
    for (std::size_t l = depth; l-- > 0;) {
        delta = (ws.preactivations[l].array() > 0.0).select(delta, 0.0);
        grad.shifts[l] = -delta.rowwise().sum().transpose();
        grad.weights[l].noalias() = delta * ws.activations[l].transpose();
        if (l > 0) delta = params.weights[l].transpose() * delta;
    }
}

void gather(const ScoreMatrix& data, std::span<const std::size_t> rows, Eigen::MatrixXd& inputs, Eigen::RowVectorXd& y) {
    inputs.resize(data.scores.cols(), static_cast<Eigen::Index>(rows.size()));
    y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        inputs.col(static_cast<Eigen::Index>(i)) = data.scores.row(static_cast<Eigen::Index>(rows[i])).transpose();
        y[static_cast<Eigen::Index>(i)] = value(data.labels[rows[i]]);
    }
}

void check_input(const NetworkParams& params, const ScoreMatrix& data) {
    params.check_shapes();
    require(data.rows() > 0, ErrorKind::InvalidArgument, "empty score matrix");
    require(data.components() == params.input_dim(), ErrorKind::InvalidArgument,
            "score dimension " + std::to_string(data.components()) + " does not match network input " +
                std::to_string(params.input_dim()));
}

}  // namespace

double forward(const NetworkParams& params, std::span<const double> x) {
    params.check_shapes();
    require(static_cast<int>(x.size()) == params.input_dim(), ErrorKind::InvalidArgument,
            "input length does not match network input dimension");
    Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    for (std::size_t l = 0; l < params.shifts.size(); ++l)
        h = (params.weights[l] * h - params.shifts[l]).cwiseMax(0.0);
    return (params.weights.back() * h)(0);
}

Eigen::VectorXd forward_rows(const NetworkParams& params, const Eigen::MatrixXd& inputs) {
    params.check_shapes();
    require(inputs.cols() == params.input_dim(), ErrorKind::InvalidArgument,
            "input width does not match network input dimension");
    Workspace ws;
    ws.activations.resize(1);
    ws.activations[0] = inputs.transpose();
    forward_batch(params, ws);
    return ws.output.transpose();
}

double hinge_risk(const NetworkParams& params, const ScoreMatrix& data) {
    check_input(params, data);
    const Eigen::VectorXd out = forward_rows(params, data.scores);
    double sum = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i) sum += hinge(out[static_cast<Eigen::Index>(i)] * value(data.labels[i]));
    return sum / static_cast<double>(data.rows());
}

NetworkParams subgradient(const NetworkParams& params, const ScoreMatrix& data, std::span<const std::size_t> batch) {
    check_input(params, data);
    require(!batch.empty(), ErrorKind::InvalidArgument, "empty batch");
    Workspace ws;
    ws.activations.resize(1);
    Eigen::RowVectorXd y;
    gather(data, batch, ws.activations[0], y);
    forward_batch(params, ws);
    const double scale = 1.0 / static_cast<double>(batch.size());
    Eigen::RowVectorXd output_grad = (ws.output.array() * y.array() < 1.0).select(-y * scale, 0.0);
    NetworkParams grad = params;
    backward_batch(params, ws, output_grad, grad);
    return grad;
}

NetworkParams initialize(const NetworkArchitecture& arch, const TrainConfig& cfg) {
    arch.validate();
    cfg.validate();
    NetworkParams params = NetworkParams::zeros(arch);
    std::mt19937_64 rng(cfg.seed);
    for (auto& w : params.weights) {
        const double fan_sum = static_cast<double>(w.rows() + w.cols());
        const double a = std::min(arch.bound, cfg.init_scale * std::sqrt(6.0 / fan_sum));
        std::uniform_real_distribution<double> dist(-a, a);
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
    }
    return params;
}

TrainTrace train_traced(const ScoreMatrix& data, const NetworkArchitecture& arch, const TrainConfig& cfg,
                        bool record_epoch_risks) {
    arch.validate();
    cfg.validate();
    require(data.rows() > 0, ErrorKind::InvalidArgument, "no training data");
    require(data.components() == arch.input_dim, ErrorKind::InvalidArgument,
            "score dimension does not match the architecture input dimension");

    TrainTrace trace;
    NetworkParams params = initialize(arch, cfg);
    const NetworkParams initial = params;
    trace.initial_risk = hinge_risk(params, data);
    trace.peak_magnitude = params.max_abs();

    // Shuffling draws from a stream separate from initialization.
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(data.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});

    const double bound = arch.bound;
    const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
    NetworkParams grad = params;
    Workspace ws;
    ws.activations.resize(1);
    Eigen::RowVectorXd y;
    Eigen::RowVectorXd output_grad;
    double rate = cfg.learning_rate;

    auto step = [&](auto& param, const auto& g) {
        param -= rate * g;
        trace.peak_magnitude = std::max(trace.peak_magnitude, param.cwiseAbs().maxCoeff());
        param = param.cwiseMax(-bound).cwiseMin(bound);
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t count = std::min(batch_size, order.size() - start);
            gather(data, std::span<const std::size_t>(order).subspan(start, count), ws.activations[0], y);
            forward_batch(params, ws);
            const double scale = 1.0 / static_cast<double>(count);
            output_grad = (ws.output.array() * y.array() < 1.0).select(-y * scale, 0.0);
            if (output_grad.isZero(0.0)) continue;
            backward_batch(params, ws, output_grad, grad);
            for (std::size_t l = 0; l < params.weights.size(); ++l) step(params.weights[l], grad.weights[l]);
            for (std::size_t l = 0; l < params.shifts.size(); ++l) step(params.shifts[l], grad.shifts[l]);
        }
        rate *= cfg.decay;
        if (record_epoch_risks) trace.epoch_risks.push_back(hinge_risk(params, data));
    }

    trace.final_risk = hinge_risk(params, data);
    if (trace.final_risk > trace.initial_risk) {
        params = initial;
        trace.final_risk = trace.initial_risk;
    }
    trace.params = std::move(params);
    return trace;
}

NetworkParams train(const ScoreMatrix& data, const NetworkArchitecture& arch, const TrainConfig& cfg) {
    return train_traced(data, arch, cfg).params;
}

}  // namespace fdnn
