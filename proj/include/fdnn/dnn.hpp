#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fdnn/fpca.hpp"

namespace fdnn {

/// Shape of a network in F(L, J, p, B): J inputs, L hidden ReLU layers of the
/// given widths, scalar output, every weight and shift bounded by B.
struct NetworkArchitecture {
    int input_dim = 1;
    std::vector<int> widths;
    double bound = 1.0;

    int depth() const noexcept { return static_cast<int>(widths.size()); }
    void validate() const;
};

/// weights[l] is W_l with shape p_{l+1} x p_l (p_0 = J, p_{L+1} = 1);
/// shifts[l] is V_{l+1}, subtracted before the ReLU of hidden layer l+1.
/// The output layer W_L has neither shift nor activation.
struct NetworkParams {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> shifts;

    int input_dim() const { return static_cast<int>(weights.front().cols()); }
    int depth() const noexcept { return static_cast<int>(shifts.size()); }

    /// Largest absolute entry over all weights and shifts.
    double max_abs() const;
    std::size_t parameter_count() const;

    /// Throws unless the shapes chain as described above.
    void check_shapes() const;

    /// Zero-filled parameters for the architecture.
    static NetworkParams zeros(const NetworkArchitecture& arch);
};

struct TrainConfig {
    double learning_rate = 0.1;
    /// Multiplicative learning-rate decay applied after every epoch.
    double decay = 0.99;
    int epochs = 100;
    int batch_size = 32;
    std::uint64_t seed = 0;
    /// Multiplier on the Glorot bound sqrt(6 / (fan_in + fan_out)); the
    /// resulting init range is further capped at B.
    double init_scale = 1.0;

    void validate() const;
};

double forward(const NetworkParams& params, std::span<const double> x);

/// Network outputs for every row of `inputs`.
Eigen::VectorXd forward_rows(const NetworkParams& params, const Eigen::MatrixXd& inputs);

inline double hinge(double margin) noexcept { return margin < 1.0 ? 1.0 - margin : 0.0; }

/// (1/n) sum_i max(1 - f(x_i) y_i, 0).
double hinge_risk(const NetworkParams& params, const ScoreMatrix& data);

/// Subgradient of the mean hinge risk over `batch` rows, shaped like the
/// parameters. Both kinks (margin exactly 1, pre-activation exactly 0) take
/// derivative zero.
NetworkParams subgradient(const NetworkParams& params, const ScoreMatrix& data, std::span<const std::size_t> batch);

/// Seeded uniform initialization in [-a, a] per layer with
/// a = min(B, init_scale * sqrt(6 / (fan_in + fan_out))); shifts start at 0.
NetworkParams initialize(const NetworkArchitecture& arch, const TrainConfig& cfg);

struct TrainTrace {
    NetworkParams params;
    double initial_risk = 0.0;
    double final_risk = 0.0;
    /// Largest entry magnitude produced by any update before projection. When
    /// it never exceeds B the projection was inactive for the whole run.
    double peak_magnitude = 0.0;
    /// Full-data hinge risk after each epoch (only when requested).
    std::vector<double> epoch_risks;
};

/// Projected mini-batch subgradient descent on the hinge risk. After every
/// step each entry is clipped to [-B, B]. If the last iterate ends above the
/// initial risk the initial parameters are returned instead.
TrainTrace train_traced(const ScoreMatrix& data, const NetworkArchitecture& arch, const TrainConfig& cfg,
                        bool record_epoch_risks = false);

NetworkParams train(const ScoreMatrix& data, const NetworkArchitecture& arch, const TrainConfig& cfg);

}  // namespace fdnn
