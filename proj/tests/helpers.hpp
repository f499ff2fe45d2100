#pragma once

#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "fdnn/classifier.hpp"
#include "fdnn/dgp.hpp"
#include "fdnn/grid.hpp"

namespace testing_util {

inline fdnn::GridPtr midpoint_grid(int m) {
    return std::make_shared<const fdnn::SamplingGrid>(fdnn::make_equispaced_grid(1, {m}));
}

inline fdnn::GridPtr midpoint_grid_2d(int m) {
    return std::make_shared<const fdnn::SamplingGrid>(fdnn::make_equispaced_grid(2, {m, m}));
}

inline fdnn::FunctionalObservation curve(const fdnn::GridPtr& grid, const std::function<double(double)>& f,
                                         std::optional<fdnn::Label> label = std::nullopt) {
    std::vector<double> v;
    for (std::size_t p = 0; p < grid->size(); ++p) v.push_back(f(grid->point(p)[0]));
    return {grid, std::move(v), label};
}

/// Curves a*1 + b*s with (a, b) in two well-separated clusters.
inline std::vector<fdnn::FunctionalObservation> separable_curves(const fdnn::GridPtr& grid, std::size_t n,
                                                                 std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.3);
    std::vector<fdnn::FunctionalObservation> out;
    for (std::size_t i = 0; i < n; ++i) {
        const bool pos = i % 2 == 0;
        const double a = (pos ? 3.0 : -3.0) + noise(rng);
        const double b = noise(rng);
        out.push_back(curve(grid, [&](double s) { return a + b * s; }, pos ? fdnn::Label::Positive : fdnn::Label::Negative));
    }
    return out;
}

inline fdnn::TrainConfig quick_train(std::uint64_t seed = 0) {
    fdnn::TrainConfig cfg;
    cfg.epochs = 60;
    cfg.batch_size = 16;
    cfg.seed = seed;
    return cfg;
}

}  // namespace testing_util
