#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fdnn {

/// Binary class label. The numeric values are the ones used in margins
/// (f(x) * y), so `value()` is safe to multiply with.
enum class Label : int { Negative = -1, Positive = 1 };

constexpr double value(Label label) noexcept { return static_cast<double>(static_cast<int>(label)); }

/// Sign rule shared by every classifier here: ties go to the positive class.
constexpr Label sign_label(double score) noexcept { return score >= 0.0 ? Label::Positive : Label::Negative; }

Label label_from_int(int raw);

/// Tensor-product evaluation points on [0,1]^d with one quadrature weight per
/// point. Points are flattened row-major: the last axis varies fastest.
class SamplingGrid {
public:
    SamplingGrid(std::vector<std::vector<double>> axes, std::vector<double> weights);

    int dim() const noexcept { return static_cast<int>(axes_.size()); }
    std::size_t size() const noexcept { return weights_.size(); }
    std::vector<int> points_per_axis() const;
    const std::vector<double>& axis(int a) const { return axes_.at(static_cast<std::size_t>(a)); }
    std::span<const double> weights() const noexcept { return weights_; }

    /// Coordinates of flattened point `index`.
    std::vector<double> point(std::size_t index) const;

    /// True when the grid was produced by make_equispaced_grid with the same
    /// axis counts (the only layout the CSV header can describe).
    bool is_midpoint() const;

    friend bool operator==(const SamplingGrid& a, const SamplingGrid& b) {
        return a.axes_ == b.axes_ && a.weights_ == b.weights_;
    }

private:
    std::vector<std::vector<double>> axes_;
    std::vector<double> weights_;
};

using GridPtr = std::shared_ptr<const SamplingGrid>;

/// Midpoint rule: point i of an m-point axis sits at (i + 0.5) / m with
/// weight 1/m; tensor weights multiply across axes.
SamplingGrid make_equispaced_grid(int dim, const std::vector<int>& points_per_axis);

/// Non-equispaced axes with trapezoidal weights. Interior panels use the
/// trapezoid rule; the gaps [0, x_0] and [x_last, 1] are absorbed by the end
/// points so the weights always sum to one.
SamplingGrid make_trapezoid_grid(std::vector<std::vector<double>> axes);

bool same_grid(const SamplingGrid& a, const SamplingGrid& b);

struct FunctionalObservation {
    GridPtr grid;
    std::vector<double> values;
    std::optional<Label> label;

    FunctionalObservation(GridPtr grid, std::vector<double> values, std::optional<Label> label = std::nullopt);
};

/// Quadrature approximation of the L2 inner product on the grid.
double inner_product(const FunctionalObservation& f, const FunctionalObservation& g);
double quadrature_dot(std::span<const double> weights, std::span<const double> a, std::span<const double> b);

/// Labeled or unlabeled observations sharing one grid, as read from or
/// written to the CSV exchange format:
///
///     # grid d=<d> axes=<m1,...,md>
///     v_1,...,v_N[,label]
///
/// one observation per line, values in row-major grid order.
struct FunctionalDataset {
    GridPtr grid;
    std::vector<FunctionalObservation> observations;

    bool labeled() const;
    std::vector<Label> labels() const;
};

FunctionalDataset read_csv(std::istream& in, const std::string& source = "<stream>");
FunctionalDataset read_csv_file(const std::string& path);
void write_csv(std::ostream& out, const FunctionalDataset& data);
void write_csv_file(const std::string& path, const FunctionalDataset& data);

}  // namespace fdnn
