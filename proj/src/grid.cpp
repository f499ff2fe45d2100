#include "fdnn/grid.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "fdnn/errors.hpp"
#include "text_util.hpp"

namespace fdnn {

Label label_from_int(int raw) {
    if (raw == 1) return Label::Positive;
    if (raw == -1) return Label::Negative;
    fail(ErrorKind::InvalidArgument, "class label must be -1 or +1, got " + std::to_string(raw));
}

SamplingGrid::SamplingGrid(std::vector<std::vector<double>> axes, std::vector<double> weights)
    : axes_(std::move(axes)), weights_(std::move(weights)) {
    require(!axes_.empty(), ErrorKind::InvalidArgument, "grid needs at least one axis");
    std::size_t total = 1;
    for (const auto& axis : axes_) {
        require(!axis.empty(), ErrorKind::InvalidArgument, "grid axis has no points");
        for (std::size_t i = 0; i < axis.size(); ++i) {
            require(axis[i] >= 0.0 && axis[i] <= 1.0, ErrorKind::InvalidArgument, "grid coordinate outside [0,1]");
            require(i == 0 || axis[i] > axis[i - 1], ErrorKind::InvalidArgument,
                    "grid coordinates must be strictly increasing");
        }
        total *= axis.size();
    }
    require(weights_.size() == total, ErrorKind::InvalidArgument,
            "expected " + std::to_string(total) + " quadrature weights, got " + std::to_string(weights_.size()));
    double sum = 0.0;
    for (double w : weights_) {
        require(w >= 0.0 && std::isfinite(w), ErrorKind::InvalidArgument, "quadrature weights must be finite and >= 0");
        sum += w;
    }
    require(std::abs(sum - 1.0) <= 1e-12, ErrorKind::InvalidArgument, "quadrature weights must sum to 1");
}

std::vector<int> SamplingGrid::points_per_axis() const {
    std::vector<int> counts;
    counts.reserve(axes_.size());
    for (const auto& axis : axes_) counts.push_back(static_cast<int>(axis.size()));
    return counts;
}

std::vector<double> SamplingGrid::point(std::size_t index) const {
    require(index < size(), ErrorKind::InvalidArgument, "grid point index out of range");
    std::vector<double> coords(axes_.size());
    for (std::size_t a = axes_.size(); a-- > 0;) {
        const std::size_t m = axes_[a].size();
        coords[a] = axes_[a][index % m];
        index /= m;
    }
    return coords;
}

bool SamplingGrid::is_midpoint() const {
    return *this == make_equispaced_grid(dim(), points_per_axis());
}

namespace {

SamplingGrid tensor_grid(std::vector<std::vector<double>> axes, const std::vector<std::vector<double>>& axis_weights) {
    std::vector<double> weights{1.0};
    for (const auto& aw : axis_weights) {
        std::vector<double> next;
        next.reserve(weights.size() * aw.size());
        for (double w : weights)
            for (double v : aw) next.push_back(w * v);
        weights = std::move(next);
    }
    return SamplingGrid(std::move(axes), std::move(weights));
}

}  // namespace

SamplingGrid make_equispaced_grid(int dim, const std::vector<int>& points_per_axis) {
    require(dim >= 1, ErrorKind::InvalidArgument, "grid dimension must be >= 1");
    require(points_per_axis.size() == static_cast<std::size_t>(dim), ErrorKind::InvalidArgument,
            "need one point count per axis");
    std::vector<std::vector<double>> axes;
    std::vector<std::vector<double>> axis_weights;
    for (int m : points_per_axis) {
        require(m >= 2, ErrorKind::InvalidArgument, "axis point count must be at least 2, got " + std::to_string(m));
        std::vector<double> axis(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) axis[static_cast<std::size_t>(i)] = (i + 0.5) / m;
        axes.push_back(std::move(axis));
        axis_weights.emplace_back(static_cast<std::size_t>(m), 1.0 / m);
    }
    return tensor_grid(std::move(axes), axis_weights);
}

SamplingGrid make_trapezoid_grid(std::vector<std::vector<double>> axes) {
    require(!axes.empty(), ErrorKind::InvalidArgument, "grid needs at least one axis");
    std::vector<std::vector<double>> axis_weights;
    for (const auto& x : axes) {
        require(x.size() >= 2, ErrorKind::InvalidArgument, "trapezoid axis needs at least two points");
        const std::size_t m = x.size();
        std::vector<double> w(m, 0.0);
        for (std::size_t i = 0; i + 1 < m; ++i) {
            const double h = x[i + 1] - x[i];
            w[i] += 0.5 * h;
            w[i + 1] += 0.5 * h;
        }
        w.front() += x.front();
        w.back() += 1.0 - x.back();
        axis_weights.push_back(std::move(w));
    }
    return tensor_grid(std::move(axes), axis_weights);
}

bool same_grid(const SamplingGrid& a, const SamplingGrid& b) { return &a == &b || a == b; }

FunctionalObservation::FunctionalObservation(GridPtr g, std::vector<double> v, std::optional<Label> l)
    : grid(std::move(g)), values(std::move(v)), label(l) {
    require(grid != nullptr, ErrorKind::InvalidArgument, "observation needs a grid");
    require(values.size() == grid->size(), ErrorKind::InvalidArgument,
            "observation has " + std::to_string(values.size()) + " values, grid has " + std::to_string(grid->size()));
}

double quadrature_dot(std::span<const double> weights, std::span<const double> a, std::span<const double> b) {
    require(a.size() == weights.size() && b.size() == weights.size(), ErrorKind::IncompatibleGrids,
            "value vectors do not match the grid size");
    double sum = 0.0;
    for (std::size_t p = 0; p < weights.size(); ++p) sum += weights[p] * a[p] * b[p];
    return sum;
}

double inner_product(const FunctionalObservation& f, const FunctionalObservation& g) {
    require(same_grid(*f.grid, *g.grid), ErrorKind::IncompatibleGrids, "inner product of functions on different grids");
    return quadrature_dot(f.grid->weights(), f.values, g.values);
}

bool FunctionalDataset::labeled() const {
    if (observations.empty()) return false;
    for (const auto& obs : observations)
        if (!obs.label) return false;
    return true;
}

std::vector<Label> FunctionalDataset::labels() const {
    std::vector<Label> out;
    out.reserve(observations.size());
    for (const auto& obs : observations) {
        require(obs.label.has_value(), ErrorKind::InvalidArgument, "dataset has unlabeled observations");
        out.push_back(*obs.label);
    }
    return out;
}

namespace {

GridPtr parse_grid_header(std::string_view line, const std::string& source) {
    const std::string ctx = source + ":1";
    line = detail::trim(line);
    if (line.empty() || line.front() != '#') fail(ErrorKind::Parse, ctx + ": missing '# grid d=<d> axes=<...>' header");
    line.remove_prefix(1);
    std::istringstream tokens{std::string(line)};
    std::string word;
    tokens >> word;
    if (word != "grid") fail(ErrorKind::Parse, ctx + ": header must start with '# grid'");
    std::optional<int> dim;
    std::vector<int> axes;
    while (tokens >> word) {
        if (word.rfind("d=", 0) == 0) {
            dim = detail::parse_int<int>(std::string_view(word).substr(2), ctx + " (d=)");
        } else if (word.rfind("axes=", 0) == 0) {
            for (auto field : detail::split(std::string_view(word).substr(5), ','))
                axes.push_back(detail::parse_int<int>(field, ctx + " (axes=)"));
        } else {
            fail(ErrorKind::Parse, ctx + ": unknown header field '" + word + "'");
        }
    }
    if (!dim || axes.empty()) fail(ErrorKind::Parse, ctx + ": header needs both d= and axes=");
    if (static_cast<std::size_t>(*dim) != axes.size())
        fail(ErrorKind::Parse, ctx + ": d=" + std::to_string(*dim) + " but " + std::to_string(axes.size()) + " axis counts");
    try {
        return std::make_shared<const SamplingGrid>(make_equispaced_grid(*dim, axes));
    } catch (const Error& e) {
        fail(ErrorKind::Parse, ctx + ": " + e.what());
    }
}

}  // namespace

FunctionalDataset read_csv(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::Parse, source + ": empty file");
    FunctionalDataset data;
    data.grid = parse_grid_header(line, source);
    const std::size_t n_values = data.grid->size();
    std::optional<bool> with_labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const std::string ctx = source + ":" + std::to_string(line_no);
        const auto fields = detail::split(line, ',');
        bool has_label = false;
        if (fields.size() == n_values + 1) {
            has_label = true;
        } else if (fields.size() != n_values) {
            fail(ErrorKind::Parse, ctx + ": expected " + std::to_string(n_values) + " values (plus optional label), got " +
                                       std::to_string(fields.size()) + " fields");
        }
        if (with_labels && *with_labels != has_label)
            fail(ErrorKind::Parse, ctx + ": label column present on some rows but not others");
        with_labels = has_label;
        std::vector<double> values(n_values);
        for (std::size_t p = 0; p < n_values; ++p) values[p] = detail::parse_double(fields[p], ctx);
        std::optional<Label> label;
        if (has_label) {
            const double raw = detail::parse_double(fields.back(), ctx + " (label)");
            if (raw == 1.0) label = Label::Positive;
            else if (raw == -1.0) label = Label::Negative;
            else fail(ErrorKind::Parse, ctx + ": label must be -1 or 1");
        }
        data.observations.emplace_back(data.grid, std::move(values), label);
    }
    return data;
}

FunctionalDataset read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open '" + path + "' for reading");
    return read_csv(in, path);
}

void write_csv(std::ostream& out, const FunctionalDataset& data) {
    require(data.grid != nullptr, ErrorKind::InvalidArgument, "dataset has no grid");
    require(data.grid->is_midpoint(), ErrorKind::InvalidArgument, "CSV format only describes midpoint grids");
    const auto counts = data.grid->points_per_axis();
    out << "# grid d=" << data.grid->dim() << " axes=";
    for (std::size_t a = 0; a < counts.size(); ++a) out << (a ? "," : "") << counts[a];
    out << '\n';
    for (const auto& obs : data.observations) {
        require(same_grid(*obs.grid, *data.grid), ErrorKind::IncompatibleGrids, "observation not on the dataset grid");
        out << detail::join_doubles(obs.values, ',');
        if (obs.label) out << ',' << static_cast<int>(*obs.label);
        out << '\n';
    }
}

void write_csv_file(const std::string& path, const FunctionalDataset& data) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
    write_csv(out, data);
    if (!out) fail(ErrorKind::Io, "failed writing '" + path + "'");
}

}  // namespace fdnn
