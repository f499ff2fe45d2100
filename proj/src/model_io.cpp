// Model files are line-oriented text:
//
//   fdnn-model 1
//   [grid]          dim, axis.<a>, weights
//   [eigensystem]   count, eigenvalues, mean, eigenfunction.<j>
//   [network]       components, depth, widths, bound, W.<l>, V.<l>
//   [selection]     selected, candidate (one line per candidate, in grid order)
//
// Each entry is `key = space separated values`. Matrices are stored as
// `rows cols v...` in row-major order. Numbers use the shortest decimal form
// that round-trips.

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "fdnn/classifier.hpp"
#include "fdnn/errors.hpp"
#include "text_util.hpp"

namespace fdnn {

namespace {

constexpr const char* kMagic = "fdnn-model 1";

std::string row_major(const Eigen::MatrixXd& m) {
    std::string out = std::to_string(m.rows()) + " " + std::to_string(m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) out += " " + detail::format_double(m(r, c));
    return out;
}

template <typename Vec>
std::string flat(const Vec& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out.push_back(' ');
        out += detail::format_double(v[i]);
    }
    return out;
}

struct Entry {
    std::string value;
    std::size_t line = 0;
};

// section -> ordered key/value entries
using Sections = std::map<std::string, std::vector<std::pair<std::string, Entry>>>;

class Reader {
public:
    Reader(Sections sections, std::string source) : sections_(std::move(sections)), source_(std::move(source)) {}

    const Entry& get(const std::string& section, const std::string& key) const {
        const Entry* e = find(section, key);
        if (!e) fail(ErrorKind::Parse, source_ + ": missing '" + key + "' in [" + section + "]");
        return *e;
    }

    const Entry* find(const std::string& section, const std::string& key) const {
        const auto it = sections_.find(section);
        if (it == sections_.end()) return nullptr;
        for (const auto& [k, e] : it->second)
            if (k == key) return &e;
        return nullptr;
    }

    std::vector<const Entry*> all(const std::string& section, const std::string& key) const {
        std::vector<const Entry*> out;
        const auto it = sections_.find(section);
        if (it == sections_.end()) return out;
        for (const auto& [k, e] : it->second)
            if (k == key) out.push_back(&e);
        return out;
    }

    std::string where(const Entry& e) const { return source_ + ":" + std::to_string(e.line); }

    std::vector<double> numbers(const Entry& e) const {
        std::vector<double> out;
        std::istringstream in(e.value);
        std::string tok;
        while (in >> tok) out.push_back(detail::parse_double(tok, where(e)));
        return out;
    }

    template <typename Int>
    Int integer(const Entry& e) const {
        return detail::parse_int<Int>(e.value, where(e));
    }

    Eigen::VectorXd vector(const Entry& e, Eigen::Index expected) const {
        const auto v = numbers(e);
        if (static_cast<Eigen::Index>(v.size()) != expected)
            fail(ErrorKind::Parse, where(e) + ": expected " + std::to_string(expected) + " values, got " +
                                       std::to_string(v.size()));
        return Eigen::Map<const Eigen::VectorXd>(v.data(), expected);
    }

    Eigen::MatrixXd matrix(const Entry& e) const {
        const auto v = numbers(e);
        if (v.size() < 2) fail(ErrorKind::Parse, where(e) + ": matrix needs a shape");
        const auto rows = static_cast<Eigen::Index>(v[0]);
        const auto cols = static_cast<Eigen::Index>(v[1]);
        if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) + 2 != v.size())
            fail(ErrorKind::Parse, where(e) + ": matrix shape does not match its value count");
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(2 + r * cols + c)];
        return m;
    }

private:
    Sections sections_;
    std::string source_;
};

Sections parse_sections(std::istream& in, const std::string& source) {
    static const std::map<std::string, std::vector<std::string>> known = {
        {"grid", {"dim", "axis", "weights"}},
        {"eigensystem", {"count", "eigenvalues", "mean", "eigenfunction"}},
        {"network", {"components", "depth", "widths", "bound", "W", "V"}},
        {"selection", {"selected", "candidate"}},
    };
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != kMagic)
        fail(ErrorKind::Parse, source + ":1: not a model file (missing '" + std::string(kMagic) + "')");
    Sections sections;
    std::string current;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = detail::trim(line);
        const std::string ctx = source + ":" + std::to_string(line_no);
        if (text.empty() || text.front() == '#') continue;
        if (text.front() == '[') {
            if (text.back() != ']') fail(ErrorKind::Parse, ctx + ": malformed section header");
            current = std::string(text.substr(1, text.size() - 2));
            if (!known.count(current)) fail(ErrorKind::Parse, ctx + ": unknown section [" + current + "]");
            if (sections.count(current)) fail(ErrorKind::Parse, ctx + ": duplicate section [" + current + "]");
            sections[current];
            continue;
        }
        if (current.empty()) fail(ErrorKind::Parse, ctx + ": entry outside of a section");
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) fail(ErrorKind::Parse, ctx + ": expected 'key = value'");
        const std::string key(detail::trim(text.substr(0, eq)));
        const std::string stem = key.substr(0, key.find('.'));
        const auto& allowed = known.at(current);
        if (std::find(allowed.begin(), allowed.end(), stem) == allowed.end())
            fail(ErrorKind::Parse, ctx + ": unknown key '" + key + "' in [" + current + "]");
        sections[current].push_back({key, Entry{std::string(detail::trim(text.substr(eq + 1))), line_no}});
    }
    for (const auto& [name, keys] : known)
        if (!sections.count(name)) fail(ErrorKind::Parse, source + ": missing section [" + name + "]");
    return sections;
}

}  // namespace

void save_model(std::ostream& out, const FDNNModel& model) {
    const SamplingGrid& grid = *model.eigensystem.grid;
    out << kMagic << '\n';
    out << "[grid]\n";
    out << "dim = " << grid.dim() << '\n';
    for (int a = 0; a < grid.dim(); ++a) out << "axis." << a << " = " << detail::join_doubles(grid.axis(a)) << '\n';
    out << "weights = " << detail::join_doubles(grid.weights()) << '\n';

    const EigenSystem& eig = model.eigensystem;
    out << "[eigensystem]\n";
    out << "count = " << eig.size() << '\n';
    out << "eigenvalues = " << flat(eig.eigenvalues) << '\n';
    out << "mean = " << flat(eig.mean_function) << '\n';
    for (int j = 0; j < eig.size(); ++j) out << "eigenfunction." << j << " = " << flat(eig.eigenfunctions.col(j)) << '\n';

    out << "[network]\n";
    out << "components = " << model.components << '\n';
    out << "depth = " << model.params.depth() << '\n';
    out << "widths =";
    for (const auto& v : model.params.shifts) out << ' ' << v.size();
    out << '\n';
    out << "bound = " << detail::format_double(model.selection_report.empty() ? model.params.max_abs()
                                                                              : model.selected_candidate().bound)
        << '\n';
    for (std::size_t l = 0; l < model.params.weights.size(); ++l) out << "W." << l << " = " << row_major(model.params.weights[l]) << '\n';
    for (std::size_t l = 0; l < model.params.shifts.size(); ++l) out << "V." << l + 1 << " = " << flat(model.params.shifts[l]) << '\n';

    out << "[selection]\n";
    out << "# candidate = depth components width bound validation_error\n";
    out << "selected = " << model.selected << '\n';
    for (const auto& row : model.selection_report) {
        const auto& c = row.candidate;
        out << "candidate = " << c.depth << ' ' << c.components << ' ' << c.width << ' ' << detail::format_double(c.bound)
            << ' ' << detail::format_double(row.validation_error) << '\n';
    }
}

FDNNModel load_model(std::istream& in, const std::string& source) {
    const Reader r(parse_sections(in, source), source);
    FDNNModel model;

    const int dim = r.integer<int>(r.get("grid", "dim"));
    if (dim < 1) fail(ErrorKind::Parse, r.where(r.get("grid", "dim")) + ": dimension must be >= 1");
    std::vector<std::vector<double>> axes;
    for (int a = 0; a < dim; ++a) axes.push_back(r.numbers(r.get("grid", "axis." + std::to_string(a))));
    std::vector<double> weights = r.numbers(r.get("grid", "weights"));
    GridPtr grid;
    try {
        grid = std::make_shared<const SamplingGrid>(std::move(axes), std::move(weights));
    } catch (const Error& e) {
        fail(ErrorKind::Parse, source + ": invalid [grid]: " + e.what());
    }
    const auto n_points = static_cast<Eigen::Index>(grid->size());

    EigenSystem& eig = model.eigensystem;
    eig.grid = grid;
    const int count = r.integer<int>(r.get("eigensystem", "count"));
    if (count < 1) fail(ErrorKind::Parse, r.where(r.get("eigensystem", "count")) + ": count must be >= 1");
    eig.eigenvalues = r.vector(r.get("eigensystem", "eigenvalues"), count);
    eig.mean_function = r.vector(r.get("eigensystem", "mean"), n_points);
    eig.eigenfunctions.resize(n_points, count);
    for (int j = 0; j < count; ++j)
        eig.eigenfunctions.col(j) = r.vector(r.get("eigensystem", "eigenfunction." + std::to_string(j)), n_points);

    model.components = r.integer<int>(r.get("network", "components"));
    const int depth = r.integer<int>(r.get("network", "depth"));
    if (depth < 1) fail(ErrorKind::Parse, r.where(r.get("network", "depth")) + ": depth must be >= 1");
    for (int l = 0; l <= depth; ++l) model.params.weights.push_back(r.matrix(r.get("network", "W." + std::to_string(l))));
    for (int l = 1; l <= depth; ++l) {
        const Entry& e = r.get("network", "V." + std::to_string(l));
        model.params.shifts.push_back(r.vector(e, model.params.weights[static_cast<std::size_t>(l - 1)].rows()));
    }
    try {
        model.params.check_shapes();
    } catch (const Error& e) {
        fail(ErrorKind::Parse, source + ": invalid [network]: " + e.what());
    }
    if (model.params.input_dim() != model.components || model.components > count)
        fail(ErrorKind::Parse, source + ": network input dimension does not match components");

    for (const Entry* e : r.all("selection", "candidate")) {
        const auto v = r.numbers(*e);
        if (v.size() != 5) fail(ErrorKind::Parse, r.where(*e) + ": candidate needs 5 values");
        SelectionRow row;
        row.candidate = {static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]), v[3]};
        row.validation_error = v[4];
        model.selection_report.push_back(row);
    }
    model.selected = r.integer<std::size_t>(r.get("selection", "selected"));
    if (!model.selection_report.empty() && model.selected >= model.selection_report.size())
        fail(ErrorKind::Parse, r.where(r.get("selection", "selected")) + ": selected index out of range");
    return model;
}

void save_model_file(const std::string& path, const FDNNModel& model) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
    save_model(out, model);
    if (!out) fail(ErrorKind::Io, "failed writing '" + path + "'");
}

FDNNModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open '" + path + "' for reading");
    return load_model(in, path);
}

}  // namespace fdnn
