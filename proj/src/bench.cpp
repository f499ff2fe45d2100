#include "fdnn/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <thread>
#include <tuple>

#include "fdnn/errors.hpp"
#include "text_util.hpp"

namespace fdnn {

namespace {

// ---- config parsing ---------------------------------------------------------

std::vector<std::string_view> list_items(std::string_view value) {
    std::vector<std::string_view> out;
    for (auto part : detail::split(value, ','))
        for (auto tok : detail::split(part, ' '))
            if (!tok.empty()) out.push_back(tok);
    return out;
}

template <typename Int>
std::vector<Int> int_list(std::string_view value, const std::string& ctx) {
    std::vector<Int> out;
    for (auto tok : list_items(value)) out.push_back(detail::parse_int<Int>(tok, ctx));
    if (out.empty()) fail(ErrorKind::Parse, ctx + ": empty list");
    return out;
}

std::vector<double> double_list(std::string_view value, const std::string& ctx) {
    std::vector<double> out;
    for (auto tok : list_items(value)) out.push_back(detail::parse_double(tok, ctx));
    if (out.empty()) fail(ErrorKind::Parse, ctx + ": empty list");
    return out;
}

bool parse_bool(std::string_view value, const std::string& ctx) {
    if (value == "true" || value == "on" || value == "1") return true;
    if (value == "false" || value == "off" || value == "0") return false;
    fail(ErrorKind::Parse, ctx + ": expected true or false, got '" + std::string(value) + "'");
}

void apply(ExperimentConfig& cfg, const std::string& section, const std::string& key, std::string_view v,
           const std::string& ctx) {
    if (section == "experiment") {
        if (key == "dgp") {
            cfg.dgp = detail::parse_int<int>(v, ctx);
        } else if (key == "input") {
            if (v.empty()) fail(ErrorKind::Parse, ctx + ": input path is empty");
            cfg.input = std::string(v);
        } else if (key == "reading") {
            if (v == "sd" || v == "standard_deviation")
                cfg.reading = DiagonalReading::StandardDeviation;
            else if (v == "variance")
                cfg.reading = DiagonalReading::Variance;
            else
                fail(ErrorKind::Parse, ctx + ": reading must be 'sd' or 'variance'");
        } else if (key == "sizes") {
            cfg.sizes = int_list<std::size_t>(v, ctx);
        } else if (key == "replications") {
            cfg.replications = detail::parse_int<int>(v, ctx);
        } else if (key == "test_size") {
            cfg.test_size = detail::parse_int<std::size_t>(v, ctx);
        } else if (key == "grid_points") {
            cfg.grid_points = detail::parse_int<int>(v, ctx);
        } else if (key == "base_seed") {
            cfg.base_seed = detail::parse_int<std::uint64_t>(v, ctx);
        } else if (key == "threads") {
            cfg.threads = detail::parse_int<int>(v, ctx);
        } else if (key == "timing") {
            cfg.timing = parse_bool(v, ctx);
        } else if (key == "output") {
            cfg.output = std::string(v);
        } else {
            fail(ErrorKind::Parse, ctx + ": unknown key '" + key + "' in [experiment]");
        }
    } else if (section == "train") {
        if (key == "learning_rate") {
            cfg.train.learning_rate = detail::parse_double(v, ctx);
        } else if (key == "decay") {
            cfg.train.decay = detail::parse_double(v, ctx);
        } else if (key == "epochs") {
            if (v == "auto")
                cfg.epochs.reset();
            else
                cfg.epochs = detail::parse_int<int>(v, ctx);
        } else if (key == "updates") {
            cfg.updates = detail::parse_int<long>(v, ctx);
        } else if (key == "batch_size") {
            cfg.train.batch_size = detail::parse_int<int>(v, ctx);
        } else if (key == "init_scale") {
            cfg.train.init_scale = detail::parse_double(v, ctx);
        } else {
            fail(ErrorKind::Parse, ctx + ": unknown key '" + key + "' in [train]");
        }
    } else {  // hyper
        if (key == "depths") {
            if (v == "auto")
                cfg.depths.reset();
            else
                cfg.depths = int_list<int>(v, ctx);
        } else if (key == "components") {
            cfg.components = int_list<int>(v, ctx);
        } else if (key == "widths") {
            cfg.widths = int_list<int>(v, ctx);
        } else if (key == "bounds") {
            cfg.bounds = double_list(v, ctx);
        } else {
            fail(ErrorKind::Parse, ctx + ": unknown key '" + key + "' in [hyper]");
        }
    }
}

// ---- seeds ------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Replication r owns seed base + r; its train, test and fitting streams are
// derived from that.
enum class Stream : std::uint64_t { Train = 1, Test = 2, Fit = 3 };

std::uint64_t derived_seed(std::uint64_t replication_seed, Stream stream, std::size_t n = 0) {
    return splitmix64(splitmix64(replication_seed) ^ (static_cast<std::uint64_t>(stream) << 56) ^ n);
}

// ---- one replication --------------------------------------------------------

struct Task {
    std::size_t size_index = 0;
    int replication = 0;
};

struct Source {
    std::string name;
    std::optional<DGPSpec> spec;
    GridPtr grid;
    FunctionalDataset file;  // input mode
};

struct TrainTest {
    std::vector<FunctionalObservation> train;
    std::vector<FunctionalObservation> test;
    std::vector<Label> test_labels;
    std::vector<Label> bayes;  // empty in input mode
};

TrainTest draw_sets(const ExperimentConfig& cfg, const Source& src, std::size_t n, std::uint64_t rep_seed) {
    TrainTest out;
    if (src.spec) {
        auto train = generate(*src.spec, n, src.grid, derived_seed(rep_seed, Stream::Train, n));
        auto test = generate(*src.spec, cfg.test_size, src.grid, derived_seed(rep_seed, Stream::Test));
        out.train = std::move(train.data.observations);
        out.test = std::move(test.data.observations);
        out.test_labels = std::move(test.truth.labels);
        out.bayes = bayes_classify_rows(*src.spec, test.truth.coefficients);
        return out;
    }
    // The permutation depends only on the replication, so the held-out part is
    // shared by every n.
    const auto& obs = src.file.observations;
    std::vector<std::size_t> perm(obs.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(derived_seed(rep_seed, Stream::Test));
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < cfg.test_size; ++i) {
        out.test.push_back(obs[perm[perm.size() - 1 - i]]);
        out.test_labels.push_back(*out.test.back().label);
    }
    for (std::size_t i = 0; i < n; ++i) out.train.push_back(obs[perm[i]]);
    return out;
}

std::vector<int> baseline_components(const ExperimentConfig& cfg, const EigenSystem& eig) {
    const int cap = std::max(1, eig.numerical_rank());
    std::set<int> js;
    for (int j : cfg.components) js.insert(std::min(j, cap));
    return {js.begin(), js.end()};
}

// Picks J for a score-based baseline by the same split as FDNN (ties go to
// the smaller J), refits on every sample and predicts the test scores.
template <typename Fit, typename Predict>
std::vector<Label> run_baseline(const ScoreMatrix& all, const DataSplit& split, const std::vector<int>& js,
                                const Eigen::MatrixXd& test_scores, Fit fit, Predict predict) {
    const auto classify = [&](const auto& model, const Eigen::MatrixXd& rows) {
        std::vector<Label> labels;
        labels.reserve(static_cast<std::size_t>(rows.rows()));
        for (Eigen::Index i = 0; i < rows.rows(); ++i) {
            const Eigen::VectorXd x = rows.row(i).transpose();
            labels.push_back(predict(model, std::span<const double>(x.data(), static_cast<std::size_t>(x.size()))));
        }
        return labels;
    };
    int best_j = 0;
    double best_err = 2.0;
    std::exception_ptr first_error;
    for (int j : js) {
        const ScoreMatrix leading = all.leading(j);
        const ScoreMatrix val = leading.subset(split.validation);
        try {
            const auto model = fit(leading.subset(split.train));
            const double err = misclassification_rate(classify(model, val.scores), val.labels);
            if (err < best_err) best_err = err, best_j = j;
        } catch (const Error&) {
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (best_j == 0) std::rethrow_exception(first_error);
    const auto model = fit(all.leading(best_j));
    return classify(model, test_scores.leftCols(best_j));
}

std::vector<ReplicationRecord> run_task(const ExperimentConfig& cfg, const Source& src, const Task& task) {
    using Clock = std::chrono::steady_clock;
    const std::size_t n = cfg.sizes[task.size_index];
    const std::uint64_t rep_seed = cfg.base_seed + static_cast<std::uint64_t>(task.replication);
    TrainTest sets = draw_sets(cfg, src, n, rep_seed);

    std::vector<Label> train_labels;
    for (const auto& s : sets.train) train_labels.push_back(*s.label);
    const std::uint64_t fit_seed = derived_seed(rep_seed, Stream::Fit, n);
    const DataSplit split = stratified_split(train_labels, fit_seed);

    const EigenSystem eig = fit_fpca(sets.train);
    std::vector<ReplicationRecord> out;
    const auto record = [&](const std::string& method, const std::vector<Label>& pred, Clock::time_point start) {
        ReplicationRecord rec;
        rec.dgp = src.name;
        rec.n = n;
        rec.replication = task.replication;
        rec.method = method;
        rec.rate = misclassification_rate(pred, sets.test_labels);
        if (!sets.bayes.empty()) {
            const ExcessRisk ex = excess_risk(pred, sets.bayes, sets.test_labels);
            rec.excess = ex.excess;
            rec.excess_se = ex.se;
        }
        if (cfg.timing) rec.runtime_s = std::chrono::duration<double>(Clock::now() - start).count();
        out.push_back(rec);
    };

    {
        const auto start = Clock::now();
        TrainConfig tc = cfg.train;
        tc.seed = fit_seed;
        tc.epochs = cfg.epochs ? *cfg.epochs : epochs_for_updates(cfg.updates, tc.batch_size, split.train.size());
        const FDNNModel model = fit_fdnn(sets.train, eig, experiment_hyper_grid(cfg, n, eig.size()), tc, split);
        record("FDNN", predict_fdnn(model, sets.test), start);
    }

    const std::vector<int> js = baseline_components(cfg, eig);
    const int max_j = js.back();
    const ScoreMatrix all = project_scores(sets.train, eig, max_j);
    const Eigen::MatrixXd test_scores = project(sets.test, eig, max_j);
    {
        const auto start = Clock::now();
        const auto pred = run_baseline(all, split, js, test_scores, fit_qda,
                                       [](const QDAModel& m, std::span<const double> x) { return predict_qda(m, x); });
        record("QD", pred, start);
    }
    {
        const auto start = Clock::now();
        const auto pred =
            run_baseline(all, split, js, test_scores, fit_npbayes,
                         [](const NPBayesModel& m, std::span<const double> x) { return predict_npbayes(m, x); });
        record("NB", pred, start);
    }
    if (!sets.bayes.empty()) record("BAYES", sets.bayes, Clock::now());
    return out;
}

}  // namespace

void ExperimentConfig::validate() const {
    require(dgp.has_value() != !input.empty(), ErrorKind::InvalidArgument,
            "experiment needs exactly one of 'dgp' and 'input'");
    if (dgp) require(*dgp >= 1 && *dgp <= 5, ErrorKind::InvalidArgument, "dgp must be 1-5");
    require(replications >= 1, ErrorKind::InvalidArgument, "replications must be >= 1");
    require(!sizes.empty(), ErrorKind::InvalidArgument, "sizes must not be empty");
    for (std::size_t n : sizes) require(n >= 10, ErrorKind::InvalidArgument, "every sample size must be >= 10");
    require(test_size >= 1, ErrorKind::InvalidArgument, "test_size must be >= 1");
    require(grid_points >= 2, ErrorKind::InvalidArgument, "grid_points must be >= 2");
    require(threads >= 1, ErrorKind::InvalidArgument, "threads must be >= 1");
    require(updates >= 1, ErrorKind::InvalidArgument, "updates must be >= 1");
    if (epochs) require(*epochs >= 1, ErrorKind::InvalidArgument, "epochs must be >= 1");
    if (depths) {
        require(!depths->empty(), ErrorKind::InvalidArgument, "depths must not be empty");
        for (int l : *depths) require(l >= 1, ErrorKind::InvalidArgument, "depths must be >= 1");
    }
    require(!components.empty() && !widths.empty() && !bounds.empty(), ErrorKind::InvalidArgument,
            "hyper lists must not be empty");
    for (int j : components) require(j >= 1, ErrorKind::InvalidArgument, "components must be >= 1");
    for (int p : widths) require(p >= 1, ErrorKind::InvalidArgument, "widths must be >= 1");
    for (double b : bounds) require(b > 0.0, ErrorKind::InvalidArgument, "bounds must be positive");
    TrainConfig probe = train;
    probe.epochs = 1;
    probe.validate();
}

ExperimentConfig parse_experiment_config(std::istream& in, const std::string& source) {
    ExperimentConfig cfg;
    std::string section;
    std::set<std::pair<std::string, std::string>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string ctx = source + ":" + std::to_string(line_no);
        auto text = line;
        if (const auto hash = text.find('#'); hash != std::string::npos) text.erase(hash);
        const auto t = detail::trim(text);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') fail(ErrorKind::Parse, ctx + ": malformed section header");
            section = std::string(t.substr(1, t.size() - 2));
            if (section != "experiment" && section != "train" && section != "hyper")
                fail(ErrorKind::Parse, ctx + ": unknown section [" + section + "]");
            continue;
        }
        if (section.empty()) fail(ErrorKind::Parse, ctx + ": entry outside of a section");
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) fail(ErrorKind::Parse, ctx + ": expected 'key = value'");
        const std::string key(detail::trim(t.substr(0, eq)));
        if (!seen.insert({section, key}).second) fail(ErrorKind::Parse, ctx + ": duplicate key '" + key + "'");
        apply(cfg, section, key, detail::trim(t.substr(eq + 1)), ctx);
    }
    try {
        cfg.validate();
    } catch (const Error& e) {
        fail(ErrorKind::Parse, source + ": " + e.what());
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open '" + path + "' for reading");
    return parse_experiment_config(in, path);
}

int epochs_for_updates(long updates, int batch_size, std::size_t rows) {
    require(updates >= 1 && batch_size >= 1 && rows >= 1, ErrorKind::InvalidArgument,
            "updates, batch size and rows must be positive");
    const long per_epoch = static_cast<long>((rows + static_cast<std::size_t>(batch_size) - 1) /
                                             static_cast<std::size_t>(batch_size));
    return static_cast<int>(std::max(1L, (updates + per_epoch - 1) / per_epoch));
}

HyperGrid experiment_hyper_grid(const ExperimentConfig& cfg, std::size_t n, int available) {
    require(available >= 1, ErrorKind::InvalidArgument, "no eigenfunctions available");
    std::vector<int> js;
    for (int j : cfg.components) {
        const int capped = std::min(j, available);
        if (std::find(js.begin(), js.end(), capped) == js.end()) js.push_back(capped);
    }
    return HyperGrid::product(cfg.depths ? *cfg.depths : default_depths(n), js, cfg.widths, cfg.bounds);
}

BenchmarkResult run_benchmark(const ExperimentConfig& cfg) {
    cfg.validate();
    Source src;
    if (cfg.dgp) {
        src.spec = make_dgp(*cfg.dgp, cfg.reading);
        src.name = std::to_string(*cfg.dgp);
        std::vector<int> counts(static_cast<std::size_t>(src.spec->dim), cfg.grid_points);
        src.grid = std::make_shared<const SamplingGrid>(make_equispaced_grid(src.spec->dim, counts));
    } else {
        src.file = read_csv_file(cfg.input);
        src.name = std::filesystem::path(cfg.input).stem().string();
        require(src.file.labeled(), ErrorKind::InvalidArgument, "benchmark input must be fully labeled");
        const std::size_t largest = *std::max_element(cfg.sizes.begin(), cfg.sizes.end());
        require(largest + cfg.test_size <= src.file.observations.size(), ErrorKind::InvalidArgument,
                "input has " + std::to_string(src.file.observations.size()) +
                    " rows, fewer than the largest size plus test_size");
    }

    std::vector<Task> tasks;
    for (std::size_t s = 0; s < cfg.sizes.size(); ++s)
        for (int r = 0; r < cfg.replications; ++r) tasks.push_back({s, r});

    std::vector<std::vector<ReplicationRecord>> results(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                results[i] = run_task(cfg, src, tasks[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), tasks.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    BenchmarkResult out;
    // (n, method) -> per-replication records, in task order
    std::map<std::pair<std::size_t, std::string>, std::vector<const ReplicationRecord*>> groups;
    for (const auto& per_task : results)
        for (const auto& rec : per_task) {
            out.records.push_back(rec);
            groups[{rec.n, rec.method}].push_back(&rec);
        }
    for (const auto& [key, recs] : groups) {
        const auto m = static_cast<double>(recs.size());
        double mean = 0.0, runtime = 0.0;
        for (const auto* r : recs) mean += r->rate, runtime += r->runtime_s;
        mean /= m;
        double ss = 0.0;
        for (const auto* r : recs) ss += (r->rate - mean) * (r->rate - mean);
        const double se = recs.size() > 1 ? std::sqrt(ss / (m - 1.0)) / std::sqrt(m) : 0.0;
        out.rows.push_back({src.name, key.first, key.second, mean, se, runtime / m});
    }
    std::sort(out.rows.begin(), out.rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.dgp, a.n, a.method) < std::tie(b.dgp, b.n, b.method);
    });
    return out;
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << "dgp,n,method,rate,se,runtime_s\n";
    for (const auto& r : rows)
        out << r.dgp << ',' << r.n << ',' << r.method << ',' << detail::format_double(r.rate) << ','
            << detail::format_double(r.se) << ',' << detail::format_double(r.runtime_s) << '\n';
}

void write_results_csv_file(const std::string& path, const std::vector<ResultRow>& rows) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
    write_results_csv(out, rows);
    if (!out) fail(ErrorKind::Io, "failed writing '" + path + "'");
}

}  // namespace fdnn
