#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "crgimsc/dataset.hpp"
#include "crgimsc/graph.hpp"
#include "crgimsc/metrics.hpp"
#include "crgimsc/solver.hpp"
#include "crgimsc/types.hpp"

namespace crgimsc {

struct SyntheticSpec {
    Index n_per_cluster = 50;
    Index clusters = 3;
    Index views = 3;
    std::vector<Index> feature_dims;
    Real separation = 10.0;
};

struct GridSpec {
    std::vector<Real> alphas;
    std::vector<Real> betas;
};

struct ExperimentConfig {
    std::string manifest;                  // dataset from disk, or ...
    std::optional<SyntheticSpec> synthetic; // ... synthesized in memory
    std::vector<Real> missing_rates{0.0};
    int repeats = 10;
    SolverConfig solver;
    GraphConfig graph;
    std::optional<GridSpec> grid;
    std::string output_dir = "out";
    std::uint64_t base_seed = 0;
    int threads = 1;

    void validate() const {
        if (manifest.empty() == !synthetic.has_value())
            throw std::runtime_error("config needs exactly one of dataset.manifest or dataset.synthetic");
        if (repeats < 1) throw std::runtime_error("repeats must be at least 1");
        if (missing_rates.empty()) throw std::runtime_error("missing_rates must be non-empty");
        for (Real r : missing_rates)
            if (!(r >= 0.0 && r < 1.0)) throw std::runtime_error("missing rates must lie in [0, 1)");
        if (grid && (grid->alphas.empty() || grid->betas.empty()))
            throw std::runtime_error("grid mode needs non-empty alpha and beta lists");
    }
};

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        if (d.contains("manifest")) c.manifest = d["manifest"].get<std::string>();
        if (d.contains("synthetic")) {
            const auto& s = d["synthetic"];
            SyntheticSpec spec;
            spec.n_per_cluster = s.value("n_per_cluster", 50);
            spec.clusters = s.value("clusters", 3);
            spec.views = s.value("views", 3);
            spec.separation = s.value("separation", 10.0);
            if (s.contains("feature_dims"))
                for (const auto& dim : s["feature_dims"]) spec.feature_dims.push_back(dim.get<Index>());
            c.synthetic = spec;
        }
    }
    if (j.contains("missing_rates")) c.missing_rates = j["missing_rates"].get<std::vector<Real>>();
    c.repeats = j.value("repeats", 10);
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        c.solver.alpha = s.value("alpha", 10.0);
        c.solver.beta = s.value("beta", 0.1);
        c.solver.k = s.value("k", 2);
        c.solver.max_iters = s.value("max_iters", 300);
        c.solver.rel_tol = s.value("rel_tol", 1e-6);
        c.solver.eps_floor = s.value("eps_floor", 1e-10);
        c.solver.nmf_iters = s.value("nmf_iters", 200);
    }
    if (j.contains("graph")) {
        const auto& g = j["graph"];
        if (g.contains("kernel")) c.graph.kernel = kernel_from_string(g["kernel"].get<std::string>());
        c.graph.neighbors = g.value("neighbors", 5);
    }
    if (j.contains("grid")) {
        GridSpec grid;
        grid.alphas = j["grid"]["alphas"].get<std::vector<Real>>();
        grid.betas = j["grid"]["betas"].get<std::vector<Real>>();
        c.grid = grid;
    }
    c.output_dir = j.value("output_dir", std::string("out"));
    c.base_seed = j.value("base_seed", std::uint64_t{0});
    c.threads = j.value("threads", 1);
    return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    in >> j;
    return experiment_config_from_json(j);
}

struct RunTrace {
    std::vector<Real> objective;
    std::vector<Real> nmi;
    bool converged = false;
    int iterations = 0;
};

// One configured (missing_rate, alpha, beta) combination.
struct SweepCell {
    Real missing_rate = 0;
    Real alpha = 0;
    Real beta = 0;
    bool ok = false;
    std::string error;
    std::vector<EvalReport> reports;  // one per repeat
    std::vector<RunTrace> traces;     // one per repeat
    std::vector<Real> wall_clock_s;   // one per repeat; kept out of results.json
    EvalSummary summary;
};

struct SweepResult {
    std::uint64_t base_seed = 0;
    int repeats = 0;
    bool grid_mode = false;
    std::vector<SweepCell> cells;

    bool all_ok() const {
        for (const auto& c : cells)
            if (!c.ok) return false;
        return true;
    }
};

namespace detail {

inline void run_tasks(std::size_t count, int threads, const std::function<void(std::size_t)>& task) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min<int>(threads, static_cast<int>(count));
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < count;) task(i);
        });
    for (auto& th : pool) th.join();
}

} // namespace detail

// Base dataset for a sweep: loaded from a manifest or synthesized from the
// spec. Synthesis is seeded with base_seed so identical configs reproduce the
// exact same data.
inline MultiViewDataset materialize_dataset(const ExperimentConfig& config) {
    if (!config.manifest.empty()) return load_dataset(config.manifest);
    const auto& s = *config.synthetic;
    std::vector<Index> dims = s.feature_dims;
    if (dims.empty()) dims.assign(static_cast<std::size_t>(s.views), 8);
    if (static_cast<Index>(dims.size()) != s.views)
        throw std::runtime_error("synthetic feature_dims must list one dimension per view");
    return synthesize_gaussian_multiview(s.n_per_cluster, s.clusters, s.views, dims, s.separation,
                                         config.base_seed);
}

// Protocol for one cell: for each repeat r, mask with seed base_seed + r,
// rebuild the graphs over existing samples, fit, assign, evaluate. A nonzero
// rate requires a fully present base dataset; rate 0 keeps the dataset's own
// presence pattern (which is how datasets with inherent missing views run).
inline SweepCell run_cell(const MultiViewDataset& base, Real rate, Real alpha, Real beta,
                          const ExperimentConfig& config) {
    SweepCell cell;
    cell.missing_rate = rate;
    cell.alpha = alpha;
    cell.beta = beta;
    if (!base.labels) {
        cell.error = "dataset has no labels to evaluate against";
        return cell;
    }
    try {
        for (int r = 0; r < config.repeats; ++r) {
            const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(r);
            const auto start = std::chrono::steady_clock::now();
            MultiViewDataset masked =
                rate > 0 ? apply_mask(base, generate_mask(base.n(), base.view_count(), rate, seed)) : base;
            const GraphSet graphs = build_graphs(masked, config.graph);
            SolverConfig scfg = config.solver;
            scfg.alpha = alpha;
            scfg.beta = beta;
            scfg.seed = seed;
            const SolverState state = fit(masked, graphs, scfg, &*base.labels);
            cell.reports.push_back(evaluate(*base.labels, assign_clusters(state.U)));
            RunTrace trace;
            trace.objective = state.objective_trace;
            trace.nmi = state.nmi_trace;
            trace.converged = state.converged;
            trace.iterations = state.iteration;
            cell.traces.push_back(std::move(trace));
            cell.wall_clock_s.push_back(std::chrono::duration<Real>(std::chrono::steady_clock::now() - start).count());
        }
        cell.summary = aggregate(cell.reports);
        cell.ok = true;
    } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
    }
    return cell;
}

inline SweepResult run_sweep(const ExperimentConfig& config) {
    config.validate();
    const MultiViewDataset base = materialize_dataset(config);
    SweepResult result;
    result.base_seed = config.base_seed;
    result.repeats = config.repeats;
    result.cells.resize(config.missing_rates.size());
    detail::run_tasks(config.missing_rates.size(), config.threads, [&](std::size_t i) {
        result.cells[i] = run_cell(base, config.missing_rates[i], config.solver.alpha, config.solver.beta, config);
    });
    return result;
}

// Full alpha x beta cross-product at the first configured missing rate.
inline SweepResult run_param_grid(const ExperimentConfig& config) {
    config.validate();
    if (!config.grid) throw std::runtime_error("config has no parameter grid");
    const MultiViewDataset base = materialize_dataset(config);
    const Real rate = config.missing_rates.front();
    SweepResult result;
    result.base_seed = config.base_seed;
    result.repeats = config.repeats;
    result.grid_mode = true;
    const auto& alphas = config.grid->alphas;
    const auto& betas = config.grid->betas;
    result.cells.resize(alphas.size() * betas.size());
    detail::run_tasks(result.cells.size(), config.threads, [&](std::size_t i) {
        const Real alpha = alphas[i / betas.size()];
        const Real beta = betas[i % betas.size()];
        result.cells[i] = run_cell(base, rate, alpha, beta, config);
    });
    return result;
}

inline nlohmann::json metric_stat_to_json(const MetricStat& s) {
    return {{"mean", s.mean}, {"std", s.std}};
}

inline nlohmann::json summary_to_json(const EvalSummary& s) {
    return {{"nmi", metric_stat_to_json(s.nmi)},
            {"acc", metric_stat_to_json(s.accuracy)},
            {"fscore", metric_stat_to_json(s.f_score)},
            {"precision", metric_stat_to_json(s.precision)}};
}

// Serialized view of a SweepResult. Per-run wall clock and full traces stay
// out so results.json is byte-identical across invocations; traces live in
// their own CSVs and timings in timings.csv.
inline nlohmann::json sweep_result_to_json(const SweepResult& result) {
    nlohmann::json j;
    j["base_seed"] = result.base_seed;
    j["repeats"] = result.repeats;
    j["grid_mode"] = result.grid_mode;
    j["cells"] = nlohmann::json::array();
    for (const auto& cell : result.cells) {
        nlohmann::json cj;
        cj["missing_rate"] = cell.missing_rate;
        cj["alpha"] = cell.alpha;
        cj["beta"] = cell.beta;
        cj["ok"] = cell.ok;
        cj["error"] = cell.error;
        cj["runs"] = nlohmann::json::array();
        for (std::size_t r = 0; r < cell.reports.size(); ++r) {
            const auto& rep = cell.reports[r];
            cj["runs"].push_back({{"nmi", rep.nmi},
                                  {"acc", rep.accuracy},
                                  {"fscore", rep.f_score},
                                  {"precision", rep.precision},
                                  {"converged", cell.traces[r].converged},
                                  {"iterations", cell.traces[r].iterations}});
        }
        if (cell.ok) cj["summary"] = summary_to_json(cell.summary);
        j["cells"].push_back(std::move(cj));
    }
    return j;
}

inline SweepResult sweep_result_from_json(const nlohmann::json& j) {
    SweepResult result;
    result.base_seed = j.at("base_seed").get<std::uint64_t>();
    result.repeats = j.at("repeats").get<int>();
    result.grid_mode = j.value("grid_mode", false);
    for (const auto& cj : j.at("cells")) {
        SweepCell cell;
        cell.missing_rate = cj.at("missing_rate").get<Real>();
        cell.alpha = cj.at("alpha").get<Real>();
        cell.beta = cj.at("beta").get<Real>();
        cell.ok = cj.at("ok").get<bool>();
        cell.error = cj.at("error").get<std::string>();
        for (const auto& rj : cj.at("runs")) {
            EvalReport rep;
            rep.nmi = rj.at("nmi").get<Real>();
            rep.accuracy = rj.at("acc").get<Real>();
            rep.f_score = rj.at("fscore").get<Real>();
            rep.precision = rj.at("precision").get<Real>();
            cell.reports.push_back(rep);
            RunTrace trace;
            trace.converged = rj.at("converged").get<bool>();
            trace.iterations = rj.at("iterations").get<int>();
            cell.traces.push_back(std::move(trace));
        }
        if (cell.ok) cell.summary = aggregate(cell.reports);
        result.cells.push_back(std::move(cell));
    }
    return result;
}

// Equality on the serialized view (traces and wall clock excluded).
inline bool sweep_results_equal(const SweepResult& a, const SweepResult& b) {
    return sweep_result_to_json(a) == sweep_result_to_json(b);
}

// Cell with the highest mean NMI; first in configuration order on ties.
inline const SweepCell* best_cell(const SweepResult& result) {
    const SweepCell* best = nullptr;
    for (const auto& cell : result.cells)
        if (cell.ok && (!best || cell.summary.nmi.mean > best->summary.nmi.mean)) best = &cell;
    return best;
}

inline std::string format_rate(Real rate) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", rate);
    return buf;
}

// traces/run_<rate>_<repeat>.csv with columns iteration,objective[,nmi];
// grid results add an _a<alpha>_b<beta> suffix so cells do not collide.
inline void export_traces(const SweepResult& result, const std::string& dir) {
    const auto trace_dir = std::filesystem::path(dir) / "traces";
    std::filesystem::create_directories(trace_dir);
    for (const auto& cell : result.cells) {
        for (std::size_t r = 0; r < cell.traces.size(); ++r) {
            std::string name = "run_" + format_rate(cell.missing_rate) + "_" + std::to_string(r);
            if (result.grid_mode)
                name += "_a" + format_rate(cell.alpha) + "_b" + format_rate(cell.beta);
            std::ofstream out(trace_dir / (name + ".csv"));
            if (!out) throw std::runtime_error("cannot write trace file in " + trace_dir.string());
            const auto& trace = cell.traces[r];
            const bool with_nmi = !trace.nmi.empty();
            out << (with_nmi ? "iteration,objective,nmi\n" : "iteration,objective\n");
            for (std::size_t t = 0; t < trace.objective.size(); ++t) {
                out << t + 1 << ',' << format_real(trace.objective[t]);
                if (with_nmi) out << ',' << format_real(trace.nmi[t]);
                out << '\n';
            }
        }
    }
}

// NMI mean surface over the grid, one row per alpha, one column per beta.
inline void write_nmi_grid_csv(const SweepResult& result, const GridSpec& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write grid csv: " + path);
    out << "alpha\\beta";
    for (Real b : grid.betas) out << ',' << format_rate(b);
    out << '\n';
    for (std::size_t i = 0; i < grid.alphas.size(); ++i) {
        out << format_rate(grid.alphas[i]);
        for (std::size_t jj = 0; jj < grid.betas.size(); ++jj) {
            const auto& cell = result.cells[i * grid.betas.size() + jj];
            out << ',' << (cell.ok ? format_real(cell.summary.nmi.mean) : "nan");
        }
        out << '\n';
    }
}

inline void write_timings_csv(const SweepResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write timings csv: " + path);
    out << "missing_rate,alpha,beta,repeat,seconds\n";
    for (const auto& cell : result.cells)
        for (std::size_t r = 0; r < cell.wall_clock_s.size(); ++r)
            out << format_rate(cell.missing_rate) << ',' << format_rate(cell.alpha) << ','
                << format_rate(cell.beta) << ',' << r << ',' << format_real(cell.wall_clock_s[r]) << '\n';
}

inline void write_results(const SweepResult& result, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream out(std::filesystem::path(dir) / "results.json");
    if (!out) throw std::runtime_error("cannot write results.json in " + dir);
    out << sweep_result_to_json(result).dump(2) << '\n';
    write_timings_csv(result, (std::filesystem::path(dir) / "timings.csv").string());
}

} // namespace crgimsc
