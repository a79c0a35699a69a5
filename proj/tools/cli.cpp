// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pen/compare.hpp"
#include "pen/errors.hpp"
#include "pen/evaluators.hpp"
#include "pen/fem.hpp"
#include "pen/io.hpp"
#include "pen/metrics.hpp"
#include "pen/model_io.hpp"
#include "pen/service.hpp"
#include "pen/simp_ref.hpp"
#include "pen/trainer.hpp"

namespace pen::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted.store(true); }

/// Installs SIGINT/SIGTERM handlers for the lifetime of the object.
class InterruptGuard {
public:
    InterruptGuard() {
        g_interrupted.store(false);
        prev_int_ = std::signal(SIGINT, on_signal);
        prev_term_ = std::signal(SIGTERM, on_signal);
    }
    ~InterruptGuard() {
        std::signal(SIGINT, prev_int_);
        std::signal(SIGTERM, prev_term_);
    }
    InterruptGuard(const InterruptGuard&) = delete;
    InterruptGuard& operator=(const InterruptGuard&) = delete;

private:
    void (*prev_int_)(int) = SIG_DFL;
    void (*prev_term_)(int) = SIG_DFL;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// --seed, then the config's own seed, then PEN_SEED, then 0.
std::uint64_t env_seed(std::uint64_t fallback) {
    const char* s = std::getenv("PEN_SEED");
    if (s == nullptr || *s == '\0') return fallback;
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used != std::string(s).size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw UsageError(std::string("PEN_SEED is not an unsigned integer: '") + s + "'");
    }
}

int default_level(const ModelManifest& m) { return std::min(4, m.architecture.max_level); }

// ---------------------------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string config;
    std::string resume;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> max_level;
    std::optional<int> jobs;
    std::optional<int> max_batches_per_level;
    int log_every = 10;
    bool quiet = false;
};

void write_history(const Trainer& t, const fs::path& out) {
    io::atomic_write(out / "history.csv", [&](std::ostream& o) { t.history().write_csv(o); });
    io::atomic_write(out / "samples.csv", [&](std::ostream& o) { t.history().write_sample_csv(o); });
    io::atomic_write(out / "transitions.csv", [&](std::ostream& o) { t.history().write_transitions_csv(o); });
}

int train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
    std::optional<Trainer> trainer;
    fs::path out_dir = a.out;
    if (!a.resume.empty()) {
        if (!fs::is_directory(a.resume)) throw UsageError("checkpoint directory not found: " + a.resume);
        trainer.emplace(Trainer::resume(a.resume));
        if (out_dir.empty()) out_dir = fs::path(a.resume).lexically_normal().parent_path();
        if (out_dir.empty()) out_dir = ".";
        err << "resumed " << a.resume << " at batch " << trainer->batches() << ", level " << trainer->level() << "\n";
    } else {
        if (a.config.empty()) throw UsageError("train needs --config or --resume");
        if (!fs::is_regular_file(a.config)) throw UsageError("config file not found: " + a.config);
        json j;
        try {
            j = io::read_json(a.config);
        } catch (const LoadError& e) {
            throw UsageError(e.what());
        }
        if (!j.is_object()) throw ConfigError("", "training config must be a JSON object");
        if (a.seed) {
            j["seed"] = *a.seed;
        } else if (!j.contains("seed")) {
            j["seed"] = env_seed(0);
        }
        if (a.max_level) j["max_level"] = *a.max_level;
        if (a.jobs) j["jobs"] = *a.jobs;
        if (a.max_batches_per_level) j["max_batches_per_level"] = *a.max_batches_per_level;
        auto config = TrainingConfig::from_json(j);
        if (out_dir.empty()) out_dir = "run";
        fs::create_directories(out_dir);
        io::atomic_write_text(out_dir / "config.json", config.to_json().dump(2) + "\n");
        trainer.emplace(std::move(config));
    }
    fs::create_directories(out_dir);
    const fs::path ckpt = out_dir / "checkpoint";

    const InterruptGuard guard;
    double ema = 0.0;
    bool first = true;
    Trainer::Callbacks cb;
    cb.on_batch = [&](const BatchRecord& r) {
        ema = first ? r.j : 0.9 * ema + 0.1 * r.j;
        first = false;
        if (!a.quiet && a.log_every > 0 && r.b % a.log_every == 0) {
            err << "b=" << r.b << " level=" << r.lambda << std::setprecision(5) << " J=" << r.j << " ema=" << ema
                << " c=" << r.c_mean << " M=" << r.m_mean << " F=" << r.f_mean << " P=" << r.p_mean << " zeta=" << r.zeta
                << " lr=" << r.lr << "\n";
        }
    };
    cb.on_level = [&](int level) {
        if (!a.quiet) err << "level " << level << " (d = " << Level{level, trainer->config().d_inp}.d() << ")\n";
    };
    cb.should_stop = [] { return g_interrupted.load(); };

    trainer->run(cb, ckpt);
    write_history(*trainer, out_dir);
    if (!trainer->finished()) {
        err << "interrupted after batch " << trainer->batches() << "; continue with --resume " << ckpt.string() << "\n";
        return kExitFailure;
    }
    trainer->save_model(out_dir / "model.pen");
    out << "trained " << trainer->level() << " level(s) in " << trainer->batches() << " batches; model "
        << (out_dir / "model.pen").string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------
// predict

struct PredictArgs {
    std::string model;
    std::vector<int> node;
    std::optional<double> fx;
    std::optional<double> fy;
    std::string bc_file;
    double fill = 0.5;
    std::optional<int> level;
    std::string out;
    std::string png;
    int scale = 0;
};

void add_load(BoundaryConditionSet& bc, int nx, int ny, double fx, double fy, const std::string& what) {
    const int d = static_cast<int>(bc.rsx.rows()) - 1;
    if (nx < 0 || nx > d || ny < 0 || ny > d) {
        throw UsageError(what + ": node (" + std::to_string(nx) + ", " + std::to_string(ny) + ") outside 0.." +
                         std::to_string(d));
    }
    if (bc.is_fixed(ny, nx)) throw UsageError(what + ": node (" + std::to_string(nx) + ", " + std::to_string(ny) + ") is clamped");
    bc.rsx(ny, nx) += fx;
    bc.rsy(ny, nx) += fy;
}

BoundaryConditionSet read_bc_file(const fs::path& path, int d_inp) {
    json j;
    try {
        j = io::read_json(path);
    } catch (const LoadError& e) {
        throw UsageError(e.what());
    }
    if (j.contains("rk")) {
        const FlatBoundaryConditions flat{j.at("rk").get<std::vector<double>>(), j.at("rs").get<std::vector<double>>()};
        auto bc = unflatten_bcs(flat);
        if (bc.rsx.rows() != d_inp + 1) throw UsageError(path.string() + ": boundary conditions do not match d_inp");
        return bc;
    }
    if (!j.contains("loads") || !j["loads"].is_array()) throw UsageError(path.string() + ": needs \"loads\" or \"rk\"/\"rs\"");
    auto bc = BoundaryConditionSet::left_edge_clamp(d_inp);
    int i = 0;
    for (const auto& l : j["loads"]) {
        const std::string what = path.string() + ": loads[" + std::to_string(i++) + "]";
        try {
            add_load(bc, l.at("node_x").get<int>(), l.at("node_y").get<int>(), l.value("fx", 0.0), l.value("fy", 0.0), what);
        } catch (const json::exception& e) {
            throw UsageError(what + ": " + e.what());
        }
    }
    return bc;
}

int predict(const PredictArgs& a, std::ostream& out, std::ostream& err) {
    const auto loaded = load_model(a.model);
    const auto& m = loaded.manifest;
    const int d_inp = m.d_inp();

    BoundaryConditionSet bc = BoundaryConditionSet::left_edge_clamp(d_inp);
    if (!a.bc_file.empty()) {
        if (!a.node.empty() || a.fx || a.fy) throw UsageError("--bc-file excludes --node/--fx/--fy");
        bc = read_bc_file(a.bc_file, d_inp);
    } else {
        if (a.node.size() != 2) throw UsageError("--node X,Y is required without --bc-file");
        add_load(bc, a.node[0], a.node[1], a.fx.value_or(0.0), a.fy.value_or(0.0), "--node");
    }
    if (bc.rsx.isZero(0.0) && bc.rsy.isZero(0.0)) throw UsageError("at least one non-zero force is required");

    double fill = a.fill;
    if (fill < 0.2 || fill > 0.8) {
        const double clamped = std::clamp(fill, 0.2, 0.8);
        err << "warning: fill " << fill << " lies outside the training range [0.2, 0.8]; using " << clamped << "\n";
        fill = clamped;
    }
    const int level = a.level.value_or(default_level(m));
    if (level < 1 || level > m.architecture.max_level) {
        throw UsageError("--level must lie in 1.." + std::to_string(m.architecture.max_level));
    }
    if (level > m.trained_levels) {
        err << "warning: level " << level << " was not trained (model has " << m.trained_levels << " trained level(s))\n";
    }

    const InputSample sample{bc, fill};
    const auto t0 = Clock::now();
    const DensityField x = loaded.predictor.predict(sample, level);
    const double ms = 1e3 * seconds_since(t0);
    const fem::FemProblem problem(x.level(), bc);
    const auto ev = eval::evaluate_geometry(x.values(), problem, fill, eval::QualityCoefficients{});

    if (!a.out.empty()) io::write_geometry(x, a.out);
    if (!a.png.empty()) io::write_png(x, a.png, a.scale > 0 ? a.scale : std::max(1, 512 / x.d()));

    out << std::setprecision(6) << "level " << level << " (" << x.d() << "x" << x.d() << "), fill " << x.fill_degree()
        << " (target " << fill << "), " << std::setprecision(3) << ms << " ms\n"
        << std::setprecision(6) << "c " << ev.losses.c << "  M " << ev.losses.m << "  F " << ev.losses.f << "  P "
        << ev.losses.p << "  f_Q " << ev.quality << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------
// validate

int validate(const std::string& model, const std::string& data, const std::string& json_out, std::ostream& out,
             std::ostream& err) {
    if (!fs::is_regular_file(data)) throw UsageError("dataset not found: " + data);
    const auto records = simp::read_validation_set(fs::path(data));
    if (records.empty()) throw UsageError("dataset is empty: " + data);
    const auto loaded = load_model(model);
    const auto report = compare_with_reference(loaded.predictor, records);
    out << report.table();
    if (!json_out.empty()) io::atomic_write_text(json_out, report.to_json().dump(2) + "\n");

    std::vector<std::string> broken;
    const double k = report.kappa();
    if (!(k >= 0.0 && k <= 1.0)) broken.push_back("kappa = " + std::to_string(k) + " outside [0, 1]");
    for (std::size_t i = 0; i < report.samples.size(); ++i) {
        const auto& s = report.samples[i];
        const std::string at = "sample " + std::to_string(i) + ": ";
        if (!(s.mse >= 0.0 && s.mse <= 1.0)) broken.push_back(at + "mse outside [0, 1]");
        if (!(s.mae >= 0.0 && s.mae <= 1.0)) broken.push_back(at + "mae outside [0, 1]");
        if (!(s.kappa001 >= 0.0 && s.kappa001 <= 1.0)) broken.push_back(at + "kappa_0.01 outside [0, 1]");
        if (!(std::isfinite(s.compliance_ratio) && s.compliance_ratio > 0.0)) {
            broken.push_back(at + "compliance ratio not positive and finite");
        }
    }
    for (const auto& b : broken) err << "invariant violated: " << b << "\n";
    return broken.empty() ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------------------------
// compare

struct CompareArgs {
    std::string model;
    std::optional<int> level;
    int n = 3;
    std::optional<std::uint64_t> seed;
    double train_seconds = 0.0;
    double r_min = 3.0;
};

int compare(const CompareArgs& a, std::ostream& out, std::ostream& err) {
    if (a.n < 1) throw UsageError("--n must be >= 1");
    const auto loaded = load_model(a.model);
    const auto& m = loaded.manifest;
    const int level = a.level.value_or(default_level(m));
    if (level < 1 || level > m.architecture.max_level) {
        throw UsageError("--level must lie in 1.." + std::to_string(m.architecture.max_level));
    }
    Rng rng(a.seed ? *a.seed : env_seed(0));
    std::vector<double> tp;
    std::vector<double> tto;
    for (int i = 0; i < a.n; ++i) {
        const auto sample = random_sample(rng, m.d_inp());
        auto t0 = Clock::now();
        (void)loaded.predictor.predict(sample, level);
        tp.push_back(seconds_since(t0));

        simp::SimpConfig cfg;
        cfg.level = Level{level, m.d_inp()};
        cfg.volfrac = sample.m_tar;
        cfg.r_min = a.r_min;
        t0 = Clock::now();
        const auto r = simp::optimize(sample.bc, cfg);
        tto.push_back(seconds_since(t0));
        err << "sample " << i << ": predict " << tp.back() << " s, reference " << tto.back() << " s ("
            << r.iterations << " iterations)\n";
    }
    const auto p = metrics::stats(tp);
    const auto o = metrics::stats(tto);
    const int d = Level{level, m.d_inp()}.d();
    out << std::setprecision(6) << "level " << level << " (" << d << "x" << d << "), " << a.n << " sample(s)\n"
        << "t_p   " << p.mean << " s (sd " << p.sd << ")\n"
        << "t_TO  " << o.mean << " s (sd " << o.sd << ")\n"
        << "speedup " << o.mean / p.mean << "\n";
    if (a.train_seconds > 0.0) {
        if (o.mean > p.mean) {
            out << "break-even after " << metrics::break_even(a.train_seconds, p.mean, o.mean) << " predictions\n";
        } else {
            out << "no break-even: prediction is not faster than the reference\n";
        }
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------
// generate-data, serve, export, dump-stiffness

struct GenerateArgs {
    int n = 0;
    std::optional<std::uint64_t> seed;
    int level = 1;
    int d_inp = 8;
    std::string out;
    int jobs = 1;
    double r_min = 3.0;
    int max_iterations = 200;
};

int generate(const GenerateArgs& a, std::ostream& out, std::ostream& err) {
    if (a.n < 1) throw UsageError("--n must be >= 1");
    if (a.level < 1 || a.d_inp < 3 || a.jobs < 1) throw UsageError("--level, --d-inp or --jobs out of range");
    simp::GenerationOptions opts;
    opts.level = a.level;
    opts.d_inp = a.d_inp;
    opts.jobs = a.jobs;
    opts.simp.r_min = a.r_min;
    opts.simp.max_iterations = a.max_iterations;
    opts.log = [&err](const std::string& s) { err << s << "\n"; };
    const auto seed = a.seed ? *a.seed : env_seed(0);
    const auto t0 = Clock::now();
    const auto records = simp::generate_validation_set(a.n, seed, opts);
    simp::write_validation_set(records, fs::path(a.out));
    out << "wrote " << records.size() << " samples to " << a.out << " in " << std::setprecision(4) << seconds_since(t0)
        << " s\n";
    return kExitOk;
}

int serve(const std::string& model, const std::string& host, int port, bool watch, int watch_ms, int max_concurrent,
          std::ostream& out, std::ostream& err) {
    service::ServiceOptions opts;
    opts.max_concurrent_inferences = max_concurrent;
    opts.log = [&err](const std::string& s) { err << s << "\n"; };
    service::Service svc(opts);
    svc.load(model);
    service::Server server(svc);
    const int bound = server.bind(host, port);
    if (watch) server.watch(model, std::chrono::milliseconds(watch_ms));
    out << "listening on http://" << host << ":" << bound << std::endl;

    const InterruptGuard guard;
    std::jthread stopper([&server](std::stop_token st) {
        while (!st.stop_requested() && !g_interrupted.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
    });
    server.listen();
    stopper.request_stop();
    return kExitOk;
}

int export_model(const std::string& model, const std::string& path, std::ostream& out) {
    const auto loaded = load_model(model);
    json tensors = json::array();
    for (const auto& p : loaded.predictor.parameters()) {
        tensors.push_back({{"name", p.name},
                           {"shape", p.tensor.shape()},
                           {"values", std::vector<double>(p.tensor.data().begin(), p.tensor.data().end())}});
    }
    json manifest = loaded.manifest.summary();
    manifest["architecture"] = loaded.manifest.architecture.to_json();
    manifest["init_scheme"] = loaded.manifest.init_scheme;
    io::atomic_write_text(path, json{{"manifest", manifest}, {"tensors", tensors}}.dump() + "\n");
    out << "exported " << tensors.size() << " tensors (" << loaded.predictor.parameter_count() << " parameters) to "
        << path << "\n";
    return kExitOk;
}

int dump_stiffness(int d_inp, int level, double density, const std::string& path, std::ostream& out) {
    if (d_inp < 2 || level < 1 || !(density > 0.0 && density <= 1.0)) throw UsageError("invalid mesh or density");
    const Level lv{level, d_inp};
    const fem::FemProblem problem(lv, BoundaryConditionSet::left_edge_clamp(d_inp));
    const auto k = fem::assemble_stiffness(DensityField::uniform(lv, density), problem);
    io::atomic_write(path, [&](std::ostream& o) { fem::write_matrix_market(k, o); });
    out << "wrote " << k.rows() << "x" << k.cols() << " stiffness matrix (" << k.nonZeros() << " entries) to " << path
        << "\n";
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Topology prediction with a trained multi-level network", "pen"};
    app.require_subcommand(1);

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "Train a predictor");
    auto* config_opt = train_cmd->add_option("--config", ta.config, "Training config (JSON)");
    auto* resume_opt = train_cmd->add_option("--resume", ta.resume, "Continue from a checkpoint directory");
    train_cmd->add_option("--out", ta.out, "Output directory (default: run, or the checkpoint's parent)");
    auto* seed_opt = train_cmd->add_option("--seed", ta.seed, "RNG seed (overrides the config; PEN_SEED is the fallback)");
    auto* level_opt = train_cmd->add_option("--max-level", ta.max_level, "Last level to train");
    auto* jobs_opt = train_cmd->add_option("--jobs", ta.jobs, "Parallel FEM evaluations");
    auto* cap_opt = train_cmd->add_option("--max-batches-per-level", ta.max_batches_per_level, "Batch cap per level");
    train_cmd->add_option("--log-every", ta.log_every, "Progress line every N batches (0: off)");
    train_cmd->add_flag("--quiet", ta.quiet, "No progress output");
    config_opt->excludes(resume_opt);
    for (auto* o : {seed_opt, level_opt, jobs_opt, cap_opt}) o->excludes(resume_opt);

    PredictArgs pa;
    auto* predict_cmd = app.add_subcommand("predict", "Predict a geometry");
    predict_cmd->add_option("--model", pa.model, "Model file")->required();
    predict_cmd->add_option("--node", pa.node, "Loaded node X,Y (column from the clamped edge, row from the top)")
        ->expected(2)
        ->delimiter(',');
    predict_cmd->add_option("--fx", pa.fx, "Horizontal force");
    predict_cmd->add_option("--fy", pa.fy, "Vertical force (positive down the rows)");
    predict_cmd->add_option("--bc-file", pa.bc_file, "JSON with \"loads\" or flattened \"rk\"/\"rs\"");
    predict_cmd->add_option("--fill", pa.fill, "Target fill degree in [0.2, 0.8]");
    predict_cmd->add_option("--level", pa.level, "Output level (default: min(4, model levels))");
    predict_cmd->add_option("--out", pa.out, "Geometry JSON output");
    predict_cmd->add_option("--png", pa.png, "PNG output");
    predict_cmd->add_option("--scale", pa.scale, "Pixels per element in the PNG");

    std::string v_model, v_data, v_json;
    auto* validate_cmd = app.add_subcommand("validate", "Compare predictions with a reference dataset");
    validate_cmd->add_option("--model", v_model, "Model file")->required();
    validate_cmd->add_option("--data", v_data, "Dataset (JSON lines)")->required();
    validate_cmd->add_option("--json", v_json, "Write the report as JSON");

    CompareArgs ca;
    auto* compare_cmd = app.add_subcommand("compare", "Time prediction against the reference optimizer");
    compare_cmd->add_option("--model", ca.model, "Model file")->required();
    compare_cmd->add_option("--level", ca.level, "Level (default: min(4, model levels))");
    compare_cmd->add_option("--n", ca.n, "Number of random load cases");
    compare_cmd->add_option("--seed", ca.seed, "RNG seed");
    compare_cmd->add_option("--train-seconds", ca.train_seconds, "Training time for the break-even count");
    compare_cmd->add_option("--r-min", ca.r_min, "Reference filter radius in elements");

    GenerateArgs ga;
    auto* gen_cmd = app.add_subcommand("generate-data", "Build a reference dataset with the SIMP optimizer");
    gen_cmd->add_option("--n", ga.n, "Number of samples")->required();
    gen_cmd->add_option("--seed", ga.seed, "Dataset seed");
    gen_cmd->add_option("--level", ga.level, "Level of the reference designs");
    gen_cmd->add_option("--d-inp", ga.d_inp, "Level-1 mesh size");
    gen_cmd->add_option("--out", ga.out, "Output file (JSON lines)")->required();
    gen_cmd->add_option("--jobs", ga.jobs, "Worker threads");
    gen_cmd->add_option("--r-min", ga.r_min, "Filter radius in elements");
    gen_cmd->add_option("--max-iterations", ga.max_iterations, "Optimizer iteration cap");

    std::string s_model, s_host = "127.0.0.1";
    int s_port = 8080, s_watch_ms = 1000, s_concurrent = 4;
    bool s_watch = false;
    auto* serve_cmd = app.add_subcommand("serve", "HTTP inference service");
    serve_cmd->add_option("--model", s_model, "Model file")->required();
    serve_cmd->add_option("--host", s_host, "Bind address");
    serve_cmd->add_option("--port", s_port, "Port (0: any free port)");
    serve_cmd->add_flag("--watch", s_watch, "Reload the model file when it changes");
    serve_cmd->add_option("--watch-interval", s_watch_ms, "Polling interval in ms");
    serve_cmd->add_option("--max-concurrent", s_concurrent, "Concurrent inferences");

    std::string e_model, e_out;
    auto* export_cmd = app.add_subcommand("export", "Write the model as JSON");
    export_cmd->add_option("--model", e_model, "Model file")->required();
    export_cmd->add_option("--out", e_out, "Output JSON")->required();

    int k_d = 8, k_level = 1;
    double k_density = 1.0;
    std::string k_out;
    auto* dump_cmd = app.add_subcommand("dump-stiffness", "Matrix Market dump of K for a uniform clamped mesh");
    dump_cmd->add_option("--d-inp", k_d, "Level-1 mesh size");
    dump_cmd->add_option("--level", k_level, "Level");
    dump_cmd->add_option("--density", k_density, "Uniform element density");
    dump_cmd->add_option("--out", k_out, "Output file")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << "run 'pen --help' for usage\n";
        return kExitUsage;
    }

    try {
        if (*train_cmd) return train(ta, out, err);
        if (*predict_cmd) return predict(pa, out, err);
        if (*validate_cmd) return validate(v_model, v_data, v_json, out, err);
        if (*compare_cmd) return compare(ca, out, err);
        if (*gen_cmd) return generate(ga, out, err);
        if (*serve_cmd) return serve(s_model, s_host, s_port, s_watch, s_watch_ms, s_concurrent, out, err);
        if (*export_cmd) return export_model(e_model, e_out, out);
        if (*dump_cmd) return dump_stiffness(k_d, k_level, k_density, k_out, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "config error: " << (e.key().empty() ? std::string("(root)") : e.key()) << ": " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace pen::cli
