// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include "pen/trainer.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "pen/checksum.hpp"
#include "pen/errors.hpp"
#include "pen/io.hpp"
#include "pen/model_io.hpp"
#include "pen/nn/ops.hpp"

namespace pen {
namespace fs = std::filesystem;

namespace {

constexpr int kMtarSteps = 61;  // 0.20, 0.21, ..., 0.80
constexpr char kAdamMagic[8] = {'P', 'E', 'N', 'A', 'D', 'A', 'M', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "alpha",       "beta",       "gamma",      "delta",   "zeta_max",         "eta0",
        "d_inp",       "E",          "nu",         "F_k",     "p",                "r_min",
        "force_mag",   "x_min",      "sigma2",     "batch_sizes", "max_level",    "seed",
        "checkpoint_every", "max_batches_per_level", "jobs", "checkerboard_mode", "architecture"};
    return keys;
}

template <typename T>
T read_key(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(key, std::string("config key '") + key + "' has the wrong type");
    }
}

void require(bool ok, const char* key, const std::string& what) {
    if (!ok) throw ConfigError(key, std::string("config key '") + key + "': " + what);
}

std::string mode_name(eval::CheckerboardMode m) {
    return m == eval::CheckerboardMode::kPerTerm ? "per_term" : "signed_window";
}

// Private signal from inside the objective: some samples could not be solved.
struct SolveFailure {
    std::vector<std::size_t> indices;
    std::string message;
};

void put_bytes(std::string& out, const void* p, std::size_t n) { out.append(static_cast<const char*>(p), n); }

template <typename T>
T take(const std::string& in, std::size_t& offset) {
    if (offset + sizeof(T) > in.size()) throw LoadError("Adam state truncated");
    T v;
    std::memcpy(&v, in.data() + offset, sizeof(T));
    offset += sizeof(T);
    return v;
}

std::string encode_adam(const nn::AdamState& s) {
    std::string out(kAdamMagic, sizeof(kAdamMagic));
    put_bytes(out, &kCheckpointVersion, sizeof(kCheckpointVersion));
    put_bytes(out, &s.t, sizeof(s.t));
    const auto count = static_cast<std::uint64_t>(s.m.size());
    put_bytes(out, &count, sizeof(count));
    for (std::size_t k = 0; k < s.m.size(); ++k) {
        const auto n = static_cast<std::uint64_t>(s.m[k].size());
        put_bytes(out, &n, sizeof(n));
        put_bytes(out, s.m[k].data(), n * sizeof(double));
        put_bytes(out, s.v[k].data(), n * sizeof(double));
    }
    out += sha256_hex(out);
    return out;
}

nn::AdamState decode_adam(const std::string& bytes, const fs::path& path) {
    constexpr std::size_t kDigest = 64;
    if (bytes.size() < sizeof(kAdamMagic) + kDigest || std::memcmp(bytes.data(), kAdamMagic, sizeof(kAdamMagic)) != 0) {
        throw LoadError(path.string() + ": not an Adam state file");
    }
    const std::string body = bytes.substr(0, bytes.size() - kDigest);
    if (sha256_hex(body) != bytes.substr(bytes.size() - kDigest)) {
        throw LoadError(path.string() + ": Adam state checksum mismatch (truncated or corrupted)");
    }
    std::size_t off = sizeof(kAdamMagic);
    if (take<std::uint32_t>(body, off) != kCheckpointVersion) throw LoadError(path.string() + ": unknown version");
    nn::AdamState s;
    s.t = take<std::int64_t>(body, off);
    const auto count = take<std::uint64_t>(body, off);
    for (std::uint64_t k = 0; k < count; ++k) {
        const auto n = take<std::uint64_t>(body, off);
        if (off + 2 * n * sizeof(double) > body.size()) throw LoadError(path.string() + ": Adam state truncated");
        std::vector<double> m(n), v(n);
        std::memcpy(m.data(), body.data() + off, n * sizeof(double));
        off += n * sizeof(double);
        std::memcpy(v.data(), body.data() + off, n * sizeof(double));
        off += n * sizeof(double);
        s.m.push_back(std::move(m));
        s.v.push_back(std::move(v));
    }
    return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    return out;
}

std::vector<nn::Tensor> tensors_of(const std::vector<nn::NamedParameter>& params) {
    std::vector<nn::Tensor> out;
    out.reserve(params.size());
    for (const auto& p : params) out.push_back(p.tensor);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// configuration

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("", "training config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!known_keys().contains(key)) throw ConfigError(key, "unknown config key '" + key + "'");
    }
    TrainingConfig c;
    auto& k = c.coefficients;
    k.alpha = read_key(j, "alpha", k.alpha);
    k.beta = read_key(j, "beta", k.beta);
    k.gamma = read_key(j, "gamma", k.gamma);
    k.delta = read_key(j, "delta", k.delta);
    k.f_k = read_key(j, "F_k", k.f_k);
    k.sigma2 = read_key(j, "sigma2", k.sigma2);
    const auto mode = read_key(j, "checkerboard_mode", mode_name(k.checkerboard_mode));
    if (mode == "signed_window") {
        k.checkerboard_mode = eval::CheckerboardMode::kSignedWindow;
    } else if (mode == "per_term") {
        k.checkerboard_mode = eval::CheckerboardMode::kPerTerm;
    } else {
        throw ConfigError("checkerboard_mode", "checkerboard_mode must be 'signed_window' or 'per_term'");
    }
    c.zeta_max = read_key(j, "zeta_max", c.zeta_max);
    c.eta0 = read_key(j, "eta0", c.eta0);
    c.d_inp = read_key(j, "d_inp", c.d_inp);
    c.material.youngs_modulus = read_key(j, "E", c.material.youngs_modulus);
    c.material.poisson_ratio = read_key(j, "nu", c.material.poisson_ratio);
    c.penal = read_key(j, "p", c.penal);
    c.r_min = read_key(j, "r_min", c.r_min);
    c.force_mag = read_key(j, "force_mag", c.force_mag);
    c.x_min = read_key(j, "x_min", c.x_min);
    c.batch_sizes = read_key(j, "batch_sizes", c.batch_sizes);
    c.max_level = read_key(j, "max_level", c.max_level);
    c.seed = read_key(j, "seed", c.seed);
    c.checkpoint_every = read_key(j, "checkpoint_every", c.checkpoint_every);
    c.max_batches_per_level = read_key(j, "max_batches_per_level", c.max_batches_per_level);
    c.jobs = read_key(j, "jobs", c.jobs);
    if (j.contains("architecture")) {
        try {
            c.architecture = ArchitectureConfig::from_json(j.at("architecture"));
        } catch (const ConfigError& e) {
            throw ConfigError("architecture." + e.key(), e.what());
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("architecture", "config key 'architecture' has the wrong type");
        }
    } else {
        c.architecture.d_inp = c.d_inp;
        c.architecture.dense_widths.back() = c.architecture.channels * c.d_inp * c.d_inp;
        c.architecture.max_level = std::max(c.architecture.max_level, c.max_level);
    }
    c.validate();
    return c;
}

nlohmann::json TrainingConfig::to_json() const {
    const auto& k = coefficients;
    return {{"alpha", k.alpha},
            {"beta", k.beta},
            {"gamma", k.gamma},
            {"delta", k.delta},
            {"F_k", k.f_k},
            {"sigma2", k.sigma2},
            {"checkerboard_mode", mode_name(k.checkerboard_mode)},
            {"zeta_max", zeta_max},
            {"eta0", eta0},
            {"d_inp", d_inp},
            {"E", material.youngs_modulus},
            {"nu", material.poisson_ratio},
            {"p", penal},
            {"r_min", r_min},
            {"force_mag", force_mag},
            {"x_min", x_min},
            {"batch_sizes", batch_sizes},
            {"max_level", max_level},
            {"seed", seed},
            {"checkpoint_every", checkpoint_every},
            {"max_batches_per_level", max_batches_per_level},
            {"jobs", jobs},
            {"architecture", architecture.to_json()}};
}

void TrainingConfig::validate() const {
    const auto& k = coefficients;
    require(k.alpha >= 0, "alpha", "must be >= 0");
    require(k.beta >= 0, "beta", "must be >= 0");
    require(k.gamma >= 0, "gamma", "must be >= 0");
    require(k.delta >= 0, "delta", "must be >= 0");
    require(k.f_k > 0, "F_k", "must be > 0");
    require(k.sigma2 > 0, "sigma2", "must be > 0");
    require(zeta_max >= 0, "zeta_max", "must be >= 0");
    require(eta0 > 0, "eta0", "must be > 0");
    require(d_inp >= 3, "d_inp", "must be >= 3");
    require(material.youngs_modulus > 0, "E", "must be > 0");
    require(material.poisson_ratio > -1.0 && material.poisson_ratio < 0.5, "nu", "must lie in (-1, 0.5)");
    require(penal >= 1, "p", "must be >= 1");
    require(r_min > 0, "r_min", "must be > 0");
    require(force_mag > 0, "force_mag", "must be > 0");
    require(x_min > 0 && x_min < 1, "x_min", "must lie in (0, 1)");
    require(max_level >= 1 && max_level <= architecture.max_level, "max_level",
            "must lie in 1.." + std::to_string(architecture.max_level) + " (the architecture's level count)");
    require(static_cast<int>(batch_sizes.size()) >= max_level, "batch_sizes", "needs one entry per level");
    for (int b : batch_sizes) require(b > 0, "batch_sizes", "entries must be positive");
    require(checkpoint_every >= 0, "checkpoint_every", "must be >= 0");
    require(max_batches_per_level >= 0, "max_batches_per_level", "must be >= 0");
    require(jobs >= 1, "jobs", "must be >= 1");
    require(architecture.d_inp == d_inp, "architecture",
            "architecture d_inp " + std::to_string(architecture.d_inp) + " differs from d_inp " +
                std::to_string(d_inp));
    try {
        architecture.validate();
    } catch (const ConfigError& e) {
        throw ConfigError("architecture." + e.key(), e.what());
    }
}

std::string TrainingConfig::digest() const {
    auto j = to_json();
    j.erase("jobs");
    j.erase("checkpoint_every");
    return sha256_hex(j.dump());
}

int TrainingConfig::batch_size(int level) const { return batch_sizes.at(static_cast<std::size_t>(level - 1)); }

double learning_rate(int level, double eta0) {
    if (level < 1) throw DomainError("level must be >= 1");
    return std::pow(0.25, level - 1) * eta0;
}

InputSample random_sample(Rng& rng, int d_inp, double force_mag) {
    auto bc = BoundaryConditionSet::left_edge_clamp(d_inp);
    const int n = d_inp + 1;
    std::vector<std::pair<int, int>> candidates;
    candidates.reserve(static_cast<std::size_t>(n * n));
    for (int col = 0; col < n; ++col) {
        for (int row = 0; row < n; ++row) {
            if (!bc.is_fixed(row, col)) candidates.emplace_back(row, col);
        }
    }
    const auto [row, col] = candidates[rng.uniform_int(candidates.size())];
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    bc.rsx(row, col) = force_mag * std::cos(theta);
    bc.rsy(row, col) = force_mag * std::sin(theta);
    const double m_tar = static_cast<double>(20 + rng.uniform_int(kMtarSteps)) / 100.0;
    return {std::move(bc), m_tar};
}

// ---------------------------------------------------------------------------------------------
// patience

int PatienceTracker::update(double j) {
    if (!started_) {
        best_ = j;
        started_ = true;
    }
    if (j >= best_) {
        ++zeta_;
    } else {
        zeta_ = 0;
        best_ = j;
    }
    return zeta_;
}

void PatienceTracker::reset() noexcept {
    zeta_ = 0;
    best_ = 0.0;
    started_ = false;
}

nlohmann::json PatienceTracker::to_json() const {
    return {{"zeta", zeta_}, {"best", best_}, {"started", started_}};
}

void PatienceTracker::restore(const nlohmann::json& j) {
    zeta_ = j.at("zeta").get<int>();
    best_ = j.at("best").get<double>();
    started_ = j.at("started").get<bool>();
}

// ---------------------------------------------------------------------------------------------
// history

std::vector<double> TrainingHistory::smoothed_j(double a) const {
    std::vector<double> out;
    out.reserve(records_.size());
    for (const auto& r : records_) {
        out.push_back(out.empty() ? r.j : a * out.back() + (1.0 - a) * r.j);
    }
    return out;
}

void TrainingHistory::write_csv(std::ostream& out) const {
    out << "b,lambda,J,c_mean,M_mean,F_mean,P_mean,lr,seconds\n";
    out << std::setprecision(17);
    for (const auto& r : records_) {
        out << r.b << ',' << r.lambda << ',' << r.j << ',' << r.c_mean << ',' << r.m_mean << ',' << r.f_mean << ','
            << r.p_mean << ',' << r.lr << ',' << r.seconds << '\n';
    }
}

void TrainingHistory::write_sample_csv(std::ostream& out) const {
    out << "b,i,c,M,F,P,fQ\n";
    out << std::setprecision(17);
    for (const auto& r : records_) {
        for (std::size_t i = 0; i < r.samples.size(); ++i) {
            const auto& s = r.samples[i];
            out << r.b << ',' << i << ',' << s.losses.c << ',' << s.losses.m << ',' << s.losses.f << ','
                << s.losses.p << ',' << s.quality << '\n';
        }
    }
}

void TrainingHistory::write_transitions_csv(std::ostream& out) const {
    out << "b,lambda\n";
    for (const auto& t : transitions_) out << t.b << ',' << t.lambda << '\n';
}

TrainingHistory TrainingHistory::read(std::istream& batches, std::istream* transitions, std::istream* samples) {
    TrainingHistory h;
    std::string line;
    std::getline(batches, line);
    if (line.rfind("b,lambda,J", 0) != 0) throw LoadError("training history has no header");
    while (std::getline(batches, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 9) throw LoadError("malformed training history row: " + line);
        BatchRecord r;
        r.b = std::stoll(cells[0]);
        r.lambda = std::stoi(cells[1]);
        r.j = std::stod(cells[2]);
        r.c_mean = std::stod(cells[3]);
        r.m_mean = std::stod(cells[4]);
        r.f_mean = std::stod(cells[5]);
        r.p_mean = std::stod(cells[6]);
        r.lr = std::stod(cells[7]);
        r.seconds = std::stod(cells[8]);
        h.records_.push_back(std::move(r));
    }
    if (transitions) {
        std::getline(*transitions, line);
        while (std::getline(*transitions, line)) {
            if (line.empty()) continue;
            const auto cells = split(line, ',');
            if (cells.size() != 2) throw LoadError("malformed level transition row: " + line);
            h.transitions_.push_back({std::stoll(cells[0]), std::stoi(cells[1])});
        }
    }
    if (samples) {
        std::getline(*samples, line);
        std::size_t k = 0;
        while (std::getline(*samples, line)) {
            if (line.empty()) continue;
            const auto cells = split(line, ',');
            if (cells.size() != 7) throw LoadError("malformed sample row: " + line);
            const auto b = std::stoll(cells[0]);
            while (k < h.records_.size() && h.records_[k].b < b) ++k;
            if (k == h.records_.size() || h.records_[k].b != b) throw LoadError("sample row for unknown batch: " + line);
            h.records_[k].samples.push_back(
                {{std::stod(cells[2]), std::stod(cells[3]), std::stod(cells[4]), std::stod(cells[5])},
                 std::stod(cells[6])});
        }
    }
    return h;
}

// ---------------------------------------------------------------------------------------------
// batch evaluation

std::vector<SampleEvaluation> evaluate_batch(std::span<const double> densities, std::span<const InputSample> samples,
                                             int level, const TrainingConfig& config) {
    const Level lv{level, config.d_inp};
    const auto n = static_cast<std::size_t>(lv.elements());
    if (densities.size() != n * samples.size()) {
        throw DimensionError("evaluate_batch: " + std::to_string(densities.size()) + " densities for " +
                             std::to_string(samples.size()) + " samples of " + std::to_string(n) + " elements");
    }
    std::vector<SampleEvaluation> out(samples.size());
    auto work = [&](std::size_t i) {
        try {
            const fem::FemProblem problem(lv, samples[i].bc, config.penal, config.material, config.x_min);
            out[i].result = eval::evaluate_geometry(densities.subspan(i * n, n), problem, samples[i].m_tar,
                                                    config.coefficients);
        } catch (const SolverError& e) {
            out[i].error = e.what();
        }
    };
    const auto jobs = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, config.jobs)), samples.size());
    if (jobs <= 1) {
        for (std::size_t i = 0; i < samples.size(); ++i) work(i);
        return out;
    }
    std::vector<std::exception_ptr> errors(jobs);
    {
        std::vector<std::jthread> workers;
        for (std::size_t t = 0; t < jobs; ++t) {
            workers.emplace_back([&, t] {
                try {
                    for (std::size_t i = t; i < samples.size(); i += jobs) work(i);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// trainer

Trainer::Trainer(TrainingConfig config, Predictor predictor)
    : config_(std::move(config)),
      predictor_(std::move(predictor)),
      rng_(config_.seed),
      patience_(config_.zeta_max),
      started_(std::chrono::steady_clock::now()) {}

Trainer::Trainer(TrainingConfig config) : Trainer(config, Predictor(config.architecture)) {
    // The same stream first initializes the weights, then draws the training samples.
    predictor_ = Predictor(config_.architecture, rng_);
    start_level(1);
}

Trainer::~Trainer() = default;
Trainer::Trainer(Trainer&&) noexcept = default;
Trainer& Trainer::operator=(Trainer&&) noexcept = default;

void Trainer::start_level(int level) {
    level_ = level;
    level_batch_ = 0;
    patience_ = PatienceTracker(config_.zeta_max);
    adam_ = std::make_unique<nn::Adam>(tensors_of(predictor_.parameters_up_to(level)));
    history_.mark_level({global_batch_ + 1, level});
}

bool Trainer::level_done() const {
    if (level_batch_ == 0) return false;
    if (!patience_.keep_going()) return true;
    return config_.max_batches_per_level > 0 && level_batch_ >= config_.max_batches_per_level;
}

void Trainer::advance_if_converged() {
    if (finished_ || !level_done()) return;
    if (level_ < config_.max_level) {
        start_level(level_ + 1);
    } else {
        finished_ = true;
    }
}

const BatchRecord& Trainer::run_batch() {
    if (finished_) throw StateError("training already finished");
    if (level_done()) throw StateError("level converged; call advance_if_converged() first");
    const int bn = config_.batch_size(level_);
    const double lr = learning_rate(level_, config_.eta0);
    std::vector<InputSample> samples;
    samples.reserve(static_cast<std::size_t>(bn));
    for (int i = 0; i < bn; ++i) samples.push_back(random_sample(rng_, config_.d_inp, config_.force_mag));

    std::vector<SampleEvaluation> evals;
    nn::Tensor objective;
    for (int attempt = 0;; ++attempt) {
        adam_->zero_grad();
        const nn::Tensor input = predictor_.make_input(samples);
        const nn::Tensor x = nn::clamp(predictor_.forward(input, level_), config_.x_min, 1.0);
        try {
            objective = nn::external_objective(x, [&](std::span<const double> values, const nn::Shape&) {
                evals = evaluate_batch(values, samples, level_, config_);
                SolveFailure failure;
                for (std::size_t i = 0; i < evals.size(); ++i) {
                    if (!evals[i].error.empty()) {
                        failure.indices.push_back(i);
                        failure.message = evals[i].error;
                    }
                }
                if (!failure.indices.empty()) throw failure;
                nn::ExternalResult r;
                std::vector<double> q(evals.size());
                for (std::size_t i = 0; i < evals.size(); ++i) q[i] = evals[i].result.quality;
                r.value = eval::batch_objective(q);
                r.grad.reserve(values.size());
                const double inv = 1.0 / static_cast<double>(evals.size());
                for (const auto& e : evals) {
                    for (double g : e.result.dquality_dx) r.grad.push_back(g * inv);
                }
                return r;
            });
            break;
        } catch (const SolveFailure& f) {
            if (attempt > 0) {
                throw TrainingError("batch " + std::to_string(global_batch_ + 1) + ": compliance solve failed again after "
                                    "regenerating the samples: " + f.message);
            }
            for (std::size_t i : f.indices) samples[i] = random_sample(rng_, config_.d_inp, config_.force_mag);
        }
    }
    const double j = objective.item();
    if (!std::isfinite(j)) {
        throw TrainingError("batch " + std::to_string(global_batch_ + 1) + ": objective is not finite");
    }
    objective.backward();
    adam_->step(lr);
    predictor_.quantize_to_float32();

    ++global_batch_;
    ++level_batch_;
    BatchRecord rec;
    rec.b = global_batch_;
    rec.lambda = level_;
    rec.j = j;
    rec.lr = lr;
    rec.samples.reserve(evals.size());
    for (const auto& e : evals) {
        rec.c_mean += e.result.losses.c;
        rec.m_mean += e.result.losses.m;
        rec.f_mean += e.result.losses.f;
        rec.p_mean += e.result.losses.p;
        rec.samples.push_back({e.result.losses, e.result.quality});
    }
    const double inv = 1.0 / static_cast<double>(evals.size());
    rec.c_mean *= inv;
    rec.m_mean *= inv;
    rec.f_mean *= inv;
    rec.p_mean *= inv;
    rec.zeta = patience_.update(j);
    rec.seconds = elapsed_before_ + std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    history_.add(std::move(rec));
    return history_.records().back();
}

void Trainer::run(const Callbacks& cb, const std::optional<fs::path>& checkpoint_dir) {
    while (!finished_) {
        if (cb.should_stop && cb.should_stop()) break;
        const auto& rec = run_batch();
        if (cb.on_batch) cb.on_batch(rec);
        const bool periodic = config_.checkpoint_every > 0 && global_batch_ % config_.checkpoint_every == 0;
        if (level_done()) {
            const int before = level_;
            advance_if_converged();
            if (checkpoint_dir) save_checkpoint(*checkpoint_dir);
            if (!finished_ && level_ != before && cb.on_level) cb.on_level(level_);
        } else if (periodic && checkpoint_dir) {
            save_checkpoint(*checkpoint_dir);
        }
    }
    if (checkpoint_dir) save_checkpoint(*checkpoint_dir);
}

void Trainer::save_model(const fs::path& path) const {
    ModelManifest m;
    m.architecture = predictor_.architecture();
    m.architecture_hash = predictor_.architecture_hash();
    m.trained_levels = level_;
    m.training_config_digest = config_.digest();
    pen::save_model(predictor_, m, path);
}

void Trainer::save_checkpoint(const fs::path& dir) const {
    fs::create_directories(dir);
    save_model(dir / "model.pen");
    const std::string adam = encode_adam(adam_->state());
    io::atomic_write(dir / "adam.bin", [&](std::ostream& out) { out.write(adam.data(), static_cast<std::streamsize>(adam.size())); },
                     true);
    io::atomic_write(dir / "history.csv", [&](std::ostream& out) { history_.write_csv(out); });
    io::atomic_write(dir / "samples.csv", [&](std::ostream& out) { history_.write_sample_csv(out); });
    io::atomic_write(dir / "transitions.csv", [&](std::ostream& out) { history_.write_transitions_csv(out); });
    const double elapsed =
        elapsed_before_ + std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    const nlohmann::json state = {{"format", "pen-checkpoint"},
                                  {"version", kCheckpointVersion},
                                  {"config", config_.to_json()},
                                  {"level", level_},
                                  {"batches", global_batch_},
                                  {"batches_in_level", level_batch_},
                                  {"finished", finished_},
                                  {"patience", patience_.to_json()},
                                  {"rng", rng_.state()},
                                  {"elapsed_seconds", elapsed}};
    io::atomic_write_text(dir / "state.json", state.dump(1) + "\n");
}

Trainer Trainer::resume(const fs::path& dir) {
    const fs::path state_path = dir / "state.json";
    if (!fs::exists(state_path)) throw LoadError(dir.string() + ": no checkpoint state (state.json missing)");
    const auto state = io::read_json(state_path);
    if (state.value("format", std::string{}) != "pen-checkpoint") {
        throw LoadError(state_path.string() + ": not a PEN checkpoint");
    }
    TrainingConfig config;
    try {
        config = TrainingConfig::from_json(state.at("config"));
    } catch (const ConfigError& e) {
        throw LoadError(state_path.string() + ": invalid stored config: " + e.what());
    }
    if (!fs::exists(dir / "adam.bin")) {
        throw LoadError(dir.string() + ": Adam state (adam.bin) is missing; refusing to resume with fresh moments");
    }
    auto loaded = load_model(dir / "model.pen", config.architecture);
    Trainer t(config, std::move(loaded.predictor));
    try {
        t.level_ = state.at("level").get<int>();
        t.global_batch_ = state.at("batches").get<std::int64_t>();
        t.level_batch_ = state.at("batches_in_level").get<std::int64_t>();
        t.finished_ = state.at("finished").get<bool>();
        t.patience_.restore(state.at("patience"));
        t.rng_.restore(state.at("rng").get<std::string>());
        t.elapsed_before_ = state.at("elapsed_seconds").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(state_path.string() + ": incomplete checkpoint state: " + e.what());
    } catch (const std::invalid_argument& e) {
        throw LoadError(state_path.string() + ": " + e.what());
    }
    t.adam_ = std::make_unique<nn::Adam>(tensors_of(t.predictor_.parameters_up_to(t.level_)));
    try {
        t.adam_->set_state(decode_adam(io::read_file(dir / "adam.bin"), dir / "adam.bin"));
    } catch (const DimensionError& e) {
        throw LoadError((dir / "adam.bin").string() + ": " + e.what());
    }
    std::ifstream hist(dir / "history.csv");
    std::ifstream trans(dir / "transitions.csv");
    std::ifstream samples(dir / "samples.csv");
    if (!hist || !trans || !samples) throw LoadError(dir.string() + ": training history missing");
    t.history_ = TrainingHistory::read(hist, &trans, &samples);
    if (static_cast<std::int64_t>(t.history_.records().size()) != t.global_batch_) {
        throw LoadError(dir.string() + ": history has " + std::to_string(t.history_.records().size()) +
                        " batches, state records " + std::to_string(t.global_batch_));
    }
    t.started_ = std::chrono::steady_clock::now();
    return t;
}

}  // namespace pen
