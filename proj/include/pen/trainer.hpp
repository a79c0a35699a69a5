// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pen/domain.hpp"
#include "pen/evaluators.hpp"
#include "pen/fem.hpp"
#include "pen/nn/adam.hpp"
#include "pen/predictor.hpp"
#include "pen/rng.hpp"

namespace pen {

struct TrainingConfig {
    eval::QualityCoefficients coefficients;
    int zeta_max = 1000;
    double eta0 = 0.01;
    int d_inp = 8;
    fem::Material material;
    double penal = 3.0;
    double r_min = 3.0;  // only used by the reference optimizer
    double force_mag = 100.0;
    double x_min = kDefaultXMin;
    std::vector<int> batch_sizes{128, 64, 32, 16};
    int max_level = 4;
    std::uint64_t seed = 0;
    int checkpoint_every = 0;        // batches; 0 = only at level transitions
    int max_batches_per_level = 0;   // 0 = unlimited
    int jobs = 1;                    // parallel FEM evaluations per batch
    ArchitectureConfig architecture;

    /// Keys mirror the symbols of the parameter table (alpha, beta, ..., batch_sizes).
    /// Unknown keys and invalid values throw ConfigError naming the key.
    static TrainingConfig from_json(const nlohmann::json& j);
    [[nodiscard]] nlohmann::json to_json() const;
    void validate() const;
    /// SHA-256 of the result-relevant settings (excludes jobs and checkpoint cadence).
    [[nodiscard]] std::string digest() const;
    [[nodiscard]] int batch_size(int level) const;
};

/// eta(lambda) = (1/4)^(lambda-1) * eta0.
[[nodiscard]] double learning_rate(int level, double eta0 = 0.01);

/// Left edge clamped; one force of magnitude `force_mag` at a uniformly drawn free level-1 node,
/// direction uniform in [0, 2 pi); m_tar uniform on {0.20, 0.21, ..., 0.80}.
[[nodiscard]] InputSample random_sample(Rng& rng, int d_inp, double force_mag = 100.0);

/// Convergence counter of one level.
class PatienceTracker {
public:
    explicit PatienceTracker(int zeta_max) : zeta_max_(zeta_max) {}

    /// Records the objective of the next batch; returns the updated counter.
    int update(double j);
    /// True while training on this level should go on (zeta <= zeta_max).
    [[nodiscard]] bool keep_going() const noexcept { return zeta_ <= zeta_max_; }
    [[nodiscard]] int zeta() const noexcept { return zeta_; }
    [[nodiscard]] double best() const noexcept { return best_; }
    [[nodiscard]] bool started() const noexcept { return started_; }
    void reset() noexcept;

    [[nodiscard]] nlohmann::json to_json() const;
    void restore(const nlohmann::json& j);

private:
    int zeta_max_;
    int zeta_ = 0;
    double best_ = 0.0;
    bool started_ = false;
};

struct SampleLosses {
    eval::EvaluatorLosses losses;
    double quality = 0.0;
};

struct BatchRecord {
    std::int64_t b = 0;  // global batch counter, starting at 1
    int lambda = 1;
    double j = 0.0;
    double c_mean = 0.0;
    double m_mean = 0.0;
    double f_mean = 0.0;
    double p_mean = 0.0;
    double lr = 0.0;
    double seconds = 0.0;  // wall time since the start of training
    int zeta = 0;
    std::vector<SampleLosses> samples;
};

struct LevelTransition {
    std::int64_t b = 0;  // first batch of the new level
    int lambda = 1;
};

class TrainingHistory {
public:
    void add(BatchRecord r) { records_.push_back(std::move(r)); }
    void mark_level(LevelTransition t) { transitions_.push_back(t); }
    [[nodiscard]] const std::vector<BatchRecord>& records() const noexcept { return records_; }
    [[nodiscard]] const std::vector<LevelTransition>& transitions() const noexcept { return transitions_; }

    /// Exponential moving average of J: s_1 = J_1, s_b = a s_(b-1) + (1 - a) J_b. Display only.
    [[nodiscard]] std::vector<double> smoothed_j(double a = 0.9) const;

    /// b,lambda,J,c_mean,M_mean,F_mean,P_mean,lr,seconds
    void write_csv(std::ostream& out) const;
    /// b,i,c,M,F,P,fQ
    void write_sample_csv(std::ostream& out) const;
    void write_transitions_csv(std::ostream& out) const;
    static TrainingHistory read(std::istream& batches, std::istream* transitions = nullptr,
                                std::istream* samples = nullptr);

private:
    std::vector<BatchRecord> records_;
    std::vector<LevelTransition> transitions_;
};

/// Checkpoint directory layout: model.pen, adam.bin, state.json, history.csv, transitions.csv.
class Trainer {
public:
    explicit Trainer(TrainingConfig config);
    ~Trainer();
    Trainer(Trainer&&) noexcept;
    Trainer& operator=(Trainer&&) noexcept;

    /// Continues a run from a checkpoint directory. Throws LoadError for missing or corrupt parts.
    static Trainer resume(const std::filesystem::path& dir);

    /// One batch on the current level: sample, predict, evaluate, backpropagate, Adam step.
    /// Throws TrainingError on non-finite objective or gradient and on repeated solver failure.
    const BatchRecord& run_batch();
    /// True once the current level has converged and was the last one.
    [[nodiscard]] bool finished() const noexcept { return finished_; }
    /// Advances to the next level if the current one has converged.
    void advance_if_converged();

    struct Callbacks {
        std::function<void(const BatchRecord&)> on_batch;
        std::function<void(int level)> on_level;
        /// Returning true stops after the current batch (the run is resumable).
        std::function<bool()> should_stop;
    };
    /// Runs until the last level converges or should_stop() fires. With a checkpoint directory it
    /// checkpoints at level transitions, every checkpoint_every batches and at the end.
    void run(const Callbacks& callbacks = {}, const std::optional<std::filesystem::path>& checkpoint_dir = {});

    void save_checkpoint(const std::filesystem::path& dir) const;
    void save_model(const std::filesystem::path& path) const;

    [[nodiscard]] const TrainingConfig& config() const noexcept { return config_; }
    [[nodiscard]] const Predictor& predictor() const noexcept { return predictor_; }
    [[nodiscard]] const TrainingHistory& history() const noexcept { return history_; }
    [[nodiscard]] int level() const noexcept { return level_; }
    [[nodiscard]] std::int64_t batches() const noexcept { return global_batch_; }
    [[nodiscard]] std::int64_t batches_in_level() const noexcept { return level_batch_; }
    [[nodiscard]] const PatienceTracker& patience() const noexcept { return patience_; }
    [[nodiscard]] const Rng& rng() const noexcept { return rng_; }
    [[nodiscard]] const nn::Adam& optimizer() const noexcept { return *adam_; }

private:
    Trainer(TrainingConfig config, Predictor predictor);
    void start_level(int level);
    [[nodiscard]] bool level_done() const;

    TrainingConfig config_;
    Predictor predictor_;
    Rng rng_;
    std::unique_ptr<nn::Adam> adam_;
    PatienceTracker patience_;
    TrainingHistory history_;
    int level_ = 1;
    std::int64_t global_batch_ = 0;
    std::int64_t level_batch_ = 0;
    bool finished_ = false;
    double elapsed_before_ = 0.0;
    std::chrono::steady_clock::time_point started_;
};

struct SampleEvaluation {
    eval::GeometryEvaluation result;
    std::string error;  // non-empty if the compliance solve failed
};

/// Evaluates f_Q and the four losses of every sample on `config.jobs` workers. `densities` holds
/// one d^2 block per sample, already inside [x_min, 1]. Results come back in sample order.
[[nodiscard]] std::vector<SampleEvaluation> evaluate_batch(std::span<const double> densities,
                                                           std::span<const InputSample> samples, int level,
                                                           const TrainingConfig& config);

}  // namespace pen
