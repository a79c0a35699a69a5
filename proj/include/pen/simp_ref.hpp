// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/SparseCore>
#include <nlohmann/json.hpp>

#include "pen/domain.hpp"
#include "pen/fem.hpp"

namespace pen::simp {

/// Settings of the reference optimizer (optimality criteria with a density filter).
struct SimpConfig {
    Level level{1, 8};
    double volfrac = 0.5;
    double penal = 3.0;
    double r_min = 3.0;  // filter radius in elements of the optimized mesh
    fem::Material material;
    double x_min = kDefaultXMin;
    double move = 0.2;
    int max_iterations = 200;
    double change_tolerance = 0.01;

    void validate() const;
};

struct SimpResult {
    DensityField x;  // filtered (physical) densities
    double c = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> history;  // compliance per iteration
};

/// Filter matrix with weights max(0, r_min - distance), rows normalized to one.
[[nodiscard]] Eigen::SparseMatrix<double, Eigen::RowMajor> density_filter(int d, double r_min);

/// Runs the optimizer. When max_iterations is reached without convergence, the best feasible
/// iterate is returned with converged = false.
[[nodiscard]] SimpResult optimize(const BoundaryConditionSet& bc, const SimpConfig& cfg);

struct ValidationRecord {
    InputSample sample;
    DensityField x;
    double c = 0.0;
    int iterations = 0;
    std::uint64_t seed = 0;
};

[[nodiscard]] nlohmann::json to_json(const ValidationRecord& r);
[[nodiscard]] ValidationRecord record_from_json(const nlohmann::json& j);

struct GenerationOptions {
    int level = 1;
    int d_inp = 8;
    double force_mag = 100.0;
    SimpConfig simp;  // level and volfrac are overwritten per sample
    int jobs = 1;
    std::function<void(const std::string&)> log;
};

/// Per-sample seed derived from the set seed (splitmix64 of seed + index).
[[nodiscard]] std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index);

/// Draws n samples with random_sample and optimizes each at the target level. A sample whose
/// optimization throws is redrawn from the next seed; the replacement is reported through log.
[[nodiscard]] std::vector<ValidationRecord> generate_validation_set(int n, std::uint64_t seed,
                                                                    const GenerationOptions& options = {});

/// JSON lines, one record per line.
void write_validation_set(const std::vector<ValidationRecord>& records, std::ostream& out);
void write_validation_set(const std::vector<ValidationRecord>& records, const std::filesystem::path& path);
[[nodiscard]] std::vector<ValidationRecord> read_validation_set(std::istream& in);
[[nodiscard]] std::vector<ValidationRecord> read_validation_set(const std::filesystem::path& path);

}  // namespace pen::simp
