// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include "pen/simp_ref.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <optional>
#include <thread>

#include "pen/errors.hpp"
#include "pen/io.hpp"
#include "pen/trainer.hpp"

namespace pen::simp {

namespace {

constexpr double kVolumeTolerance = 1e-3;

std::vector<double> filtered(const Eigen::SparseMatrix<double, Eigen::RowMajor>& h, const std::vector<double>& v) {
    const Eigen::Map<const Eigen::VectorXd> in(v.data(), static_cast<Eigen::Index>(v.size()));
    const Eigen::VectorXd out = h * in;
    return {out.data(), out.data() + out.size()};
}

std::vector<double> apply_transposed(const Eigen::SparseMatrix<double, Eigen::RowMajor>& h,
                                     const std::vector<double>& v) {
    const Eigen::Map<const Eigen::VectorXd> in(v.data(), static_cast<Eigen::Index>(v.size()));
    const Eigen::VectorXd out = h.transpose() * in;
    return {out.data(), out.data() + out.size()};
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double a : v) s += a;
    return s / static_cast<double>(v.size());
}

void clamp_into(std::vector<double>& v, double lo) {
    for (double& a : v) a = std::clamp(a, lo, 1.0);
}

}  // namespace

void SimpConfig::validate() const {
    if (level.lambda < 1 || level.d_inp < 1) throw DomainError("simp: invalid level");
    if (!(volfrac > x_min && volfrac <= 1.0)) throw DomainError("simp: volfrac must lie in (x_min, 1]");
    if (!(penal >= 1.0)) throw DomainError("simp: penal must be >= 1");
    if (!(r_min > 0.0)) throw DomainError("simp: r_min must be positive");
    if (!(move > 0.0 && move <= 1.0)) throw DomainError("simp: move limit must lie in (0, 1]");
    if (max_iterations < 1) throw DomainError("simp: max_iterations must be >= 1");
    if (!(change_tolerance > 0.0)) throw DomainError("simp: change_tolerance must be positive");
    if (!(x_min > 0.0 && x_min < 1.0)) throw DomainError("simp: x_min must lie in (0, 1)");
}

Eigen::SparseMatrix<double, Eigen::RowMajor> density_filter(int d, double r_min) {
    if (d < 1 || !(r_min > 0.0)) throw DomainError("density_filter: need d >= 1 and r_min > 0");
    const int reach = static_cast<int>(std::ceil(r_min)) - 1;
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(d) * d * (2 * reach + 1) * (2 * reach + 1));
    std::vector<double> row_sum(static_cast<std::size_t>(d) * d, 0.0);
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < d; ++i) {
            const int e = i + d * j;
            for (int jj = std::max(j - reach, 0); jj <= std::min(j + reach, d - 1); ++jj) {
                for (int ii = std::max(i - reach, 0); ii <= std::min(i + reach, d - 1); ++ii) {
                    const double w = r_min - std::hypot(i - ii, j - jj);
                    if (w <= 0.0) continue;
                    entries.emplace_back(e, ii + d * jj, w);
                    row_sum[static_cast<std::size_t>(e)] += w;
                }
            }
        }
    }
    for (auto& t : entries) t = {t.row(), t.col(), t.value() / row_sum[static_cast<std::size_t>(t.row())]};
    Eigen::SparseMatrix<double, Eigen::RowMajor> h(d * d, d * d);
    h.setFromTriplets(entries.begin(), entries.end());
    return h;
}

SimpResult optimize(const BoundaryConditionSet& bc, const SimpConfig& cfg) {
    cfg.validate();
    const fem::FemProblem problem(cfg.level, bc, cfg.penal, cfg.material, cfg.x_min);
    const auto n = static_cast<std::size_t>(cfg.level.elements());

    if (cfg.volfrac >= 1.0) {
        // the only feasible design
        DensityField solid = DensityField::uniform(cfg.level, 1.0, cfg.x_min);
        const double c = fem::solve_compliance(solid, problem).c;
        return {std::move(solid), c, 0, true, {c}};
    }

    const auto h = density_filter(cfg.level.d(), cfg.r_min);
    std::vector<double> x(n, cfg.volfrac);
    std::vector<double> phys = x;
    const std::vector<double> dv = apply_transposed(h, std::vector<double>(n, 1.0));

    SimpResult best{DensityField::uniform(cfg.level, cfg.volfrac, cfg.x_min), 0.0, 0, false, {}};
    double best_c = std::numeric_limits<double>::infinity();
    double change = std::numeric_limits<double>::infinity();
    std::vector<double> history;

    for (int it = 0; it < cfg.max_iterations; ++it) {
        const auto res = fem::solve_compliance(phys, problem);
        history.push_back(res.c);
        if (change < cfg.change_tolerance) {
            return {DensityField(cfg.level, phys, cfg.x_min), res.c, it, true, std::move(history)};
        }
        if (std::abs(mean(phys) - cfg.volfrac) <= kVolumeTolerance && res.c < best_c) {
            best_c = res.c;
            best.x = DensityField(cfg.level, phys, cfg.x_min);
            best.c = res.c;
            best.iterations = it;
        }

        const std::vector<double> dc = apply_transposed(h, res.dc_dx);
        std::vector<double> candidate(n);
        auto update = [&](double lambda) {
            for (std::size_t e = 0; e < n; ++e) {
                const double ratio = std::max(0.0, -dc[e]) / (dv[e] * lambda);
                const double step = x[e] * std::sqrt(ratio);
                candidate[e] = std::clamp(step, std::max(cfg.x_min, x[e] - cfg.move), std::min(1.0, x[e] + cfg.move));
            }
            phys = filtered(h, candidate);
            clamp_into(phys, cfg.x_min);
            return mean(phys);
        };
        double l1 = 0.0;
        double l2 = 1e9;
        for (int k = 0; k < 200 && (l2 - l1) > 1e-12 * (l1 + l2); ++k) {
            const double mid = 0.5 * (l1 + l2);
            if (update(mid) > cfg.volfrac) {
                l1 = mid;
            } else {
                l2 = mid;
            }
        }
        update(l2);
        change = 0.0;
        for (std::size_t e = 0; e < n; ++e) change = std::max(change, std::abs(candidate[e] - x[e]));
        x = candidate;
    }

    const auto res = fem::solve_compliance(phys, problem);
    history.push_back(res.c);
    if (change < cfg.change_tolerance) {
        return {DensityField(cfg.level, phys, cfg.x_min), res.c, cfg.max_iterations, true, std::move(history)};
    }
    if (!std::isfinite(best_c) || (std::abs(mean(phys) - cfg.volfrac) <= kVolumeTolerance && res.c < best_c)) {
        best.x = DensityField(cfg.level, phys, cfg.x_min);
        best.c = res.c;
        best.iterations = cfg.max_iterations;
    }
    best.history = std::move(history);
    return best;
}

// ---------------------------------------------------------------------------------------------
// validation sets

nlohmann::json to_json(const ValidationRecord& r) {
    const auto flat = flatten_bcs(r.sample.bc);
    return {{"rk", flat.rk},
            {"rs", flat.rs},
            {"m_tar", r.sample.m_tar},
            {"x", std::vector<double>(r.x.values().begin(), r.x.values().end())},
            {"c", r.c},
            {"iterations", r.iterations},
            {"seed", r.seed},
            {"level", r.x.level().lambda},
            {"d_inp", r.x.level().d_inp},
            {"x_min", r.x.x_min()}};
}

ValidationRecord record_from_json(const nlohmann::json& j) {
    try {
        FlatBoundaryConditions flat{j.at("rk").get<std::vector<double>>(), j.at("rs").get<std::vector<double>>()};
        InputSample sample{unflatten_bcs(flat), j.at("m_tar").get<double>()};
        const Level level{j.at("level").get<int>(), j.at("d_inp").get<int>()};
        if (sample.bc.d_inp() != level.d_inp) {
            throw LoadError("validation record: rk/rs do not match d_inp=" + std::to_string(level.d_inp));
        }
        auto x = j.at("x").get<std::vector<double>>();
        if (x.size() != static_cast<std::size_t>(level.elements())) {
            throw LoadError("validation record: x has " + std::to_string(x.size()) + " values, level needs " +
                            std::to_string(level.elements()));
        }
        const double x_min = j.value("x_min", kDefaultXMin);
        return {std::move(sample), DensityField(level, std::move(x), x_min), j.at("c").get<double>(),
                j.at("iterations").get<int>(), j.at("seed").get<std::uint64_t>()};
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("validation record: ") + e.what());
    } catch (const DimensionError& e) {
        throw LoadError(std::string("validation record: ") + e.what());
    } catch (const DomainError& e) {
        throw LoadError(std::string("validation record: ") + e.what());
    }
}

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<ValidationRecord> generate_validation_set(int n, std::uint64_t seed, const GenerationOptions& options) {
    if (n < 1) throw DomainError("generate_validation_set: n must be >= 1");
    constexpr int kMaxAttempts = 16;
    std::vector<std::optional<ValidationRecord>> out(static_cast<std::size_t>(n));
    std::vector<std::vector<std::string>> notes(static_cast<std::size_t>(n));
    auto work = [&](std::size_t i) {
        for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
            const std::uint64_t s = attempt == 0 ? sample_seed(seed, i) : sample_seed(sample_seed(seed, i), attempt);
            Rng rng(s);
            InputSample sample = random_sample(rng, options.d_inp, options.force_mag);
            SimpConfig cfg = options.simp;
            cfg.level = Level{options.level, options.d_inp};
            cfg.volfrac = sample.m_tar;
            try {
                auto res = optimize(sample.bc, cfg);
                out[i] = ValidationRecord{std::move(sample), std::move(res.x), res.c, res.iterations, s};
                return;
            } catch (const SolverError& e) {
                notes[i].push_back("sample " + std::to_string(i) + " (seed " + std::to_string(s) +
                                   ") failed and was replaced: " + e.what());
            }
        }
        throw SolverError("sample " + std::to_string(i) + ": no solvable replacement found");
    };
    const auto jobs = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, options.jobs)), out.size());
    std::vector<std::exception_ptr> errors(jobs);
    {
        std::vector<std::jthread> workers;
        for (std::size_t t = 0; t < jobs; ++t) {
            workers.emplace_back([&, t] {
                try {
                    for (std::size_t i = t; i < out.size(); i += jobs) work(i);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<ValidationRecord> records;
    records.reserve(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (options.log) {
            for (const auto& note : notes[i]) options.log(note);
        }
        records.push_back(std::move(*out[i]));
    }
    return records;
}

void write_validation_set(const std::vector<ValidationRecord>& records, std::ostream& out) {
    for (const auto& r : records) out << to_json(r).dump() << '\n';
}

void write_validation_set(const std::vector<ValidationRecord>& records, const std::filesystem::path& path) {
    io::atomic_write(path, [&](std::ostream& out) { write_validation_set(records, out); });
}

std::vector<ValidationRecord> read_validation_set(std::istream& in) {
    std::vector<ValidationRecord> records;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw LoadError("validation set line " + std::to_string(number) + ": " + e.what());
        }
        records.push_back(record_from_json(j));
    }
    return records;
}

std::vector<ValidationRecord> read_validation_set(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open validation set " + path.string());
    return read_validation_set(in);
}

}  // namespace pen::simp
