// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include "pen/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <functional>

#include "pen/errors.hpp"

namespace pen::metrics {

namespace {

constexpr double kBoundarySlack = 1e-12;

void check_pair(std::span<const double> xp, std::span<const double> xv) {
    if (xp.size() != xv.size()) {
        throw DimensionError("geometry sizes differ: " + std::to_string(xp.size()) + " vs " + std::to_string(xv.size()));
    }
    if (xp.empty()) throw DimensionError("empty geometry");
}

Stats column(const std::vector<SampleComparison>& s, double SampleComparison::*field) {
    std::vector<double> v;
    v.reserve(s.size());
    for (const auto& c : s) v.push_back(c.*field);
    return stats(v);
}

}  // namespace

double mse(std::span<const double> xp, std::span<const double> xv) {
    check_pair(xp, xv);
    double s = 0.0;
    for (std::size_t i = 0; i < xp.size(); ++i) s += (xp[i] - xv[i]) * (xp[i] - xv[i]);
    return s / static_cast<double>(xp.size());
}

double mae(std::span<const double> xp, std::span<const double> xv) {
    check_pair(xp, xv);
    double s = 0.0;
    for (std::size_t i = 0; i < xp.size(); ++i) s += std::abs(xp[i] - xv[i]);
    return s / static_cast<double>(xp.size());
}

double kappa001(std::span<const double> xp, std::span<const double> xv, double tol) {
    check_pair(xp, xv);
    if (!(tol > 0.0)) throw DomainError("kappa001 tolerance must be positive");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < xp.size(); ++i) {
        // H(1 - |d|/tol) with H(0) = 1; the slack absorbs the rounding of xp - xv (0.51 - 0.5 > 0.01 in binary)
        if (std::abs(xp[i] - xv[i]) <= tol + kBoundarySlack) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(xp.size());
}

double accuracy(std::span<const double> xp, std::span<const double> xv) {
    return ((1.0 - mse(xp, xv)) + (1.0 - mae(xp, xv)) + kappa001(xp, xv)) / 3.0;
}

double kappa(std::span<const GeometryPair> pairs) {
    if (pairs.empty()) throw DomainError("kappa needs at least one geometry pair");
    double s = 0.0;
    for (const auto& p : pairs) s += accuracy(p.predicted, p.reference);
    return s / static_cast<double>(pairs.size());
}

double break_even(double training_seconds, double predict_seconds, double optimize_seconds) {
    if (training_seconds < 0.0 || predict_seconds < 0.0) throw DomainError("times must be non-negative");
    if (!(optimize_seconds > predict_seconds)) {
        throw DomainError("break-even is never reached: optimization is not slower than prediction");
    }
    return training_seconds / (optimize_seconds - predict_seconds);
}

double t_pen(double training_seconds, double predict_seconds, double predictions) {
    if (!(predictions > 0.0)) throw DomainError("number of predictions must be positive");
    return training_seconds / predictions + predict_seconds;
}

Stats stats(std::span<const double> v) {
    if (v.empty()) return {};
    double m = 0.0;
    for (double a : v) m += a;
    m /= static_cast<double>(v.size());
    double q = 0.0;
    for (double a : v) q += (a - m) * (a - m);
    return {m, std::sqrt(q / static_cast<double>(v.size()))};
}

double ComparisonReport::kappa() const {
    if (samples.empty()) throw DomainError("empty comparison report");
    double s = 0.0;
    for (const auto& c : samples) s += ((1.0 - c.mse) + (1.0 - c.mae) + c.kappa001) / 3.0;
    return s / static_cast<double>(samples.size());
}

Stats ComparisonReport::mse() const { return column(samples, &SampleComparison::mse); }
Stats ComparisonReport::mae() const { return column(samples, &SampleComparison::mae); }
Stats ComparisonReport::kappa001() const { return column(samples, &SampleComparison::kappa001); }
Stats ComparisonReport::fill_deviation() const { return column(samples, &SampleComparison::fill_deviation); }
Stats ComparisonReport::compliance_ratio() const { return column(samples, &SampleComparison::compliance_ratio); }
Stats ComparisonReport::predict_seconds() const { return column(samples, &SampleComparison::predict_seconds); }

nlohmann::json ComparisonReport::to_json() const {
    auto pack = [](const Stats& s) { return nlohmann::json{{"mean", s.mean}, {"sd", s.sd}}; };
    nlohmann::json per = nlohmann::json::array();
    for (const auto& c : samples) {
        per.push_back({{"mse", c.mse},
                       {"mae", c.mae},
                       {"kappa001", c.kappa001},
                       {"fill_deviation", c.fill_deviation},
                       {"compliance_ratio", c.compliance_ratio},
                       {"predict_seconds", c.predict_seconds},
                       {"reference_seconds", c.reference_seconds}});
    }
    return {{"n", samples.size()},
            {"kappa", samples.empty() ? 0.0 : kappa()},
            {"mse", pack(mse())},
            {"mae", pack(mae())},
            {"kappa001", pack(kappa001())},
            {"fill_deviation", pack(fill_deviation())},
            {"compliance_ratio", pack(compliance_ratio())},
            {"predict_seconds", pack(predict_seconds())},
            {"timing", "wall clock per prediction, model already loaded, process start excluded"},
            {"samples", per}};
}

std::string ComparisonReport::table() const {
    std::string out;
    char line[128];
    std::snprintf(line, sizeof line, "%-18s %12s %12s\n", "indicator", "mean", "sd");
    out += line;
    auto row = [&](const char* name, const Stats& s) {
        std::snprintf(line, sizeof line, "%-18s %12.6f %12.6f\n", name, s.mean, s.sd);
        out += line;
    };
    row("mse", mse());
    row("mae", mae());
    row("kappa_0.01", kappa001());
    row("fill deviation M", fill_deviation());
    row("c_pred / c_ref", compliance_ratio());
    row("predict [s]", predict_seconds());
    std::snprintf(line, sizeof line, "%-18s %12.6f   (n = %zu)\n", "kappa", samples.empty() ? 0.0 : kappa(),
                  samples.size());
    out += line;
    return out;
}

}  // namespace pen::metrics
