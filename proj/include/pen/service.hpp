// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "pen/evaluators.hpp"
#include "pen/model_io.hpp"

namespace pen::service {

inline constexpr int kApiVersion = 1;

struct Response {
    int status = 200;
    std::string body;  // JSON, always carries "v"
};

struct ServiceOptions {
    int max_concurrent_inferences = 4;
    eval::QualityCoefficients coefficients;  // for the losses reported with each prediction
    double fill_min = 0.2;
    double fill_max = 0.8;
    std::function<void(const std::string&)> log;
};

/// Request handling without the network layer. Thread-safe; the model can be swapped while
/// requests are in flight (each request keeps the model it started with).
class Service {
public:
    explicit Service(ServiceOptions options = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Loads and installs a model file; throws LoadError and keeps the previous model on failure.
    void load(const std::filesystem::path& path);
    void set_model(std::shared_ptr<const LoadedModel> model);
    [[nodiscard]] std::shared_ptr<const LoadedModel> model() const;

    /// POST /predict body {"loads": [{"node_x", "node_y", "fx", "fy"}], "fill", "level"}.
    /// node_x counts level-1 node columns from the clamped left edge, node_y rows from the top.
    [[nodiscard]] Response predict(std::string_view body) const;
    [[nodiscard]] Response model_summary() const;
    [[nodiscard]] Response health() const;

    void log(const std::string& message) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// HTTP front end (cpp-httplib) for a Service.
class Server {
public:
    explicit Server(Service& service);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds; port 0 picks a free port. Returns the bound port, throws std::runtime_error on failure.
    int bind(const std::string& host, int port);
    /// Serves until stop() is called.
    void listen();
    void stop();
    /// Reloads the model when the file's size or modification time changes (polled).
    void watch(const std::filesystem::path& model_path, std::chrono::milliseconds interval);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace pen::service
