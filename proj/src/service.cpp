// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include "pen/service.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <semaphore>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "pen/errors.hpp"
#include "pen/fem.hpp"

namespace pen::service {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RequestError {
    int status;
    std::string field;
    std::string message;
};

Response reply(int status, json body) {
    body["v"] = kApiVersion;
    return {status, body.dump()};
}

Response error_reply(const RequestError& e) {
    json body{{"error", e.message}};
    if (!e.field.empty()) body["field"] = e.field;
    return reply(e.status, std::move(body));
}

[[noreturn]] void bad(const std::string& field, const std::string& message, int status = 400) {
    throw RequestError{status, field, message};
}

double number(const json& obj, const std::string& key, const std::string& field) {
    if (!obj.contains(key)) bad(field, "missing field");
    const auto& v = obj.at(key);
    if (!v.is_number()) bad(field, "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) bad(field, "must be finite");
    return d;
}

int integer(const json& obj, const std::string& key, const std::string& field) {
    if (!obj.contains(key)) bad(field, "missing field");
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) bad(field, "must be an integer");
    return v.get<int>();
}

}  // namespace

struct Service::Impl {
    ServiceOptions options;
    mutable std::mutex mutex;
    std::shared_ptr<const LoadedModel> model;
    mutable std::counting_semaphore<1024> slots;

    explicit Impl(ServiceOptions o)
        : options(std::move(o)), slots(std::clamp(options.max_concurrent_inferences, 1, 1024)) {}
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}
Service::~Service() = default;

void Service::load(const fs::path& path) {
    auto loaded = std::make_shared<const LoadedModel>(load_model(path));
    set_model(std::move(loaded));
}

void Service::set_model(std::shared_ptr<const LoadedModel> model) {
    const std::lock_guard lock(impl_->mutex);
    impl_->model = std::move(model);
}

std::shared_ptr<const LoadedModel> Service::model() const {
    const std::lock_guard lock(impl_->mutex);
    return impl_->model;
}

void Service::log(const std::string& message) const {
    if (impl_->options.log) impl_->options.log(message);
}

Response Service::health() const {
    if (!model()) return reply(503, {{"status", "loading"}, {"error", "model not loaded"}});
    return reply(200, {{"status", "ok"}});
}

Response Service::model_summary() const {
    const auto m = model();
    if (!m) return reply(503, {{"error", "model not loaded"}});
    return reply(200, m->manifest.summary());
}

Response Service::predict(std::string_view body) const {
    const auto m = model();
    if (!m) return reply(503, {{"error", "model not loaded"}});
    const auto& arch = m->manifest.architecture;
    const int d_inp = arch.d_inp;
    try {
        json req;
        try {
            req = json::parse(body);
        } catch (const json::parse_error& e) {
            bad("body", std::string("malformed JSON: ") + e.what());
        }
        if (!req.is_object()) bad("body", "must be a JSON object");
        for (const auto& [key, value] : req.items()) {
            if (key == "kinematic" || key == "rk" || key == "supports") {
                bad(key, "kinematic boundary conditions are fixed to the left-edge clamp");
            }
            if (key != "v" && key != "loads" && key != "fill" && key != "level") bad(key, "unknown field");
        }
        if (req.contains("v") && (!req["v"].is_number_integer() || req["v"].get<int>() != kApiVersion)) {
            bad("v", "unsupported request version");
        }

        const double fill = number(req, "fill", "fill");
        if (fill < impl_->options.fill_min || fill > impl_->options.fill_max) {
            bad("fill", "must lie in [" + std::to_string(impl_->options.fill_min) + ", " +
                            std::to_string(impl_->options.fill_max) + "]");
        }
        int level = std::min(4, arch.max_level);
        if (req.contains("level")) {
            level = integer(req, "level", "level");
            if (level < 1 || level > arch.max_level) {
                bad("level", "must lie in [1, " + std::to_string(arch.max_level) + "]");
            }
        }

        if (!req.contains("loads") || !req["loads"].is_array()) bad("loads", "must be an array");
        const auto& loads = req["loads"];
        if (loads.empty()) bad("loads", "at least one force is required");
        InputSample sample{BoundaryConditionSet::left_edge_clamp(d_inp), fill};
        bool any_force = false;
        for (std::size_t i = 0; i < loads.size(); ++i) {
            const std::string at = "loads[" + std::to_string(i) + "]";
            const auto& l = loads[i];
            if (!l.is_object()) bad(at, "must be an object");
            for (const auto& [key, value] : l.items()) {
                if (key != "node_x" && key != "node_y" && key != "fx" && key != "fy") bad(at + "." + key, "unknown field");
            }
            const int nx = integer(l, "node_x", at + ".node_x");
            const int ny = integer(l, "node_y", at + ".node_y");
            if (nx < 0 || nx > d_inp) bad(at + ".node_x", "must lie in [0, " + std::to_string(d_inp) + "]");
            if (ny < 0 || ny > d_inp) bad(at + ".node_y", "must lie in [0, " + std::to_string(d_inp) + "]");
            const double fx = number(l, "fx", at + ".fx");
            const double fy = number(l, "fy", at + ".fy");
            if (nx == 0) bad(at + ".node_x", "load on a clamped node", 422);
            sample.bc.rsx(ny, nx) += fx;
            sample.bc.rsy(ny, nx) += fy;
            any_force = any_force || fx != 0.0 || fy != 0.0;
        }
        if (!any_force) bad("loads", "at least one non-zero force is required");

        impl_->slots.acquire();
        struct Release {
            std::counting_semaphore<1024>& s;
            ~Release() { s.release(); }
        } release{impl_->slots};

        const auto t0 = std::chrono::steady_clock::now();
        const DensityField x = m->predictor.predict(sample, level);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        const fem::FemProblem problem(x.level(), sample.bc);
        const auto ev = eval::evaluate_geometry(x.values(), problem, fill, impl_->options.coefficients);
        return reply(200, {{"d", x.d()},
                           {"level", level},
                           {"densities", std::vector<double>(x.values().begin(), x.values().end())},
                           {"losses", {{"c", ev.losses.c}, {"m", ev.losses.m}, {"f", ev.losses.f}, {"p", ev.losses.p}}},
                           {"quality", ev.quality},
                           {"inference_ms", ms}});
    } catch (const RequestError& e) {
        return error_reply(e);
    } catch (const SolverError& e) {
        return error_reply({422, "loads", e.what()});
    }
}

// ---------------------------------------------------------------------------------------------
// HTTP

struct Server::Impl {
    Service& service;
    httplib::Server http;
    std::jthread watcher;

    explicit Impl(Service& s) : service(s) {}
};

Server::Server(Service& service) : impl_(std::make_unique<Impl>(service)) {
    auto& http = impl_->http;
    auto& svc = impl_->service;
    http.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, HEAD, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
    auto send = [](httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_content(r.body, "application/json");
    };
    http.Post("/predict", [&svc, send](const httplib::Request& req, httplib::Response& res) {
        send(res, svc.predict(req.body));
    });
    http.Get("/model", [&svc, send](const httplib::Request&, httplib::Response& res) { send(res, svc.model_summary()); });
    http.Get("/health", [&svc, send](const httplib::Request&, httplib::Response& res) { send(res, svc.health()); });
    http.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
    const int bound = port == 0 ? impl_->http.bind_to_any_port(host) : (impl_->http.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void Server::listen() { impl_->http.listen_after_bind(); }

void Server::stop() {
    if (impl_->watcher.joinable()) {
        impl_->watcher.request_stop();
        impl_->watcher.join();
    }
    impl_->http.stop();
}

void Server::watch(const fs::path& model_path, std::chrono::milliseconds interval) {
    using Stamp = std::pair<std::uintmax_t, fs::file_time_type>;
    auto stamp = [model_path]() -> Stamp {
        std::error_code ec;
        const auto size = fs::file_size(model_path, ec);
        if (ec) return {0, {}};
        const auto time = fs::last_write_time(model_path, ec);
        return ec ? Stamp{0, {}} : Stamp{size, time};
    };
    impl_->watcher = std::jthread([this, model_path, interval, stamp, last = stamp()](std::stop_token stop) mutable {
        std::mutex m;
        std::condition_variable_any cv;
        while (!stop.stop_requested()) {
            {
                std::unique_lock lock(m);
                cv.wait_for(lock, stop, interval, [] { return false; });
            }
            if (stop.stop_requested()) break;
            const auto now = stamp();
            if (now == last || now.first == 0) continue;
            last = now;
            try {
                impl_->service.load(model_path);
                impl_->service.log("reloaded " + model_path.string() + " (" +
                                   impl_->service.model()->manifest.architecture_hash.substr(0, 12) + ")");
            } catch (const std::exception& e) {
                impl_->service.log("reload of " + model_path.string() + " failed, keeping the previous model: " + e.what());
            }
        }
    });
}

}  // namespace pen::service
