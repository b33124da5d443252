// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include "vorient/validation_http.hpp"

#include <condition_variable>
#include <thread>

#include <httplib.h>

namespace vorient {

using nlohmann::json;

struct ValidationServer::Impl {
  ValidationService& service;
  ServerOptions options;
  httplib::Server server;
  std::thread thread;
  int bound_port = 0;
  std::mutex mu;
  std::mutex stop_mu;
  std::condition_variable stopped_cv;
  bool stopped = false;

  Impl(ValidationService& s, ServerOptions o) : service(s), options(std::move(o)) {}
};

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

// Runs a handler, mapping library errors onto HTTP statuses.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const json::exception& e) {
    send_error(res, 400, std::string("malformed request body: ") + e.what());
  } catch (const InvalidCodesError& e) {
    send_json(res, 422, {{"error", e.what()}, {"dimensions", e.dimensions()}});
  } catch (const LookupError& e) {
    send_error(res, 404, e.what());
  } catch (const ValidationError& e) {
    send_error(res, 422, e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

}  // namespace

ValidationServer::ValidationServer(ValidationService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  if (impl_->options.token.empty()) throw ConfigError("the validation server needs a study token");
  auto& srv = impl_->server;
  auto* impl = impl_.get();

  srv.set_pre_routing_handler([impl](const httplib::Request& req, httplib::Response& res) {
    if (req.path.rfind("/api/", 0) != 0) return httplib::Server::HandlerResponse::Unhandled;
    if (req.get_header_value(kStudyTokenHeader) != impl->options.token) {
      send_error(res, 401, "missing or wrong study token");
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });

  srv.Post("/api/sessions", [impl](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = json::parse(req.body);
      const auto s = impl->service.register_session(body.at("coder_id").get<std::string>(),
                                                    body.value("display_name", ""));
      send_json(res, 200, to_json(s));
    });
  });

  srv.Get("/api/scheme", [impl](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, impl->service.scheme()); });
  });

  srv.Get("/api/queue", [impl](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.has_param("coder")) throw ValidationError("query parameter 'coder' is required");
      const auto coder = req.get_param_value("coder");
      send_json(res, 200, {{"coder_id", coder}, {"entries", impl->service.queue_for(coder)}});
    });
  });

  srv.Get(R"(/api/images/([^/]+))", [impl](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto [bytes, mime] = impl->service.image(req.matches[1].str());
      res.status = 200;
      res.set_content(std::string(bytes.begin(), bytes.end()), mime);
    });
  });

  srv.Post("/api/codes", [impl](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = json::parse(req.body);
      ExpertCodeSubmission sub;
      sub.cell_id = body.at("cell_id").get<std::string>();
      sub.coder_id = body.at("coder_id").get<std::string>();
      sub.codes = body.at("codes");
      sub.note = body.value("note", "");
      const auto ack = impl->service.submit(sub);
      send_json(res, 200, {{"record_id", ack.record_id}, {"superseded", ack.superseded_previous}});
    });
  });

  srv.Get("/api/progress", [impl](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, to_json(impl->service.progress())); });
  });

  if (impl_->options.static_dir) {
    if (!srv.set_mount_point("/", impl_->options.static_dir->string())) {
      throw ConfigError("static directory '" + impl_->options.static_dir->string() +
                        "' does not exist");
    }
  }
}

ValidationServer::~ValidationServer() { stop(); }

int ValidationServer::start() {
  auto& srv = impl_->server;
  const auto& o = impl_->options;
  if (o.port == 0) {
    impl_->bound_port = srv.bind_to_any_port(o.host);
  } else {
    impl_->bound_port = srv.bind_to_port(o.host, o.port) ? o.port : -1;
  }
  if (impl_->bound_port <= 0) {
    throw ConfigError("cannot bind " + o.host + ":" + std::to_string(o.port));
  }
  impl_->thread = std::thread([this] {
    impl_->server.listen_after_bind();
    std::lock_guard lock(impl_->mu);
    impl_->stopped = true;
    impl_->stopped_cv.notify_all();
  });
  impl_->server.wait_until_ready();
  return impl_->bound_port;
}

void ValidationServer::wait() {
  std::unique_lock lock(impl_->mu);
  impl_->stopped_cv.wait(lock, [this] { return impl_->stopped; });
}

void ValidationServer::stop() {
  if (!impl_) return;
  std::lock_guard lock(impl_->stop_mu);
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int ValidationServer::port() const { return impl_->bound_port; }

}  // namespace vorient
