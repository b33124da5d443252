// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include "vorient/vorient.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "vorient/indices.hpp"
#include "vorient/pipeline.hpp"
#include "vorient/reliability.hpp"
#include "vorient/stats.hpp"
#include "vorient/validation_http.hpp"

#ifndef VORIENT_VERSION
#define VORIENT_VERSION "0.0.0"
#endif

using nlohmann::json;

struct vorient_study {
  std::unique_ptr<vorient::Clock> clock;
  std::unique_ptr<vorient::Pipeline> pipeline;
  vorient_log_fn log = nullptr;
  void* log_user = nullptr;
};

struct vorient_server {
  std::unique_ptr<vorient::ValidationService> service;
  std::unique_ptr<vorient::ValidationServer> server;
};

namespace {

thread_local std::string last_error;

vorient_status fail(vorient_status s, const std::string& message) {
  last_error = message;
  return s;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
vorient_status guard(Fn&& fn) {
  try {
    last_error.clear();
    fn();
    return VORIENT_OK;
  } catch (const vorient::Error& e) {
    return fail(static_cast<vorient_status>(e.code()), e.what());
  } catch (const json::exception& e) {
    return fail(VORIENT_PARSE, e.what());
  } catch (const std::exception& e) {
    return fail(VORIENT_INTERNAL, e.what());
  } catch (...) {
    return fail(VORIENT_INTERNAL, "unknown error");
  }
}

json parse_options(const char* text) {
  if (text == nullptr || *text == '\0') return json::object();
  auto j = json::parse(text);
  if (!j.is_object()) throw vorient::ValidationError("options must be a JSON object");
  return j;
}

char* copy_out(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p == nullptr) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

}  // namespace

extern "C" {

const char* vorient_version(void) { return VORIENT_VERSION; }

const char* vorient_last_error(void) { return last_error.c_str(); }

const char* vorient_status_name(vorient_status s) {
  switch (s) {
    case VORIENT_OK: return "ok";
    case VORIENT_INVALID_ARGUMENT: return "invalid_argument";
    case VORIENT_CONFIG: return "config";
    case VORIENT_VALIDATION: return "validation";
    case VORIENT_NOT_FOUND: return "not_found";
    case VORIENT_STAGE_ORDER: return "stage_order";
    case VORIENT_STORE: return "store";
    case VORIENT_PROVIDER: return "provider";
    case VORIENT_DEGENERATE: return "degenerate";
    case VORIENT_PARSE: return "parse";
    case VORIENT_INTERNAL: return "internal";
  }
  return "unknown";
}

void vorient_free(char* p) { std::free(p); }

vorient_status vorient_study_open(const char* options_json, vorient_study** out) {
  if (out == nullptr) return fail(VORIENT_INVALID_ARGUMENT, "out is null");
  *out = nullptr;
  return guard([&] {
    const json o = parse_options(options_json);
    vorient::StudyConfig config = o.contains("config")
                                      ? vorient::load_study_config(o.at("config").get<std::string>())
                                      : vorient::default_study_config();
    if (o.value("mock", false)) {
      vorient::force_mock(config);
      if (o.contains("seed")) config.seed = o.at("seed").get<std::int64_t>();
    }
    auto study = std::make_unique<vorient_study>();
    // Mock runs are stamped with a fixed instant so reruns are byte-identical.
    if (vorient::all_mock(config)) {
      study->clock = std::make_unique<vorient::FixedClock>(std::string(vorient::kMockInstant));
    } else {
      study->clock = std::make_unique<vorient::SystemClock>();
    }
    vorient::PipelineOptions po;
    po.parallel = o.value("parallel", 0);
    po.force = o.value("force", false);
    if (po.parallel < 0) throw vorient::ValidationError("parallel must be >= 0");
    study->pipeline = std::make_unique<vorient::Pipeline>(
        std::move(config), o.value("store", std::string("study")), *study->clock, std::move(po));
    *out = study.release();
  });
}

void vorient_study_close(vorient_study* study) { delete study; }

void vorient_study_set_log(vorient_study* study, vorient_log_fn fn, void* user) {
  if (study == nullptr) return;
  study->log = fn;
  study->log_user = user;
  if (fn == nullptr) {
    study->pipeline->options().progress = nullptr;
  } else {
    study->pipeline->options().progress = [study](const std::string& line) {
      study->log(line.c_str(), study->log_user);
    };
  }
}

vorient_status vorient_study_run(vorient_study* study, const char* stage, const char* args_json,
                                 char** summary_json) {
  if (study == nullptr || stage == nullptr) {
    return fail(VORIENT_INVALID_ARGUMENT, "study and stage are required");
  }
  if (summary_json != nullptr) *summary_json = nullptr;
  return guard([&] {
    const json args = parse_options(args_json);
    auto& opts = study->pipeline->options();
    const auto saved = opts;
    if (args.contains("force")) opts.force = args.at("force").get<bool>();
    if (args.contains("budget")) {
      const int b = args.at("budget").get<int>();
      if (b < 0) throw vorient::ValidationError("budget must be >= 0");
      opts.budget = b;
    }
    json summary;
    try {
      summary = std::string_view(stage) == "run-all"
                    ? study->pipeline->run_all()
                    : study->pipeline->run(vorient::parse_stage(stage));
    } catch (...) {
      opts = saved;
      throw;
    }
    opts = saved;
    if (summary_json != nullptr) *summary_json = copy_out(summary.dump());
  });
}

vorient_status vorient_server_start(vorient_study* study, const char* options_json,
                                    vorient_server** out, int* port) {
  if (study == nullptr || out == nullptr) {
    return fail(VORIENT_INVALID_ARGUMENT, "study and out are required");
  }
  *out = nullptr;
  return guard([&] {
    const json o = parse_options(options_json);
    vorient::ServerOptions so;
    so.host = o.value("host", so.host);
    so.port = o.value("port", so.port);
    so.token = o.value("token", std::string{});
    if (o.contains("static_dir")) so.static_dir = o.at("static_dir").get<std::string>();
    auto& p = *study->pipeline;
    auto server = std::make_unique<vorient_server>();
    server->service = std::make_unique<vorient::ValidationService>(p.store(), p.design(),
                                                                    *study->clock);
    for (const auto& id : o.value("coders", json::array())) {
      server->service->register_session(id.get<std::string>(), "");
    }
    server->server = std::make_unique<vorient::ValidationServer>(*server->service, std::move(so));
    const int bound = server->server->start();
    if (port != nullptr) *port = bound;
    *out = server.release();
  });
}

vorient_status vorient_server_wait(vorient_server* server) {
  if (server == nullptr) return fail(VORIENT_INVALID_ARGUMENT, "server is null");
  return guard([&] { server->server->wait(); });
}

void vorient_server_stop(vorient_server* server) {
  if (server == nullptr) return;
  server->server->stop();
}

void vorient_server_free(vorient_server* server) {
  if (server == nullptr) return;
  server->server->stop();
  delete server;
}

double vorient_voi(double psi, double cei) { return vorient::voi(psi, cei); }

vorient_status vorient_student_t_summary(double n1, double mean1, double sd1, double n2,
                                         double mean2, double sd2, double* t, double* df,
                                         double* p, double* cohens_d) {
  return guard([&] {
    const auto r = vorient::stats::student_t(vorient::stats::SummaryStats{"a", n1, mean1, sd1},
                                      vorient::stats::SummaryStats{"b", n2, mean2, sd2});
    if (t) *t = r.statistic;
    if (df) *df = r.df1;
    if (p) *p = r.p_value;
    if (cohens_d) *cohens_d = r.effect_size ? r.effect_size->value : std::nan("");
  });
}

vorient_status vorient_krippendorff_alpha(const double* values, size_t units, size_t coders,
                                          vorient_level level, double* alpha) {
  if (values == nullptr || alpha == nullptr) {
    return fail(VORIENT_INVALID_ARGUMENT, "values and alpha are required");
  }
  if (level < VORIENT_NOMINAL || level > VORIENT_INTERVAL) {
    return fail(VORIENT_INVALID_ARGUMENT, "unknown measurement level");
  }
  return guard([&] {
    vorient::ReliabilityMatrix m;
    m.level = static_cast<vorient::MeasurementLevel>(level);
    for (size_t c = 0; c < coders; ++c) m.coders.push_back("c" + std::to_string(c));
    for (size_t u = 0; u < units; ++u) {
      std::vector<std::optional<double>> row(coders);
      for (size_t c = 0; c < coders; ++c) {
        const double v = values[u * coders + c];
        if (!std::isnan(v)) row[c] = v;
      }
      m.add_unit("u" + std::to_string(u), std::move(row));
    }
    *alpha = vorient::krippendorff_alpha(m).alpha;
  });
}

}  // extern "C"
