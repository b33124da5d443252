// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

// vorient: run the audit pipeline stage by stage against a study store.
// Summaries go to stdout as JSON lines, progress to stderr.
// Exit codes: 0 success, 1 usage/config/validation/stage-order error,
// 2 provider failure after retries.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vorient/vorient.h"

namespace {

using nlohmann::json;

struct Globals {
  std::string config;
  std::string store = "study";
  bool mock = false;
  std::optional<long long> seed;
  int parallel = 0;
  bool force = false;
};

int exit_code(vorient_status s) {
  if (s == VORIENT_OK) return 0;
  return s == VORIENT_PROVIDER ? 2 : 1;
}

int report_failure(vorient_status s) {
  std::cerr << "vorient: " << vorient_status_name(s) << " error: " << vorient_last_error() << "\n";
  return exit_code(s);
}

void log_line(const char* line, void*) { std::cerr << line << "\n"; }

struct StudyHandle {
  vorient_study* study = nullptr;
  ~StudyHandle() { vorient_study_close(study); }
};

vorient_status open_study(const Globals& g, StudyHandle& h) {
  json o = {{"store", g.store}, {"mock", g.mock}, {"parallel", g.parallel}, {"force", g.force}};
  if (!g.config.empty()) o["config"] = g.config;
  if (g.seed) {
    if (g.mock) {
      o["seed"] = *g.seed;
    } else {
      std::cerr << "vorient: warning: --seed only applies with --mock; ignored\n";
    }
  }
  const vorient_status s = vorient_study_open(o.dump().c_str(), &h.study);
  if (s == VORIENT_OK) vorient_study_set_log(h.study, log_line, nullptr);
  return s;
}

int run_stage(const Globals& g, const std::string& stage, const json& args) {
  StudyHandle h;
  if (auto s = open_study(g, h); s != VORIENT_OK) return report_failure(s);
  char* summary = nullptr;
  const vorient_status s = vorient_study_run(h.study, stage.c_str(), args.dump().c_str(), &summary);
  if (s != VORIENT_OK) return report_failure(s);
  const json doc = json::parse(summary);
  vorient_free(summary);
  if (doc.is_array()) {
    for (const auto& line : doc) std::cout << line.dump() << "\n";
  } else {
    std::cout << doc.dump() << "\n";
  }
  std::cout.flush();
  return 0;
}

int serve(const Globals& g, const std::string& host, int port, const std::string& static_dir,
          std::string token, const std::vector<std::string>& coders) {
  if (token.empty()) {
    if (const char* env = std::getenv("VORIENT_STUDY_TOKEN")) token = env;
  }
  if (token.empty()) {
    std::cerr << "vorient: serve needs a study token (--token or VORIENT_STUDY_TOKEN)\n";
    return 1;
  }
  // Signals are taken synchronously below; block them before any thread starts.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  StudyHandle h;
  if (auto s = open_study(g, h); s != VORIENT_OK) return report_failure(s);
  json o = {{"host", host}, {"port", port}, {"token", token}, {"coders", coders}};
  if (!static_dir.empty()) o["static_dir"] = static_dir;
  vorient_server* server = nullptr;
  int bound = 0;
  if (auto s = vorient_server_start(h.study, o.dump().c_str(), &server, &bound); s != VORIENT_OK) {
    return report_failure(s);
  }
  std::cout << json{{"stage", "serve"}, {"status", "listening"}, {"host", host}, {"port", bound}}
                   .dump()
            << std::endl;
  std::cerr << "serving on http://" << host << ":" << bound << " (Ctrl-C to stop)\n";
  int sig = 0;
  sigwait(&signals, &sig);
  vorient_server_free(server);
  std::cout << json{{"stage", "serve"}, {"status", "stopped"}}.dump() << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audit text-to-image models for visual orientalism."};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(vorient_version()));

  Globals g;
  app.add_option("--config", g.config, "Study config JSON (default: built-in 12x11x3 design)");
  app.add_option("--store", g.store, "Study store directory")->capture_default_str();
  app.add_flag("--mock", g.mock, "Use offline mock providers for every model and coder");
  app.add_option("--seed", g.seed, "Mock seed (overrides the config seed; --mock only)");
  app.add_option("--parallel", g.parallel, "Provider worker threads (0: config value)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--force", g.force, "Redo completed work");

  const std::vector<std::pair<std::string, std::string>> stages = {
      {"design", "Write the factorial design (outputs/design.csv)"},
      {"generate", "Generate one image per design cell"},
      {"code", "Code every image with the VLM ensemble"},
      {"consensus", "Aggregate ensemble codes and score uncertainty"},
      {"reliability", "Inter-coder and AI-human reliability"},
      {"analyze", "Indices, aggregates and the test battery"},
      {"report", "Write report tables and figure data"},
      {"run-all", "Every stage in order"},
  };
  std::string chosen;
  for (const auto& [name, help] : stages) {
    app.add_subcommand(name, help)->callback([&chosen, n = name] { chosen = n; });
  }

  int budget = -1;
  auto* sample = app.add_subcommand("sample", "Build the expert validation queue");
  sample->add_option("--budget", budget, "Queue size (default: quality.validation_budget)")
      ->check(CLI::NonNegativeNumber);
  sample->callback([&] { chosen = "sample"; });

  std::string host = "127.0.0.1", static_dir, token;
  int port = 8080;
  std::vector<std::string> coders;
  auto* srv = app.add_subcommand("serve", "Serve the expert validation API");
  srv->add_option("--host", host)->capture_default_str();
  srv->add_option("--port", port, "0 picks a free port")->capture_default_str();
  srv->add_option("--static-dir", static_dir, "Built validation UI to serve at /");
  srv->add_option("--token", token, "Study token (default: $VORIENT_STUDY_TOKEN)");
  srv->add_option("--coders", coders, "Coder ids to register up front")->delimiter(',');
  srv->callback([&] { chosen = "serve"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "vorient: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  if (chosen == "serve") return serve(g, host, port, static_dir, token, coders);
  json args = json::object();
  if (chosen == "sample" && budget >= 0) args["budget"] = budget;
  return run_stage(g, chosen, args);
}
