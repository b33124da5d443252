// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include "vorient/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <thread>

#include "vorient/battery.hpp"
#include "vorient/indices.hpp"
#include "vorient/reliability.hpp"
#include "vorient/report.hpp"
#include "vorient/util.hpp"

namespace vorient {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::pair<Stage, std::string_view> kStageNames[] = {
    {Stage::kDesign, "design"},       {Stage::kGenerate, "generate"},
    {Stage::kCode, "code"},           {Stage::kConsensus, "consensus"},
    {Stage::kSample, "sample"},       {Stage::kReliability, "reliability"},
    {Stage::kAnalyze, "analyze"},     {Stage::kReport, "report"},
};

// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
// is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

json read_json_file(const fs::path& p) { return json::parse(util::read_text(p)); }

void write_json_file(const fs::path& p, const json& j) { util::write_atomic(p, j.dump(2) + "\n"); }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string_view to_string(Stage s) {
  for (const auto& [stage, name] : kStageNames) {
    if (stage == s) return name;
  }
  return "?";
}

Stage parse_stage(std::string_view name) {
  for (const auto& [stage, n] : kStageNames) {
    if (n == name) return stage;
  }
  throw ValidationError("unknown stage '" + std::string(name) + "'");
}

std::optional<Stage> prerequisite(Stage s) {
  switch (s) {
    case Stage::kDesign: return std::nullopt;
    case Stage::kGenerate: return Stage::kDesign;
    case Stage::kCode: return Stage::kGenerate;
    case Stage::kConsensus: return Stage::kCode;
    case Stage::kSample:
    case Stage::kReliability:
    case Stage::kAnalyze: return Stage::kConsensus;
    case Stage::kReport: return Stage::kAnalyze;
  }
  return std::nullopt;
}

bool all_mock(const StudyConfig& config) {
  return std::all_of(config.models.begin(), config.models.end(),
                     [](const ModelSpec& m) { return m.provider_kind == ProviderKind::kMock; }) &&
         std::all_of(config.coders.begin(), config.coders.end(),
                     [](const VlmCoderSpec& c) { return c.provider_kind == ProviderKind::kMock; });
}

std::vector<ImageRecord> latest_images(StudyStore& store) {
  std::map<std::string, std::size_t> slot;
  std::vector<ImageRecord> out;
  for (const auto& j : store.images().read_all()) {
    auto r = image_record_from_json(j);
    auto [it, inserted] = slot.try_emplace(r.cell_id, out.size());
    if (inserted) {
      out.push_back(std::move(r));
    } else {
      out[it->second] = std::move(r);
    }
  }
  return out;
}

namespace {

std::vector<CodingRecord> latest_by_cell_and_coder(const std::vector<json>& lines) {
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  std::vector<CodingRecord> out;
  for (const auto& j : lines) {
    auto r = coding_record_from_json(j);
    auto [it, inserted] = slot.try_emplace({r.cell_id, r.coder_id}, out.size());
    if (inserted) {
      out.push_back(std::move(r));
    } else {
      out[it->second] = std::move(r);
    }
  }
  return out;
}

}  // namespace

std::vector<CodingRecord> latest_coding(StudyStore& store) {
  return latest_by_cell_and_coder(store.coding().read_all());
}

std::vector<CodingRecord> latest_expert_codes(StudyStore& store) {
  return latest_by_cell_and_coder(store.expert_codes().read_all());
}

std::vector<ConsensusRecord> latest_consensus(StudyStore& store) {
  std::map<std::string, std::size_t> slot;
  std::vector<ConsensusRecord> out;
  for (const auto& j : store.consensus().read_all()) {
    auto r = consensus_record_from_json(j);
    auto [it, inserted] = slot.try_emplace(r.cell_id, out.size());
    if (inserted) {
      out.push_back(std::move(r));
    } else {
      out[it->second] = std::move(r);
    }
  }
  return out;
}

Pipeline::Pipeline(StudyConfig config, const fs::path& store_root, const Clock& clock,
                   PipelineOptions options)
    : design_(build_design(config)),
      store_(StudyStore::open_or_init(store_root, config)),
      clock_(clock),
      options_(std::move(options)),
      gateway_(std::make_unique<ProviderGateway>(design_, *store_, clock_)) {}

Pipeline::~Pipeline() = default;

void Pipeline::say(const std::string& line) const {
  if (options_.progress) options_.progress(line);
}

int Pipeline::workers() const {
  return options_.parallel > 0 ? options_.parallel : design_.config().providers.workers;
}

json Pipeline::run(Stage stage) {
  if (auto pre = prerequisite(stage); pre && !store_->stage_completed(std::string(to_string(*pre)))) {
    throw StageOrderError("stage '" + std::string(to_string(stage)) + "' requires stage '" +
                          std::string(to_string(*pre)) + "' to complete first");
  }
  say("stage " + std::string(to_string(stage)) + ": start");
  json summary;
  switch (stage) {
    case Stage::kDesign: summary = design_stage(); break;
    case Stage::kGenerate: summary = generate_stage(); break;
    case Stage::kCode: summary = code_stage(); break;
    case Stage::kConsensus: summary = consensus_stage(); break;
    case Stage::kSample: summary = sample_stage(); break;
    case Stage::kReliability: summary = reliability_stage(); break;
    case Stage::kAnalyze: summary = analyze_stage(); break;
    case Stage::kReport: summary = report_stage(); break;
  }
  summary["stage"] = to_string(stage);
  summary["status"] = "ok";
  store_->record_stage(std::string(to_string(stage)), summary, clock_.now_iso8601());
  say("stage " + std::string(to_string(stage)) + ": done");
  return summary;
}

json Pipeline::run_all() {
  json out = json::array();
  for (const auto& [stage, _] : kStageNames) out.push_back(run(stage));
  return out;
}

json Pipeline::design_stage() {
  std::string csv = "cell_id,country,concept,model,prompt\n";
  for (const auto& cell : design_.cells()) {
    csv += cell.cell_id + ',' + cell.country + ',' + cell.concept_id + ',' + cell.model + ',' +
           csv_escape(build_prompt(design_, cell)) + '\n';
  }
  util::write_atomic(store_->outputs_dir() / "design.csv", csv);
  return {{"cells", design_.size()},
          {"countries", design_.config().countries.size()},
          {"concepts", design_.config().concepts.size()},
          {"models", design_.config().models.size()}};
}

json Pipeline::generate_stage() {
  std::vector<const StudyCell*> todo;
  for (const auto& cell : design_.cells()) {
    if (options_.force || !gateway_->existing_image(cell.cell_id)) todo.push_back(&cell);
  }
  say("generate: " + std::to_string(todo.size()) + " of " + std::to_string(design_.size()) +
      " cell(s) to generate");
  std::vector<std::optional<ImageRecord>> results(todo.size());
  std::vector<std::string> failures(todo.size());
  std::atomic<std::size_t> done{0};
  parallel_for(todo.size(), workers(), [&](std::size_t i) {
    try {
      results[i] = gateway_->fetch_image(*todo[i], build_prompt(design_, *todo[i]));
    } catch (const ProviderFailure& e) {
      failures[i] = e.what();
    }
    const auto n = ++done;
    if (n % 50 == 0 || n == todo.size()) {
      say("generate: " + std::to_string(n) + "/" + std::to_string(todo.size()));
    }
  });
  // Commit in design order so the log is independent of scheduling.
  std::size_t generated = 0;
  std::vector<std::string> failed;
  for (std::size_t i = 0; i < todo.size(); ++i) {
    if (results[i]) {
      gateway_->commit_image(*results[i]);
      ++generated;
    } else {
      failed.push_back(todo[i]->cell_id);
    }
  }
  if (!failed.empty()) {
    throw ProviderFailure(std::to_string(failed.size()) + " image(s) failed to generate (first: " +
                              failed.front() + ": " + failures[0] +
                              "); completed images are kept, rerun 'generate'",
                          0);
  }
  return {{"generated", generated}, {"skipped", design_.size() - todo.size()}};
}

json Pipeline::code_stage() {
  const auto& config = design_.config();
  PromptRegistry registry(store_->prompts_dir());
  const std::string version = config.prompt_template_version;
  const CodingScheme scheme = default_scheme();
  const std::string prompt = render_coding_prompt(scheme, registry, version);
  store_->record_prompt_version(version);

  std::set<std::string> coded;
  if (!options_.force) {
    std::map<std::string, std::set<std::string>> by_cell;
    for (const auto& r : latest_coding(*store_)) by_cell[r.cell_id].insert(r.coder_id);
    for (const auto& [cell, coders] : by_cell) {
      if (coders.size() >= config.coders.size()) coded.insert(cell);
    }
  }
  const auto images = latest_images(*store_);
  std::map<std::string, const ImageRecord*> image_by_cell;
  for (const auto& im : images) image_by_cell[im.cell_id] = &im;

  std::vector<const ImageRecord*> todo;
  for (const auto& cell : design_.cells()) {
    auto it = image_by_cell.find(cell.cell_id);
    if (it == image_by_cell.end()) {
      throw StageOrderError("no image for cell '" + cell.cell_id + "'; rerun 'generate'");
    }
    if (!coded.count(cell.cell_id)) todo.push_back(it->second);
  }
  say("code: " + std::to_string(todo.size()) + " image(s) to code with " +
      std::to_string(config.coders.size()) + " coders");

  const CoderCall call = [&](const ImageRecord& image, const VlmCoderSpec& coder,
                             const std::string& text, int reprompt) {
    return gateway_->code_image(image, coder, text, version, reprompt);
  };
  std::vector<EnsembleResult> results(todo.size());
  std::atomic<std::size_t> done{0};
  parallel_for(todo.size(), workers(), [&](std::size_t i) {
    results[i] = code_with_ensemble(*todo[i], config.coders, scheme, prompt, version, call);
    const auto n = ++done;
    if (n % 50 == 0 || n == todo.size()) {
      say("code: " + std::to_string(n) + "/" + std::to_string(todo.size()));
    }
  });

  std::size_t committed = 0, uncodable = 0, invalid = 0, reprompts = 0;
  std::vector<std::string> provider_failed;
  for (std::size_t i = 0; i < todo.size(); ++i) {
    const auto& res = results[i];
    const bool provider_failure =
        std::any_of(res.records.begin(), res.records.end(), [](const CodingRecord& r) {
          return !r.valid && r.error.rfind("provider failure", 0) == 0;
        });
    if (provider_failure) {
      provider_failed.push_back(todo[i]->cell_id);
      continue;  // not committed; the next run retries this image
    }
    std::vector<json> raw, records;
    for (const auto& r : res.raw) {
      raw.push_back(to_json(r));
      reprompts += r.reprompt;
    }
    for (const auto& r : res.records) {
      records.push_back(to_json(r));
      invalid += r.valid ? 0 : 1;
    }
    store_->raw_outputs().append_all(raw);
    store_->coding().append_all(records);
    if (res.uncodable) {
      ++uncodable;
      store_->audit().append({{"event", "uncodable"},
                              {"cell_id", todo[i]->cell_id},
                              {"at", clock_.now_iso8601()}});
    }
    ++committed;
  }
  if (!provider_failed.empty()) {
    throw ProviderFailure(std::to_string(provider_failed.size()) +
                              " image(s) not coded because of provider failures (first: " +
                              provider_failed.front() + "); rerun 'code'",
                          0);
  }
  return {{"coded", committed},
          {"skipped", design_.size() - todo.size()},
          {"uncodable", uncodable},
          {"invalid_records", invalid},
          {"reprompts", reprompts},
          {"prompt_version", version}};
}

json Pipeline::consensus_stage() {
  const auto& q = design_.config().quality;
  std::map<std::string, std::vector<CodingRecord>> by_cell;
  for (auto& r : latest_coding(*store_)) by_cell[r.cell_id].push_back(std::move(r));

  std::set<std::string> have;
  if (!options_.force) {
    for (const auto& c : latest_consensus(*store_)) have.insert(c.cell_id);
  }
  json excluded = json::object();
  std::vector<json> fresh;
  std::size_t total = 0;
  for (const auto& cell : design_.cells()) {
    auto it = by_cell.find(cell.cell_id);
    if (it == by_cell.end()) {
      throw StageOrderError("no coding records for cell '" + cell.cell_id + "'; rerun 'code'");
    }
    const auto n_valid = std::count_if(it->second.begin(), it->second.end(),
                                       [](const CodingRecord& r) { return r.valid; });
    if (n_valid == 0) {
      excluded[cell.cell_id] = "uncodable";
      continue;
    }
    if (n_valid < 2) {
      excluded[cell.cell_id] = "insufficient_ensemble";
      continue;
    }
    ++total;
    if (have.count(cell.cell_id)) continue;
    fresh.push_back(to_json(consensus(it->second, q.entropy_variant)));
  }
  // Exclusions are audited once per cell and reason.
  std::set<std::pair<std::string, std::string>> audited;
  for (const auto& a : store_->audit().read_all()) {
    if (a.value("event", "") == "excluded") {
      audited.insert({a.at("cell_id").get<std::string>(), a.value("reason", "")});
    }
  }
  for (const auto& [cell, reason] : excluded.items()) {
    if (audited.count({cell, reason.get<std::string>()})) continue;
    store_->audit().append({{"event", "excluded"},
                            {"cell_id", cell},
                            {"reason", reason},
                            {"at", clock_.now_iso8601()}});
  }
  store_->consensus().append_all(fresh);
  write_json_file(store_->outputs_dir() / "excluded.json", excluded);
  return {{"consensus", total}, {"new", fresh.size()}, {"excluded", excluded.size()}};
}

json Pipeline::sample_stage() {
  const auto& q = design_.config().quality;
  const int budget = options_.budget.value_or(q.validation_budget);
  if (fs::exists(store_->queue_path()) && !options_.force) {
    const auto doc = read_json_file(store_->queue_path());
    if (doc.value("budget", -1) == budget) {
      return {{"entries", doc.at("entries").size()}, {"budget", budget}, {"skipped", true}};
    }
    throw ValidationError("a validation queue with budget " +
                          std::to_string(doc.value("budget", -1)) +
                          " already exists; use --force to rebuild it");
  }
  const auto records = latest_consensus(*store_);
  auto entries = prioritize_for_validation(records, q.high_threshold, q.medium_threshold, budget);
  std::size_t forced = 0;
  const auto excluded_path = store_->outputs_dir() / "excluded.json";
  if (fs::exists(excluded_path)) {
    const auto excluded = read_json_file(excluded_path);
    for (const auto& [cell, reason] : excluded.items()) {
      if (reason != "insufficient_ensemble") continue;
      ValidationQueueEntry e;
      e.cell_id = cell;
      e.h_ext = std::numeric_limits<double>::quiet_NaN();
      e.priority = Priority::kHigh;
      e.forced = true;
      entries.push_back(std::move(e));
      ++forced;
    }
  }
  json list = json::array();
  std::size_t high = 0, medium = 0;
  for (const auto& e : entries) {
    list.push_back(to_json(e));
    if (!e.forced) (e.priority == Priority::kHigh ? high : medium) += e.priority != Priority::kLow;
  }
  write_json_file(store_->queue_path(), {{"budget", budget},
                                         {"high_threshold", q.high_threshold},
                                         {"medium_threshold", q.medium_threshold},
                                         {"entries", list}});
  return {{"entries", entries.size()},
          {"budget", budget},
          {"high", high},
          {"medium", medium},
          {"forced", forced}};
}

json Pipeline::reliability_stage() {
  const auto& config = design_.config();
  const auto consensus_records = latest_consensus(*store_);
  const auto vlm = latest_coding(*store_);
  const auto experts = latest_expert_codes(*store_);
  std::vector<std::string> coders;
  for (const auto& c : config.coders) coders.push_back(c.id);
  const auto summary = summarize_reliability(consensus_records, vlm, experts, coders,
                                             default_scheme(), config.count_tolerance);
  write_json_file(store_->outputs_dir() / "reliability.json", to_json(summary));

  std::string csv = "scope,dimension,alpha,agreement,n_units\n";
  for (const auto& [d, a] : summary.inter_coder_alpha) {
    csv += "inter_coder," + std::string(dimension_id(d)) + ',' + (a ? util::fixed(*a, 4) : "") +
           ",,\n";
  }
  if (summary.ai_human) {
    for (const auto& d : summary.ai_human->dimensions) {
      csv += "ai_human," + std::string(dimension_id(d.dimension)) + ',' +
             (d.alpha ? util::fixed(*d.alpha, 4) : "") + ',' +
             (d.agreement ? util::fixed(*d.agreement, 4) : "") + ',' + std::to_string(d.n_units) +
             '\n';
    }
  }
  util::write_atomic(store_->outputs_dir() / "reliability.csv", csv);
  return {{"images", consensus_records.size()}, {"validated", summary.n_validated}};
}

json Pipeline::analyze_stage() {
  const auto consensus_records = latest_consensus(*store_);
  const auto indices = compute_indices(consensus_records);
  json index_json = json::array();
  for (const auto& r : indices) index_json.push_back(to_json(r));
  write_json_file(store_->outputs_dir() / "indices.json", index_json);
  util::write_atomic(store_->outputs_dir() / "indices.csv", index_records_csv(indices));

  json aggregates = json::object();
  for (const auto& [name, grouping] :
       {std::pair{"country", Grouping::kByCountry}, std::pair{"region", Grouping::kWestEast},
        std::pair{"concept", Grouping::kByConcept}, std::pair{"model", Grouping::kByModel}}) {
    json list = json::array();
    for (const auto& a : aggregate_indices(indices, design_, grouping)) list.push_back(to_json(a));
    aggregates[name] = list;
  }
  write_json_file(store_->outputs_dir() / "aggregates.json", aggregates);

  std::vector<std::string> excluded;
  const auto excluded_path = store_->outputs_dir() / "excluded.json";
  if (fs::exists(excluded_path)) {
    const auto doc = read_json_file(excluded_path);
    for (const auto& [cell, _] : doc.items()) excluded.push_back(cell);
  }
  const auto battery = run_paper_battery(consensus_records, indices, design_, excluded);
  write_json_file(store_->outputs_dir() / "battery.json", to_json(battery));
  util::write_atomic(store_->outputs_dir() / "battery.csv", battery_csv(battery));
  std::size_t undefined = 0;
  for (const auto& r : battery.rows) undefined += std::isfinite(r.result.statistic) ? 0 : 1;
  return {{"images", indices.size()},
          {"battery_rows", battery.rows.size()},
          {"undefined_rows", undefined},
          {"max_political", indices.front().normalization.max_political},
          {"max_cultural", indices.front().normalization.max_cultural}};
}

json Pipeline::report_stage() {
  const auto bundle = emit_reports(*store_, design_);
  json files = json::array();
  for (const auto& f : bundle.files) files.push_back(f.filename().string());
  return {{"files", files}};
}

}  // namespace vorient
