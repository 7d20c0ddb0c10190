#include "whynot/scenario.hpp"

#include <fstream>
#include <sstream>

#include "whynot/baseline_wn.hpp"
#include "whynot/error.hpp"
#include "whynot/explain.hpp"

namespace whynot {

namespace {

std::ifstream open(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorCode::ConfigError, "cannot open '" + file.string() + "'");
  return in;
}

Json parse_file(const std::filesystem::path& file) {
  auto in = open(file);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::ParseError, file.string() + ": " + e.what());
  }
}

const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorCode::ConfigError, where + ": missing key '" + key + "'");
  return j.at(key);
}

std::filesystem::path resolve(const std::filesystem::path& base, const Json& j, const std::string& where) {
  if (!j.is_string()) fail(ErrorCode::ConfigError, where + " must be a path string");
  std::filesystem::path p = j.get<std::string>();
  return p.is_absolute() ? p : base / p;
}

}  // namespace

Value load_relation(const std::filesystem::path& file, const Type& element_type) {
  auto in = open(file);
  BagBuilder bag;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = file.string() + ":" + std::to_string(number);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      fail(ErrorCode::ParseError, where + ": " + e.what());
    }
    if (!j.is_object()) fail(ErrorCode::ParseError, where + ": expected a JSON object");
    try {
      bag.add(value_from_json(j, element_type));
    } catch (const Error& e) {
      fail(ErrorCode::SchemaViolation, where + ": " + e.what());
    }
  }
  return std::move(bag).build();
}

Scenario load_scenario(const std::filesystem::path& file) {
  const Json config = parse_file(file);
  const auto base = file.parent_path();
  const std::string where = file.string();

  Scenario s;
  const Json& data = require(config, "data", where);
  if (!data.is_object() || data.empty()) fail(ErrorCode::ConfigError, where + ": 'data' must be a non-empty object");
  for (const auto& [name, entry] : data.items()) {
    const std::string ctx = where + ": data." + name;
    TypePtr element;
    try {
      element = type_from_json(parse_file(resolve(base, require(entry, "schema", ctx), ctx + ".schema")));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ParseError || e.code() == ErrorCode::ConfigError) throw;
      fail(ErrorCode::ConfigError, ctx + ".schema: " + e.what());
    }
    if (!element->is_tuple()) fail(ErrorCode::ConfigError, ctx + ".schema must describe a tuple");
    Value rows = load_relation(resolve(base, require(entry, "path", ctx), ctx + ".path"), *element);
    s.question.db.emplace(name, Relation{Type::bag(element), std::move(rows)});
  }

  const Json& plan = require(config, "plan", where);
  try {
    s.question.plan = plan_from_json(plan.is_string() ? parse_file(resolve(base, plan, "plan")) : plan);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError || e.code() == ErrorCode::ConfigError) throw;
    fail(ErrorCode::ConfigError, where + ": plan: " + e.what());
  }
  try {
    s.question.tuple = nip_from_json(require(config, "whynot", where));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    fail(ErrorCode::ConfigError, where + ": whynot: " + e.what());
  }
  if (config.contains("alternatives")) s.alternatives = alternatives_from_json(config.at("alternatives"));
  return s;
}

Mode mode_from_string(const std::string& name) {
  if (name == "run") return Mode::Run;
  if (name == "explain") return Mode::Explain;
  if (name == "oracle") return Mode::Oracle;
  if (name == "compare") return Mode::Compare;
  fail(ErrorCode::ConfigError, "unknown mode '" + name + "'");
}

Report run_scenario(const Scenario& scenario, Mode mode, const RunOptions& options) {
  const auto& q = scenario.question;
  Report report;
  switch (mode) {
    case Mode::Run:
      report.json = value_to_json(evaluate(q.plan, q.db));
      break;
    case Mode::Explain: {
      auto result = whynot_pipeline(q, scenario.alternatives, {options.max_sas, options.dump_trace});
      report.json = explanations_to_json(result.explanations, q.plan);
      if (result.explanations.empty()) report.exit_code = kExitNoExplanations;
      break;
    }
    case Mode::Oracle: {
      validate_question(q);
      auto oracle = exact_explanations_oracle(q, options.oracle_budget);
      report.json = Json::array();
      for (const auto& r : oracle.msrs) {
        report.json.push_back({{"ops", r.ops}, {"d", r.d}, {"witness", plan_to_json(r.witness)}});
      }
      if (oracle.msrs.empty()) report.exit_code = kExitNoExplanations;
      break;
    }
    case Mode::Compare: {
      auto result = whynot_pipeline(q, scenario.alternatives, {options.max_sas, options.dump_trace});
      auto picky = picky_operators(q);
      Json heuristic = Json::array();
      for (const auto& e : result.explanations) heuristic.push_back(e.ops);
      report.json = {{"baseline", picky_report_to_json(picky, q.plan)},
                     {"heuristic", heuristic},
                     {"explanations", explanations_to_json(result.explanations, q.plan)}};
      break;
    }
  }
  return report;
}

int exit_code_for(const Error& e) {
  return e.code() == ErrorCode::PreconditionViolated ? kExitPrecondition : kExitConfig;
}

}  // namespace whynot
