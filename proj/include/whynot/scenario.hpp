#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "whynot/alternatives.hpp"
#include "whynot/error.hpp"
#include "whynot/json_io.hpp"
#include "whynot/reparam.hpp"

namespace whynot {

/// A why-not question plus its schema alternatives, as read from a scenario
/// file:
///   {"data": {"person": {"path": "persons.jsonl", "schema": "person.schema.json"}},
///    "plan": "plan.json", "whynot": <nip>, "alternatives": {"a.b": ["c.b"]}}
/// Relative paths are resolved against the scenario file's directory.
struct Scenario {
  WhyNotQuestion question;
  AttributeAlternatives alternatives;
};

/// Reads a JSON-Lines file of tuples of `element_type`; identical lines add
/// up to multiplicities. Throws ParseError / SchemaViolation naming the line.
Value load_relation(const std::filesystem::path& file, const Type& element_type);

/// Throws ConfigError for missing keys or unreadable files.
Scenario load_scenario(const std::filesystem::path& file);

enum class Mode { Run, Explain, Oracle, Compare };

/// Throws ConfigError for unknown names.
Mode mode_from_string(const std::string& name);

struct RunOptions {
  std::size_t max_sas = 16;
  std::uint64_t oracle_budget = 1'000'000;
  std::optional<std::filesystem::path> dump_trace;
};

struct Report {
  Json json;
  int exit_code = 0;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitPrecondition = 2;
inline constexpr int kExitNoExplanations = 3;
inline constexpr int kExitConfig = 4;

/// `run` → query result; `explain` → ranked explanations (exit 3 when there
/// are none); `oracle` → exact minimal changed sets; `compare` → picky
/// operators next to the explanations. Errors propagate as exceptions.
Report run_scenario(const Scenario& scenario, Mode mode, const RunOptions& options = {});

/// Exit code for an error escaping run_scenario: 2 for PreconditionViolated,
/// 4 otherwise.
int exit_code_for(const Error& e);

}  // namespace whynot
