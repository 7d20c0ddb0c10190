#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "whynot/alternatives.hpp"
#include "whynot/engine.hpp"
#include "whynot/json_io.hpp"
#include "whynot/nip.hpp"
#include "whynot/plan.hpp"
#include "whynot/reparam.hpp"
#include "whynot/scenario.hpp"

namespace whynot::fixture {

std::filesystem::path data_dir();
/// data/running_example/scenario.json
std::filesystem::path running_example_path();

/// The persons scenario: flatten address2, keep years ≥ 2019, project
/// (name, city), nest names per city; why is there no NY group?
Scenario running_example();

/// Value written as schema-less JSON, e.g. V(R"([{"a":1}])").
Value V(const std::string& json);
/// Pattern written as JSON ({"$any":true} is ?, {"$star":true} is *).
Nip P(const std::string& json);
/// Plan written as the plan-JSON array.
QueryPlan plan(const std::string& json);
/// Type written as schema JSON.
TypePtr T(const std::string& json);

/// Database with one relation per (name, element type JSON, rows JSON).
struct TableSpec {
  std::string name;
  std::string type;
  std::string rows;
};
Database db(const std::vector<TableSpec>& tables);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

}  // namespace whynot::fixture
