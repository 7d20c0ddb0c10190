#include "fixture.hpp"

#include <atomic>
#include <random>

namespace whynot::fixture {

std::filesystem::path data_dir() { return WHYNOT_DATA_DIR; }

std::filesystem::path running_example_path() { return data_dir() / "running_example" / "scenario.json"; }

Scenario running_example() { return load_scenario(running_example_path()); }

Value V(const std::string& json) { return value_from_json(Json::parse(json)); }

Nip P(const std::string& json) { return nip_from_json(Json::parse(json)); }

QueryPlan plan(const std::string& json) { return plan_from_json(Json::parse(json)); }

TypePtr T(const std::string& json) { return type_from_json(Json::parse(json)); }

Database db(const std::vector<TableSpec>& tables) {
  Database out;
  for (const auto& t : tables) {
    auto element = T(t.type);
    auto bag_type = Type::bag(element);
    out.emplace(t.name, Relation{bag_type, value_from_json(Json::parse(t.rows), *bag_type)});
  }
  return out;
}

std::filesystem::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  auto dir = std::filesystem::temp_directory_path() /
             ("whynot_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace whynot::fixture
