#include "whynot/baseline_wn.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "whynot/alternatives.hpp"
#include "whynot/backtrace.hpp"

namespace whynot {

PickyReport picky_operators(const WhyNotQuestion& q) {
  validate_question(q);
  const auto db_schema = schema_of(q.db);
  const auto bt = backtrace_plan(q.plan, db_schema, q.tuple);
  const auto sas = enumerate_sas(bt, AttributeAlternatives{}, q.plan, db_schema);
  const TraceResult traced = trace(q.db, sas);

  PickyReport report;
  std::map<int, std::set<RowId>> successors;
  for (int op : traced.order) {
    const auto& node = q.plan.node(op);
    const auto& rel = traced.snapshots.at(op);
    auto& alive = successors[op];
    if (node.kind == OpKind::TableAccess) {
      for (const auto& row : rel.rows) {
        if (!row.sa[0] || !rel.effective_consistent(row, 1)) continue;
        alive.insert(row.id);
        report.compatibles.push_back(row.id);
        report.compatible_tuples.push_back(row.sa[0]->relaxed);
      }
      continue;
    }

    bool inputs_alive = false;
    std::set<RowId> upstream;
    for (int in : node.inputs) {
      inputs_alive = inputs_alive || !successors[in].empty();
      upstream.insert(successors[in].begin(), successors[in].end());
    }
    for (const auto& row : rel.rows) {
      if (!row.sa[0] || !row.sa[0]->original || !rel.effective_consistent(row, 1)) continue;
      const auto inputs = traced.lineage.inputs_of(op, row.id, 1);
      if (std::any_of(inputs.begin(), inputs.end(), [&](RowId id) { return upstream.count(id) > 0; })) {
        alive.insert(row.id);
      }
    }
    if (inputs_alive && alive.empty()) report.picky_ops.push_back(op);
  }
  std::sort(report.picky_ops.begin(), report.picky_ops.end());
  return report;
}

Json picky_report_to_json(const PickyReport& report, const QueryPlan& plan) {
  Json ops = Json::array();
  for (int id : report.picky_ops) ops.push_back({{"id", id}, {"kind", std::string(op_kind_name(plan.node(id).kind))}});
  Json compatibles = Json::array();
  for (const auto& t : report.compatible_tuples) compatibles.push_back(value_to_json(t));
  return {{"picky", ops}, {"compatibles", compatibles}};
}

}  // namespace whynot
