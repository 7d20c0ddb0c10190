#include "whynot/explain.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <tuple>

#include "whynot/error.hpp"

namespace whynot {

namespace {

bool valid(const TracedRow& row, int sa) { return row.sa[static_cast<std::size_t>(sa - 1)].has_value(); }

/// retainedS<sa>_<op>; operators without such a column keep every row.
bool retained(const AnnotatedRelation& rel, const TracedRow& row, int sa, int op) {
  return rel.flag(row, {AnnotationBase::Retained, sa, op}).value_or(true);
}

std::vector<RowId> consistent_root_rows(const TraceResult& traced, int sa) {
  std::vector<RowId> ids;
  const auto& root = traced.root_relation();
  for (const auto& row : root.rows) {
    if (valid(row, sa) && root.effective_consistent(row, sa)) ids.push_back(row.id);
  }
  return ids;
}

}  // namespace

std::vector<Explanation> approximate_msrs(const TraceResult& traced, const std::vector<SchemaAlternative>& sas) {
  const auto& order = traced.order;
  std::vector<Explanation> out;
  std::set<std::vector<int>> emitted;
  auto emit = [&](std::vector<int> ops, int sa) {
    std::sort(ops.begin(), ops.end());
    if (ops.empty() || !emitted.insert(ops).second) return;
    Explanation e;
    e.ops = std::move(ops);
    e.sa_index = sa;
    out.push_back(std::move(e));
  };

  for (const auto& s : sas) {
    const int sa = s.index;
    // Rows of every operator in the lineage of a consistent result row.
    const auto roots = consistent_root_rows(traced, sa);
    std::map<int, std::set<RowId>> in_lineage;
    for (int op : order) {
      auto ids = traced.lineage_closure(roots, op, sa);
      in_lineage[op] = std::set<RowId>(ids.begin(), ids.end());
    }
    // Per operator: can it be extended with / continued without?
    std::map<int, std::pair<bool, bool>> verdict;
    for (int op : order) {
      const auto& rel = traced.snapshots.at(op);
      bool extend = false, keep = false;
      for (const auto& row : rel.rows) {
        if (!valid(row, sa) || !rel.effective_consistent(row, sa)) continue;
        if (retained(rel, row, sa, op)) {
          keep = true;
        } else if (in_lineage[op].count(row.id)) {
          extend = true;
        }
        if (extend && keep) break;
      }
      verdict[op] = {extend, keep};
    }

    using Item = std::pair<std::size_t, std::vector<int>>;  // (position in order, SR prefix)
    std::deque<Item> queue;
    std::set<Item> seen;
    auto push = [&](std::size_t j, std::vector<int> sr) {
      std::sort(sr.begin(), sr.end());
      sr.erase(std::unique(sr.begin(), sr.end()), sr.end());
      Item item{j, std::move(sr)};
      if (seen.insert(item).second) queue.push_back(std::move(item));
    };
    push(order.size() - 1, s.changed_ops());
    while (!queue.empty()) {
      auto [j, sr] = queue.front();
      queue.pop_front();
      const int op = order[j];
      const auto [extend, keep] = verdict[op];
      if (j == 0) {
        if (extend) {
          auto with = sr;
          with.push_back(op);
          emit(with, sa);
        }
        if (keep) emit(sr, sa);
        continue;
      }
      if (extend) {
        auto with = sr;
        with.push_back(op);
        push(j - 1, with);
      }
      if (keep) push(j - 1, sr);
    }
  }
  return out;
}

BoundsBreakdown side_effect_bounds(const Explanation& expl, const TraceResult& traced, const QueryPlan& plan,
                                   const Value& original_result) {
  BoundsBreakdown b;
  const int sa = expl.sa_index;
  const auto& root = traced.root_relation();
  const std::uint64_t q = original_result.cardinality();

  if (sa == 1) {
    for (const auto& row : root.rows) {
      if (!valid(row, sa)) continue;
      bool relaxed = false;
      for (int op : expl.ops) {
        const auto& rel = traced.snapshots.at(op);
        for (RowId id : traced.lineage_closure({row.id}, op, sa)) {
          const TracedRow* r = rel.find(id);
          if (r && !retained(rel, *r, sa, op)) {
            relaxed = true;
            break;
          }
        }
        if (relaxed) break;
      }
      if (relaxed) b.ub_plus += row.sa[0]->mult;
    }
  } else {
    for (const auto& row : root.rows) {
      if (!valid(row, sa)) continue;
      const auto& slot = *row.sa[static_cast<std::size_t>(sa - 1)];
      if (original_result.multiplicity(slot.relaxed) == 0) b.ub_plus += slot.mult;
    }
  }

  const Value relaxed = relaxed_view(root, sa);
  std::uint64_t kept = 0;
  for (const auto& e : original_result.entries()) kept += std::min(e.multiplicity, relaxed.multiplicity(e.value));
  b.ub_minus = q - kept;

  const bool unbounded_below = std::any_of(expl.ops.begin(), expl.ops.end(), [&](int op) {
    auto kind = plan.node(op).kind;
    return kind == OpKind::Selection || kind == OpKind::Join;
  });
  if (!unbounded_below) {
    const std::uint64_t alive = retained_view(root, sa).cardinality();
    b.lb_plus = alive > q ? alive - q : 0;
    b.lb_minus = q > alive ? q - alive : 0;
  }
  return b;
}

std::vector<Explanation> prune_explanations(const std::vector<Explanation>& expls) {
  std::vector<Explanation> out;
  for (const auto& e2 : expls) {
    bool dominated = std::any_of(expls.begin(), expls.end(), [&](const Explanation& e1) {
      return e1.ops.size() < e2.ops.size() && std::includes(e2.ops.begin(), e2.ops.end(), e1.ops.begin(), e1.ops.end()) &&
             e1.ub <= e2.lb;
    });
    if (!dominated) out.push_back(e2);
  }
  return out;
}

std::vector<Explanation> order_explanations(std::vector<Explanation> expls) {
  std::stable_sort(expls.begin(), expls.end(), [](const Explanation& a, const Explanation& b) {
    return std::make_tuple(a.ops.size(), a.ub, a.lb, a.ops) < std::make_tuple(b.ops.size(), b.ub, b.lb, b.ops);
  });
  for (std::size_t i = 0; i < expls.size(); ++i) expls[i].rank = static_cast<int>(i) + 1;
  return expls;
}

PipelineResult whynot_pipeline(const WhyNotQuestion& q, const AttributeAlternatives& alts, const PipelineOptions& options) {
  PipelineResult r;
  validate_question(q);
  const auto db_schema = schema_of(q.db);
  r.original = evaluate(q.plan, q.db);
  r.bt = backtrace_plan(q.plan, db_schema, q.tuple);
  validate_alternatives(alts, db_schema);
  r.sas = enumerate_sas(r.bt, alts, q.plan, db_schema, options.max_sas);
  r.traced = trace(q.db, r.sas);
  if (options.dump_trace) dump_trace(r.traced, *options.dump_trace);
  auto expls = approximate_msrs(r.traced, r.sas);
  for (auto& e : expls) {
    e.bounds = side_effect_bounds(e, r.traced, q.plan, r.original);
    e.lb = e.bounds.lb();
    e.ub = e.bounds.ub();
  }
  r.explanations = order_explanations(prune_explanations(expls));
  return r;
}

Json explanations_to_json(const std::vector<Explanation>& expls, const QueryPlan& plan) {
  Json out = Json::array();
  for (const auto& e : expls) {
    Json ops = Json::array();
    for (int id : e.ops) ops.push_back({{"id", id}, {"kind", std::string(op_kind_name(plan.node(id).kind))}});
    out.push_back({{"rank", e.rank},
                   {"ops", ops},
                   {"sa", e.sa_index},
                   {"lb", e.lb},
                   {"ub", e.ub},
                   {"bounds",
                    {{"lb_plus", e.bounds.lb_plus},
                     {"lb_minus", e.bounds.lb_minus},
                     {"ub_plus", e.bounds.ub_plus},
                     {"ub_minus", e.bounds.ub_minus}}}});
  }
  return out;
}

}  // namespace whynot
