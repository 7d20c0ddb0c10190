#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "whynot/alternatives.hpp"
#include "whynot/backtrace.hpp"
#include "whynot/json_io.hpp"
#include "whynot/reparam.hpp"
#include "whynot/tracing.hpp"

namespace whynot {

/// Side-effect bound components: Δ+ counts result tuples that may appear,
/// Δ− those that may disappear.
struct BoundsBreakdown {
  std::uint64_t lb_plus = 0;
  std::uint64_t lb_minus = 0;
  std::uint64_t ub_plus = 0;
  std::uint64_t ub_minus = 0;

  std::uint64_t lb() const { return lb_plus + lb_minus; }
  std::uint64_t ub() const { return ub_plus + ub_minus; }
};

struct Explanation {
  std::vector<int> ops;  // sorted operator ids
  int sa_index = 1;
  std::uint64_t lb = 0;
  std::uint64_t ub = 0;
  int rank = 0;
  BoundsBreakdown bounds;
};

/// Top-down walk over the operators (post-order, last first) per schema
/// alternative: an operator joins the explanation when its output holds a
/// valid, consistent, non-retained row in the lineage of a consistent result
/// row; the walk also continues without it when a valid row is consistent and
/// retained there. Explanations are deduplicated by operator set.
std::vector<Explanation> approximate_msrs(const TraceResult& traced, const std::vector<SchemaAlternative>& sas);

/// Bounds on the result distance of the explanation's reparameterization.
BoundsBreakdown side_effect_bounds(const Explanation& expl, const TraceResult& traced, const QueryPlan& plan,
                                   const Value& original_result);

/// Drops e2 when another explanation e1 with e1.ops ⊂ e2.ops has e1.ub ≤ e2.lb.
std::vector<Explanation> prune_explanations(const std::vector<Explanation>& expls);

/// Stable sort by (|ops|, ub, lb, op ids); assigns ranks from 1.
std::vector<Explanation> order_explanations(std::vector<Explanation> expls);

struct PipelineOptions {
  std::size_t max_sas = 16;
  std::optional<std::filesystem::path> dump_trace;
};

struct PipelineResult {
  Value original;
  BacktraceResult bt;
  std::vector<SchemaAlternative> sas;
  TraceResult traced;
  std::vector<Explanation> explanations;  // ranked
};

/// Backtrace → schema alternatives → tracing → explanations → bounds →
/// pruning → ranking. Throws PreconditionViolated when the result already
/// holds a matching tuple.
PipelineResult whynot_pipeline(const WhyNotQuestion& q, const AttributeAlternatives& alts,
                               const PipelineOptions& options = {});

/// `[{"rank":1,"ops":[{"id":3,"kind":"selection"}],"sa":1,"lb":0,"ub":2}]`
Json explanations_to_json(const std::vector<Explanation>& expls, const QueryPlan& plan);

}  // namespace whynot
