#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "whynot/alternatives.hpp"
#include "whynot/engine.hpp"
#include "whynot/json_io.hpp"

namespace whynot {

enum class AnnotationBase { Valid, Consistent, Retained };

/// Column name `<base>S<sa>_<op>`, e.g. "retainedS1_3".
struct AnnotationLabel {
  AnnotationBase base = AnnotationBase::Valid;
  int sa = 1;
  int op = 0;

  std::string render() const;
  /// Inverse of render(); throws ParseError.
  static AnnotationLabel parse(const std::string& text);
  friend bool operator==(const AnnotationLabel&, const AnnotationLabel&) = default;
};

using RowId = std::uint64_t;

/// A row's data under one schema alternative. `relaxed` is the row in the
/// permissive evaluation (selections/joins/flattens let everything through);
/// `original` is its counterpart in the unmodified query under the same
/// alternative, absent when the original operators drop it.
struct SaSlot {
  Value relaxed;
  std::uint64_t mult = 1;
  std::optional<Value> original;
  std::uint64_t original_mult = 0;
};

struct TracedRow {
  RowId id = 0;
  std::vector<std::optional<SaSlot>> sa;  // index i-1 for S_i; empty = not valid under S_i
  std::vector<std::uint8_t> bits;         // aligned with AnnotatedRelation::columns
};

struct AnnotatedRelation {
  int op_id = 0;
  std::size_t sa_count = 1;
  std::vector<AnnotationLabel> columns;
  std::vector<TracedRow> rows;

  /// Index of the column or -1.
  int column(const AnnotationLabel& label) const;
  /// Flag value, nullopt when the column does not exist.
  std::optional<bool> flag(const TracedRow& row, const AnnotationLabel& label) const;
  /// Latest consistent flag of `sa` carried by the row (1 when none exists).
  bool effective_consistent(const TracedRow& row, int sa) const;
  const TracedRow* find(RowId id) const;
};

/// `t` extended by one integer column (0/1) per (base, bit) pair, labelled for
/// S_sa and operator `op`. Throws DuplicateLabel when a column already exists.
Value annotate(const Value& t, const std::vector<std::pair<AnnotationBase, bool>>& av_map, int sa, int op);

struct LineageEdge {
  RowId input = 0;
  std::uint64_t sa_mask = 0;  // bit i-1 set when the edge exists under S_i
};

/// Per operator: output row id → contributing input row ids.
class LineageMap {
 public:
  void add(int op, RowId out, RowId in, std::uint64_t sa_mask);
  std::vector<RowId> inputs_of(int op, RowId out) const;
  std::vector<RowId> inputs_of(int op, RowId out, int sa) const;
  const std::map<RowId, std::vector<LineageEdge>>& edges(int op) const;

 private:
  std::map<int, std::map<RowId, std::vector<LineageEdge>>> edges_;
};

struct TraceResult {
  std::vector<int> order;  // operators in post-order
  std::map<int, int> parent;  // operator → consuming operator
  std::map<int, AnnotatedRelation> snapshots;
  LineageMap lineage;
  int root = 0;

  const AnnotatedRelation& root_relation() const { return snapshots.at(root); }
  /// Ids of operator `op`'s rows reachable through lineage from `start`
  /// (ids of root rows) under S_sa.
  std::vector<RowId> lineage_closure(const std::vector<RowId>& start, int op, int sa) const;
};

/// Instrumented evaluation of all alternatives at once. `sas[0]` must be S_1
/// (the original plan); all alternatives share the operator structure.
TraceResult trace(const Database& db, const std::vector<SchemaAlternative>& sas);

/// Bag of the original (non-relaxed) rows of S_sa: what the unmodified
/// query under that alternative produces at this operator.
Value retained_view(const AnnotatedRelation& rel, int sa);
/// Bag of the relaxed rows valid under S_sa.
Value relaxed_view(const AnnotatedRelation& rel, int sa);

/// One JSON object per row: id, multiplicities, payload (attributes that
/// differ across alternatives get an `S<i>` suffix) and annotation columns.
Json row_to_json(const AnnotatedRelation& rel, const TracedRow& row);
/// Writes `op_<id>.jsonl` per operator into `dir` (created if missing).
void dump_trace(const TraceResult& tr, const std::filesystem::path& dir);

}  // namespace whynot
