#include "whynot/tracing.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <unordered_map>

#include "whynot/error.hpp"

namespace whynot {

namespace {

constexpr std::uint64_t bit(int sa) { return std::uint64_t{1} << (sa - 1); }

std::string_view base_name(AnnotationBase b) {
  switch (b) {
    case AnnotationBase::Valid: return "valid";
    case AnnotationBase::Consistent: return "consistent";
    case AnnotationBase::Retained: return "retained";
  }
  return "valid";
}

struct KeyHash {
  std::size_t operator()(const std::vector<Value>& k) const {
    std::size_t h = 0;
    for (const auto& v : k) h = h * 1000003u ^ v.hash();
    return h;
  }
};

/// Join key of a tuple; nullopt when a key attribute is null (never matches).
std::optional<std::vector<Value>> join_key(const Value& t, const std::vector<std::string>& paths) {
  std::vector<Value> key;
  key.reserve(paths.size());
  for (const auto& p : paths) {
    Value v = get_path(t, p);
    if (v.is_null()) return std::nullopt;
    key.push_back(std::move(v));
  }
  return key;
}

/// Slot content plus the operator's retained flag for it.
struct Piece {
  SaSlot slot;
  bool retained = true;
};

class Tracer {
 public:
  Tracer(const Database& db, const std::vector<SchemaAlternative>& sas) : db_(db), sas_(sas), n_(sas.size()) {
    if (sas.empty()) fail(ErrorCode::PreconditionViolated, "tracing needs at least the original alternative");
    if (n_ > 64) fail(ErrorCode::TooManyAlternatives, "tracing supports at most 64 schema alternatives");
    const auto db_schema = schema_of(db);
    for (const auto& sa : sas) {
      if (!same_structure(sa.plan, sas.front().plan)) {
        fail(ErrorCode::InvalidAlternative, "schema alternative S" + std::to_string(sa.index) + " changes the plan shape");
      }
      schemas_.push_back(infer_schema(sa.plan, db_schema));
    }
  }

  TraceResult run() {
    const QueryPlan& plan = sas_.front().plan;
    result_.order = plan.post_order();
    result_.root = plan.root();
    for (const auto& node : plan.nodes()) {
      for (int in : node.inputs) result_.parent[in] = node.id;
    }
    for (int id : result_.order) {
      const auto& node = plan.node(id);
      std::vector<const AnnotatedRelation*> inputs;
      for (int in : node.inputs) inputs.push_back(&result_.snapshots.at(in));
      result_.snapshots.emplace(id, trace_op(node, inputs));
    }
    return std::move(result_);
  }

 private:
  const OperatorNode& node(int sa, int op) const { return sas_[static_cast<std::size_t>(sa - 1)].plan.node(op); }
  const OperatorParams& params(int sa, int op) const { return node(sa, op).params; }
  const Type& input_type(int sa, int op, std::size_t k) const {
    return *schemas_[static_cast<std::size_t>(sa - 1)].at(node(sa, op).inputs[k])->element();
  }
  const Nip& nip(int sa, int op) const { return sas_[static_cast<std::size_t>(sa - 1)].bt.op_nips.at(op); }

  bool consistent(int sa, int op, const Value& v, const Nip* override_nip = nullptr) const {
    try {
      return matches_nip(v, override_nip ? *override_nip : nip(sa, op));
    } catch (const Error&) {
      return false;
    }
  }

  int sa_count() const { return static_cast<int>(n_); }

  AnnotatedRelation make(int op, const std::vector<AnnotationLabel>& inherited, std::vector<AnnotationBase> bases) {
    AnnotatedRelation rel;
    rel.op_id = op;
    rel.sa_count = n_;
    rel.columns = inherited;
    for (int i = 1; i <= sa_count(); ++i) {
      for (auto b : bases) rel.columns.push_back({b, i, op});
    }
    return rel;
  }

  static std::uint64_t mask_of(const TracedRow& row) {
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < row.sa.size(); ++i) {
      if (row.sa[i]) m |= std::uint64_t{1} << i;
    }
    return m;
  }

  AnnotatedRelation trace_op(const OperatorNode& op, const std::vector<const AnnotatedRelation*>& in) {
    switch (op.kind) {
      case OpKind::TableAccess: return trace_table(op);
      case OpKind::Selection: return trace_selection(op, *in[0]);
      case OpKind::Projection:
      case OpKind::Renaming:
      case OpKind::TupleNest:
      case OpKind::Aggregation: return trace_map(op, *in[0]);
      case OpKind::Flatten: return trace_flatten(op, *in[0]);
      case OpKind::RelationNest:
      case OpKind::Dedup: return trace_grouping(op, *in[0]);
      case OpKind::Join:
      case OpKind::CrossProduct: return trace_join(op, *in[0], *in[1]);
      case OpKind::Union: return trace_union(op, *in[0], *in[1]);
      case OpKind::Difference: return trace_difference(op, *in[0], *in[1]);
    }
    fail(ErrorCode::MalformedPlan, "unsupported operator");
  }

  AnnotatedRelation trace_table(const OperatorNode& op) {
    auto rel = make(op.id, {}, {AnnotationBase::Consistent});
    auto it = db_.find(op.params.table);
    if (it == db_.end()) fail(ErrorCode::UnknownAttribute, "unknown relation '" + op.params.table + "'");
    for (const auto& e : it->second.rows.entries()) {
      TracedRow row;
      row.id = next_id_++;
      for (int i = 1; i <= sa_count(); ++i) {
        row.sa.push_back(SaSlot{e.value, e.multiplicity, e.value, e.multiplicity});
        row.bits.push_back(consistent(i, op.id, e.value));
      }
      rel.rows.push_back(std::move(row));
    }
    return rel;
  }

  AnnotatedRelation trace_selection(const OperatorNode& op, const AnnotatedRelation& in) {
    auto rel = make(op.id, in.columns, {AnnotationBase::Retained});
    for (const auto& r : in.rows) {
      TracedRow row{r.id, r.sa, r.bits};
      for (int i = 1; i <= sa_count(); ++i) {
        auto& slot = row.sa[static_cast<std::size_t>(i - 1)];
        bool retained = false;
        if (slot) {
          const auto& theta = params(i, op.id).theta;
          retained = eval_predicate(theta, slot->relaxed);
          if (slot->original && !eval_predicate(theta, *slot->original)) {
            slot->original.reset();
            slot->original_mult = 0;
          }
        }
        row.bits.push_back(retained);
      }
      result_.lineage.add(op.id, row.id, r.id, mask_of(r));
      rel.rows.push_back(std::move(row));
    }
    return rel;
  }

  /// Row-wise operators: projection, renaming, tuple nesting, aggregation.
  AnnotatedRelation trace_map(const OperatorNode& op, const AnnotatedRelation& in) {
    std::vector<AnnotationBase> bases;
    if (op.kind == OpKind::TupleNest) bases = {AnnotationBase::Valid, AnnotationBase::Consistent};
    if (op.kind == OpKind::Aggregation) {
      bases = {AnnotationBase::Valid, AnnotationBase::Consistent, AnnotationBase::Retained};
    }
    auto rel = make(op.id, in.columns, bases);
    // Aggregated values cannot be constrained meaningfully: check the rest.
    std::vector<Nip> relaxed_nips;
    if (op.kind == OpKind::Aggregation) {
      for (int i = 1; i <= sa_count(); ++i) {
        const Nip& p = nip(i, op.id);
        std::vector<NamedNip> fields;
        if (p.is_tuple()) {
          for (const auto& f : p.fields()) fields.push_back({f.name, f.name == params(i, op.id).target ? Nip::any() : f.pattern});
        }
        relaxed_nips.push_back(Nip::tuple(std::move(fields)));
      }
    }
    for (const auto& r : in.rows) {
      TracedRow row{r.id, r.sa, r.bits};
      for (int i = 1; i <= sa_count(); ++i) {
        auto& slot = row.sa[static_cast<std::size_t>(i - 1)];
        const auto& p = params(i, op.id);
        auto apply = [&](const Value& t) {
          switch (op.kind) {
            case OpKind::Projection: return project_row(p, t);
            case OpKind::Renaming: return rename_row(p, t);
            case OpKind::TupleNest: return tuple_nest_row(p, t);
            default: return aggregate_row(p, t);
          }
        };
        bool retained = true;
        if (slot) {
          if (op.kind == OpKind::Aggregation && slot->original) {
            retained = get_path(*slot->original, p.source) == get_path(slot->relaxed, p.source);
          }
          slot->relaxed = apply(slot->relaxed);
          if (slot->original) slot->original = apply(*slot->original);
        }
        if (op.kind == OpKind::TupleNest) {
          row.bits.push_back(slot.has_value());
          row.bits.push_back(slot && consistent(i, op.id, slot->relaxed));
        } else if (op.kind == OpKind::Aggregation) {
          row.bits.push_back(slot.has_value());
          row.bits.push_back(slot && consistent(i, op.id, slot->relaxed, &relaxed_nips[static_cast<std::size_t>(i - 1)]));
          row.bits.push_back(slot && retained);
        }
      }
      result_.lineage.add(op.id, row.id, r.id, mask_of(r));
      rel.rows.push_back(std::move(row));
    }
    return rel;
  }

  AnnotatedRelation trace_flatten(const OperatorNode& op, const AnnotatedRelation& in) {
    auto rel = make(op.id, in.columns, {AnnotationBase::Valid, AnnotationBase::Consistent, AnnotationBase::Retained});
    const FlattenKind kind = op.params.flatten_kind;
    for (const auto& r : in.rows) {
      std::vector<std::vector<Piece>> per_sa(n_);
      std::size_t longest = 0;
      for (int i = 1; i <= sa_count(); ++i) {
        const auto& slot = r.sa[static_cast<std::size_t>(i - 1)];
        if (!slot) continue;
        const auto& p = params(i, op.id);
        const Type& type = input_type(i, op.id, 0);
        // The original flatten's pieces, keyed by value, to pair with the relaxed ones.
        std::vector<std::pair<Value, std::uint64_t>> originals;
        if (slot->original) {
          for (auto& piece : flatten_tuple(p, type, *slot->original)) {
            if (piece.padded && kind == FlattenKind::Inner) continue;
            originals.emplace_back(std::move(piece.tuple), piece.multiplicity * slot->original_mult);
          }
        }
        auto& out = per_sa[static_cast<std::size_t>(i - 1)];
        for (auto& piece : flatten_tuple(p, type, slot->relaxed)) {
          Piece x;
          x.slot.relaxed = piece.tuple;
          x.slot.mult = piece.multiplicity * slot->mult;
          x.retained = !(piece.padded && kind == FlattenKind::Inner);
          auto it = std::find_if(originals.begin(), originals.end(), [&](const auto& o) { return o.first == piece.tuple; });
          if (it != originals.end()) {
            x.slot.original = it->first;
            x.slot.original_mult = it->second;
            originals.erase(it);
          }
          out.push_back(std::move(x));
        }
        // Original pieces without a relaxed counterpart (possible only when
        // the original row's collections were filtered upstream).
        for (auto& [value, mult] : originals) out.push_back(Piece{SaSlot{value, mult, value, mult}, true});
        longest = std::max(longest, out.size());
      }
      // Pair the alternatives' pieces by position; shorter lists are padded.
      for (std::size_t k = 0; k < longest; ++k) {
        TracedRow row;
        row.id = next_id_++;
        row.bits = r.bits;
        row.sa.resize(n_);
        std::uint64_t mask = 0;
        for (int i = 1; i <= sa_count(); ++i) {
          const auto& list = per_sa[static_cast<std::size_t>(i - 1)];
          if (k < list.size()) {
            row.sa[static_cast<std::size_t>(i - 1)] = list[k].slot;
            mask |= bit(i);
            row.bits.push_back(1);
            row.bits.push_back(consistent(i, op.id, list[k].slot.relaxed));
            row.bits.push_back(list[k].retained);
          } else {
            row.bits.insert(row.bits.end(), {0, 0, 0});
          }
        }
        result_.lineage.add(op.id, row.id, r.id, mask);
        rel.rows.push_back(std::move(row));
      }
    }
    return rel;
  }

  /// Bits of inherited columns for a row combining several input rows: a
  /// column of S_i is set iff it is set on every member valid under S_i.
  std::vector<std::uint8_t> combined_bits(const AnnotatedRelation& in, const std::vector<std::vector<const TracedRow*>>& members) {
    std::vector<std::uint8_t> bits(in.columns.size(), 0);
    for (std::size_t c = 0; c < in.columns.size(); ++c) {
      const auto& m = members[static_cast<std::size_t>(in.columns[c].sa - 1)];
      if (m.empty()) continue;
      bits[c] = std::all_of(m.begin(), m.end(), [&](const TracedRow* r) { return r->bits[c] != 0; });
    }
    return bits;
  }

  /// Relation nesting and deduplication: rows grouped per alternative, groups
  /// of all alternatives combined on their key.
  AnnotatedRelation trace_grouping(const OperatorNode& op, const AnnotatedRelation& in) {
    const bool nesting = op.kind == OpKind::RelationNest;
    std::vector<AnnotationBase> bases;
    if (nesting) bases = {AnnotationBase::Valid, AnnotationBase::Consistent};
    auto rel = make(op.id, in.columns, bases);
    struct Group {
      BagBuilder relaxed;
      BagBuilder original;
      std::optional<Value> first_original;
      bool any_original = false;
      std::vector<const TracedRow*> members;
    };
    struct Combined {
      std::vector<std::optional<Group>> sa;
    };
    std::map<Value, Combined> groups;
    for (const auto& r : in.rows) {
      for (int i = 1; i <= sa_count(); ++i) {
        const auto& slot = r.sa[static_cast<std::size_t>(i - 1)];
        if (!slot) continue;
        Value key = slot->relaxed;
        Value inner;
        if (nesting) std::tie(key, inner) = nest_split(params(i, op.id).attrs, slot->relaxed);
        auto& combined = groups[key];
        combined.sa.resize(n_);
        auto& g = combined.sa[static_cast<std::size_t>(i - 1)];
        if (!g) g.emplace();
        g->members.push_back(&r);
        if (nesting) g->relaxed.add(inner, slot->mult);
        if (slot->original) {
          g->any_original = true;
          if (nesting) {
            g->original.add(nest_split(params(i, op.id).attrs, *slot->original).second, slot->original_mult);
          } else if (!g->first_original) {
            g->first_original = slot->original;
          }
        }
      }
    }
    for (auto& [key, combined] : groups) {
      TracedRow row;
      row.id = next_id_++;
      row.sa.resize(n_);
      std::vector<std::vector<const TracedRow*>> members(n_);
      std::vector<std::uint8_t> fresh;
      for (int i = 1; i <= sa_count(); ++i) {
        auto& g = combined.sa[static_cast<std::size_t>(i - 1)];
        if (!g) {
          if (nesting) fresh.insert(fresh.end(), {0, 0});
          continue;
        }
        members[static_cast<std::size_t>(i - 1)] = g->members;
        SaSlot slot;
        if (nesting) {
          const std::string& target = params(i, op.id).target;
          slot.relaxed = concat_tuples(key, Value::tuple({{target, std::move(g->relaxed).build()}}));
          if (g->any_original) {
            slot.original = concat_tuples(key, Value::tuple({{target, std::move(g->original).build()}}));
            slot.original_mult = 1;
          }
        } else {
          slot.relaxed = key;
          if (g->any_original) {
            slot.original = g->first_original;
            slot.original_mult = 1;
          }
        }
        slot.mult = 1;
        if (nesting) {
          fresh.push_back(1);
          fresh.push_back(consistent(i, op.id, slot.relaxed));
        }
        row.sa[static_cast<std::size_t>(i - 1)] = std::move(slot);
        for (const auto* m : g->members) result_.lineage.add(op.id, row.id, m->id, bit(i));
      }
      row.bits = combined_bits(in, members);
      // Columns are ordered per alternative: valid, consistent.
      row.bits.insert(row.bits.end(), fresh.begin(), fresh.end());
      rel.rows.push_back(std::move(row));
    }
    return rel;
  }

  AnnotatedRelation trace_join(const OperatorNode& op, const AnnotatedRelation& left, const AnnotatedRelation& right) {
    const bool cross = op.kind == OpKind::CrossProduct;
    auto inherited = left.columns;
    inherited.insert(inherited.end(), right.columns.begin(), right.columns.end());
    std::vector<AnnotationBase> bases;
    if (!cross) bases = {AnnotationBase::Valid, AnnotationBase::Consistent, AnnotationBase::Retained};
    auto rel = make(op.id, inherited, bases);
    const JoinKind kind = cross ? JoinKind::Inner : op.params.join_kind;
    const bool keep_left = kind == JoinKind::Left || kind == JoinKind::Full;
    const bool keep_right = kind == JoinKind::Right || kind == JoinKind::Full;

    std::map<std::pair<RowId, RowId>, std::vector<std::optional<Piece>>> out;
    auto emit = [&](RowId l, RowId r, int sa, Piece piece) {
      auto& v = out[{l, r}];
      v.resize(n_);
      v[static_cast<std::size_t>(sa - 1)] = std::move(piece);
    };

    for (int i = 1; i <= sa_count(); ++i) {
      const std::size_t s = static_cast<std::size_t>(i - 1);
      const Type& lt = input_type(i, op.id, 0);
      const Type& rt = input_type(i, op.id, 1);
      std::optional<EquiKeys> keys;
      if (!cross) {
        const auto& theta = params(i, op.id).theta;
        keys = equi_keys(theta, lt, rt);
        if (!keys && theta.kind != Predicate::Kind::True) {
          fail(ErrorCode::NonEquiJoin, "tracing supports equi-joins only: " + describe(node(i, op.id)));
        }
      }
      std::vector<const TracedRow*> ls, rs;
      for (const auto& r : left.rows) {
        if (r.sa[s]) ls.push_back(&r);
      }
      for (const auto& r : right.rows) {
        if (r.sa[s]) rs.push_back(&r);
      }
      std::unordered_map<std::vector<Value>, std::vector<std::size_t>, KeyHash> index;
      if (keys) {
        for (std::size_t j = 0; j < rs.size(); ++j) {
          if (auto k = join_key(rs[j]->sa[s]->relaxed, keys->right)) index[std::move(*k)].push_back(j);
        }
      }
      auto partners = [&](const Value& l) -> std::vector<std::size_t> {
        if (!keys) {
          std::vector<std::size_t> all(rs.size());
          for (std::size_t j = 0; j < rs.size(); ++j) all[j] = j;
          return all;
        }
        auto k = join_key(l, keys->left);
        if (!k) return {};
        auto it = index.find(*k);
        return it == index.end() ? std::vector<std::size_t>{} : it->second;
      };
      auto originals_match = [&](const Value& l, const Value& r) {
        if (!keys) return true;
        auto a = join_key(l, keys->left);
        auto b = join_key(r, keys->right);
        return a && b && *a == *b;
      };
      const Value right_pad = null_tuple(rt);
      const Value left_pad = null_tuple(lt);
      std::vector<bool> right_matched(rs.size(), false), right_original_matched(rs.size(), false);
      for (const auto* l : ls) {
        const SaSlot& ls_slot = *l->sa[s];
        bool matched = false, original_matched = false;
        for (auto j : partners(ls_slot.relaxed)) {
          const SaSlot& rs_slot = *rs[j]->sa[s];
          matched = true;
          right_matched[j] = true;
          Piece p;
          p.slot.relaxed = concat_tuples(ls_slot.relaxed, rs_slot.relaxed);
          p.slot.mult = ls_slot.mult * rs_slot.mult;
          if (ls_slot.original && rs_slot.original && originals_match(*ls_slot.original, *rs_slot.original)) {
            p.slot.original = concat_tuples(*ls_slot.original, *rs_slot.original);
            p.slot.original_mult = ls_slot.original_mult * rs_slot.original_mult;
            original_matched = true;
            right_original_matched[j] = true;
          }
          emit(l->id, rs[j]->id, i, std::move(p));
        }
        if (cross) continue;
        const bool original_pad = keep_left && ls_slot.original && !original_matched;
        if (!matched || original_pad) {
          Piece p;
          p.retained = !matched ? keep_left : true;
          p.slot.relaxed = concat_tuples(matched ? *ls_slot.original : ls_slot.relaxed, right_pad);
          p.slot.mult = matched ? ls_slot.original_mult : ls_slot.mult;
          if (original_pad) {
            p.slot.original = concat_tuples(*ls_slot.original, right_pad);
            p.slot.original_mult = ls_slot.original_mult;
          }
          emit(l->id, 0, i, std::move(p));
        }
      }
      if (cross) continue;
      for (std::size_t j = 0; j < rs.size(); ++j) {
        const SaSlot& rs_slot = *rs[j]->sa[s];
        const bool matched = right_matched[j];
        const bool original_pad = keep_right && rs_slot.original && !right_original_matched[j];
        if (matched && !original_pad) continue;
        Piece p;
        p.retained = !matched ? keep_right : true;
        p.slot.relaxed = concat_tuples(left_pad, matched ? *rs_slot.original : rs_slot.relaxed);
        p.slot.mult = matched ? rs_slot.original_mult : rs_slot.mult;
        if (original_pad) {
          p.slot.original = concat_tuples(left_pad, *rs_slot.original);
          p.slot.original_mult = rs_slot.original_mult;
        }
        emit(0, rs[j]->id, i, std::move(p));
      }
    }

    const std::vector<std::uint8_t> left_zero(left.columns.size(), 0), right_zero(right.columns.size(), 0);
    for (auto& [ids, pieces] : out) {
      TracedRow row;
      row.id = next_id_++;
      const TracedRow* l = ids.first ? left.find(ids.first) : nullptr;
      const TracedRow* r = ids.second ? right.find(ids.second) : nullptr;
      row.bits = l ? l->bits : left_zero;
      const auto& rb = r ? r->bits : right_zero;
      row.bits.insert(row.bits.end(), rb.begin(), rb.end());
      row.sa.resize(n_);
      std::uint64_t mask = 0;
      for (int i = 1; i <= sa_count(); ++i) {
        auto& piece = pieces[static_cast<std::size_t>(i - 1)];
        if (piece) {
          mask |= bit(i);
          row.sa[static_cast<std::size_t>(i - 1)] = piece->slot;
        }
        if (!cross) {
          row.bits.push_back(piece.has_value());
          row.bits.push_back(piece && consistent(i, op.id, piece->slot.relaxed));
          row.bits.push_back(piece && piece->retained);
        }
      }
      if (l) result_.lineage.add(op.id, row.id, l->id, mask);
      if (r) result_.lineage.add(op.id, row.id, r->id, mask);
      rel.rows.push_back(std::move(row));
    }
    return rel;
  }

  AnnotatedRelation trace_union(const OperatorNode& op, const AnnotatedRelation& left, const AnnotatedRelation& right) {
    auto columns = left.columns;
    for (const auto& c : right.columns) {
      if (std::find(columns.begin(), columns.end(), c) == columns.end()) columns.push_back(c);
    }
    auto rel = make(op.id, columns, {});
    for (const auto* side : {&left, &right}) {
      std::vector<int> position;
      for (const auto& c : side->columns) position.push_back(rel.column(c));
      for (const auto& r : side->rows) {
        TracedRow row;
        row.id = next_id_++;
        row.sa = r.sa;
        row.bits.assign(columns.size(), 0);
        for (std::size_t c = 0; c < position.size(); ++c) row.bits[static_cast<std::size_t>(position[c])] = r.bits[c];
        result_.lineage.add(op.id, row.id, r.id, mask_of(r));
        rel.rows.push_back(std::move(row));
      }
    }
    return rel;
  }

  AnnotatedRelation trace_difference(const OperatorNode& op, const AnnotatedRelation& left,
                                     const AnnotatedRelation& right) {
    auto rel = make(op.id, left.columns, {AnnotationBase::Retained});
    std::vector<std::map<Value, std::uint64_t>> relaxed_right(n_), original_right(n_);
    for (const auto& r : right.rows) {
      for (std::size_t s = 0; s < n_; ++s) {
        if (!r.sa[s]) continue;
        relaxed_right[s][r.sa[s]->relaxed] += r.sa[s]->mult;
        if (r.sa[s]->original) original_right[s][*r.sa[s]->original] += r.sa[s]->original_mult;
      }
    }
    for (const auto& r : left.rows) {
      TracedRow row{r.id, r.sa, r.bits};
      for (std::size_t s = 0; s < n_; ++s) {
        auto& slot = row.sa[s];
        bool retained = false;
        if (slot) {
          retained = relaxed_right[s].count(slot->relaxed) == 0;
          if (slot->original) {
            auto it = original_right[s].find(*slot->original);
            if (it != original_right[s].end()) {
              const auto take = std::min(it->second, slot->original_mult);
              it->second -= take;
              slot->original_mult -= take;
              if (slot->original_mult == 0) slot->original.reset();
            }
          }
        }
        row.bits.push_back(retained);
      }
      result_.lineage.add(op.id, row.id, r.id, mask_of(r));
      rel.rows.push_back(std::move(row));
    }
    return rel;
  }

  const Database& db_;
  const std::vector<SchemaAlternative>& sas_;
  std::size_t n_;
  std::vector<SchemaMap> schemas_;
  RowId next_id_ = 1;
  TraceResult result_;
};

}  // namespace

std::string AnnotationLabel::render() const {
  return std::string(base_name(base)) + "S" + std::to_string(sa) + "_" + std::to_string(op);
}

AnnotationLabel AnnotationLabel::parse(const std::string& text) {
  static const std::regex pattern("(valid|consistent|retained)S([0-9]+)_(-?[0-9]+)");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) fail(ErrorCode::ParseError, "not an annotation label: '" + text + "'");
  AnnotationLabel out;
  out.base = m[1] == "valid" ? AnnotationBase::Valid
             : m[1] == "consistent" ? AnnotationBase::Consistent
                                    : AnnotationBase::Retained;
  out.sa = std::stoi(m[2]);
  out.op = std::stoi(m[3]);
  return out;
}

Value annotate(const Value& t, const std::vector<std::pair<AnnotationBase, bool>>& av_map, int sa, int op) {
  if (av_map.empty()) return t;
  std::vector<NamedValue> extra;
  for (const auto& [base, b] : av_map) {
    std::string label = AnnotationLabel{base, sa, op}.render();
    bool clash = t.get(label) != nullptr ||
                 std::any_of(extra.begin(), extra.end(), [&](const NamedValue& x) { return x.name == label; });
    if (clash) fail(ErrorCode::DuplicateLabel, "annotation '" + label + "' already present");
    extra.push_back({std::move(label), Value::integer(b ? 1 : 0)});
  }
  return concat_tuples(t, Value::tuple(std::move(extra)));
}

int AnnotatedRelation::column(const AnnotationLabel& label) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == label) return static_cast<int>(i);
  }
  return -1;
}

std::optional<bool> AnnotatedRelation::flag(const TracedRow& row, const AnnotationLabel& label) const {
  int c = column(label);
  if (c < 0) return std::nullopt;
  return row.bits[static_cast<std::size_t>(c)] != 0;
}

bool AnnotatedRelation::effective_consistent(const TracedRow& row, int sa) const {
  for (std::size_t c = columns.size(); c-- > 0;) {
    if (columns[c].base == AnnotationBase::Consistent && columns[c].sa == sa) return row.bits[c] != 0;
  }
  return true;
}

const TracedRow* AnnotatedRelation::find(RowId id) const {
  auto it = std::lower_bound(rows.begin(), rows.end(), id, [](const TracedRow& r, RowId x) { return r.id < x; });
  if (it != rows.end() && it->id == id) return &*it;
  return nullptr;
}

void LineageMap::add(int op, RowId out, RowId in, std::uint64_t sa_mask) {
  if (sa_mask == 0) return;
  auto& list = edges_[op][out];
  for (auto& e : list) {
    if (e.input == in) {
      e.sa_mask |= sa_mask;
      return;
    }
  }
  list.push_back({in, sa_mask});
}

std::vector<RowId> LineageMap::inputs_of(int op, RowId out) const {
  std::vector<RowId> ids;
  auto it = edges_.find(op);
  if (it == edges_.end()) return ids;
  auto jt = it->second.find(out);
  if (jt == it->second.end()) return ids;
  for (const auto& e : jt->second) ids.push_back(e.input);
  return ids;
}

std::vector<RowId> LineageMap::inputs_of(int op, RowId out, int sa) const {
  std::vector<RowId> ids;
  auto it = edges_.find(op);
  if (it == edges_.end()) return ids;
  auto jt = it->second.find(out);
  if (jt == it->second.end()) return ids;
  for (const auto& e : jt->second) {
    if (e.sa_mask & bit(sa)) ids.push_back(e.input);
  }
  return ids;
}

const std::map<RowId, std::vector<LineageEdge>>& LineageMap::edges(int op) const {
  static const std::map<RowId, std::vector<LineageEdge>> none;
  auto it = edges_.find(op);
  return it == edges_.end() ? none : it->second;
}

std::vector<RowId> TraceResult::lineage_closure(const std::vector<RowId>& start, int op, int sa) const {
  std::vector<int> path{op};
  while (path.back() != root) {
    auto it = parent.find(path.back());
    if (it == parent.end()) return {};
    path.push_back(it->second);
  }
  std::reverse(path.begin(), path.end());
  std::vector<RowId> ids = start;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const auto& child = snapshots.at(path[k + 1]);
    std::vector<RowId> next;
    for (RowId id : ids) {
      for (RowId in : lineage.inputs_of(path[k], id, sa)) {
        if (child.find(in)) next.push_back(in);
      }
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    ids = std::move(next);
  }
  return ids;
}

TraceResult trace(const Database& db, const std::vector<SchemaAlternative>& sas) { return Tracer(db, sas).run(); }

Value retained_view(const AnnotatedRelation& rel, int sa) {
  BagBuilder out;
  for (const auto& r : rel.rows) {
    const auto& slot = r.sa[static_cast<std::size_t>(sa - 1)];
    if (slot && slot->original && slot->original_mult > 0) out.add(*slot->original, slot->original_mult);
  }
  return std::move(out).build();
}

Value relaxed_view(const AnnotatedRelation& rel, int sa) {
  BagBuilder out;
  for (const auto& r : rel.rows) {
    const auto& slot = r.sa[static_cast<std::size_t>(sa - 1)];
    if (slot) out.add(slot->relaxed, slot->mult);
  }
  return std::move(out).build();
}

Json row_to_json(const AnnotatedRelation& rel, const TracedRow& row) {
  Json out;
  out["id"] = row.id;
  std::vector<std::string> names;
  std::vector<int> valid;
  for (std::size_t s = 0; s < row.sa.size(); ++s) {
    if (!row.sa[s]) continue;
    valid.push_back(static_cast<int>(s) + 1);
    const Value& t = row.sa[s]->relaxed;
    if (!t.is_tuple()) continue;
    for (const auto& f : t.fields()) {
      if (std::find(names.begin(), names.end(), f.name) == names.end()) names.push_back(f.name);
    }
  }
  auto coalesce = [&](const std::string& name, auto&& get) {
    std::vector<std::pair<int, Json>> values;
    for (int s : valid) values.emplace_back(s, get(*row.sa[static_cast<std::size_t>(s - 1)]));
    bool same = std::all_of(values.begin(), values.end(), [&](const auto& v) { return v.second == values.front().second; });
    if (same && !values.empty()) {
      out[name] = values.front().second;
    } else {
      for (auto& [s, v] : values) out[name + "S" + std::to_string(s)] = v;
    }
  };
  for (const auto& name : names) {
    coalesce(name, [&](const SaSlot& slot) {
      const Value* v = slot.relaxed.get(name);
      return v ? value_to_json(*v) : Json();
    });
  }
  coalesce("mult", [](const SaSlot& slot) { return Json(slot.mult); });
  for (std::size_t c = 0; c < rel.columns.size(); ++c) out[rel.columns[c].render()] = row.bits[c];
  return out;
}

void dump_trace(const TraceResult& tr, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [op, rel] : tr.snapshots) {
    std::ofstream f(dir / ("op_" + std::to_string(op) + ".jsonl"));
    if (!f) fail(ErrorCode::ConfigError, "cannot write trace into " + dir.string());
    for (const auto& row : rel.rows) f << row_to_json(rel, row).dump() << "\n";
  }
}

}  // namespace whynot
