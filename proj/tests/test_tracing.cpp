#include <gtest/gtest.h>

#include <fstream>
#include <functional>

#include "fixture.hpp"
#include "generators.hpp"
#include "properties.hpp"
#include "whynot/error.hpp"
#include "whynot/tracing.hpp"

using namespace whynot;
using fixture::P;
using fixture::V;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::ConfigError;
}

std::vector<SchemaAlternative> sas_for(const Database& db, const QueryPlan& plan, const Nip& tuple,
                                       const AttributeAlternatives& alts = {}) {
  const auto schema = schema_of(db);
  return enumerate_sas(backtrace_plan(plan, schema, tuple), alts, plan, schema);
}

struct Traced {
  Scenario s = fixture::running_example();
  std::vector<SchemaAlternative> sas =
      enumerate_sas(schema_backtrace(s.question), s.alternatives, s.question.plan, schema_of(s.question.db));
  TraceResult tr = trace(s.question.db, sas);
};

/// Rows of `op` valid under `sa` whose relaxed payload has the given attribute values.
std::vector<const TracedRow*> rows_where(const TraceResult& tr, int op, int sa,
                                         const std::map<std::string, Value>& attrs) {
  std::vector<const TracedRow*> out;
  for (const auto& row : tr.snapshots.at(op).rows) {
    const auto& slot = row.sa[static_cast<std::size_t>(sa - 1)];
    if (!slot) continue;
    bool ok = true;
    for (const auto& [name, v] : attrs) {
      const Value* got = slot->relaxed.get(name);
      ok = ok && got && *got == v;
    }
    if (ok) out.push_back(&row);
  }
  return out;
}

bool flag(const TraceResult& tr, const TracedRow& row, AnnotationBase base, int sa, int op, int at) {
  auto f = tr.snapshots.at(at).flag(row, {base, sa, op});
  EXPECT_TRUE(f.has_value());
  return f.value_or(false);
}

Value S(const char* s) { return Value::string(s); }
Value I(std::int64_t i) { return Value::integer(i); }

}  // namespace

TEST(Annotate, AppendsOneColumnPerFlag) {
  auto t = V(R"({"a":1})");
  auto out = annotate(t, {{AnnotationBase::Valid, true}, {AnnotationBase::Retained, false}}, 2, 7);
  EXPECT_EQ(out, V(R"({"a":1,"validS2_7":1,"retainedS2_7":0})"));
  EXPECT_EQ(annotate(t, {}, 1, 1), t);
}

TEST(Annotate, DuplicateLabelRejected) {
  auto t = V(R"({"a":1,"consistentS1_3":1})");
  EXPECT_EQ(code_of([&] { annotate(t, {{AnnotationBase::Consistent, true}}, 1, 3); }), ErrorCode::DuplicateLabel);
  EXPECT_EQ(code_of([&] { annotate(V(R"({"a":1})"), {{AnnotationBase::Valid, true}, {AnnotationBase::Valid, false}}, 1, 3); }),
            ErrorCode::DuplicateLabel);
}

TEST(AnnotationLabel, RenderParseRoundTrip) {
  AnnotationLabel l{AnnotationBase::Retained, 1, 3};
  EXPECT_EQ(l.render(), "retainedS1_3");
  EXPECT_EQ(AnnotationLabel::parse("consistentS12_40"), (AnnotationLabel{AnnotationBase::Consistent, 12, 40}));
  EXPECT_EQ(AnnotationLabel::parse(l.render()), l);
  EXPECT_EQ(code_of([] { AnnotationLabel::parse("keptS1_3"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { AnnotationLabel::parse("validS_3"); }), ErrorCode::ParseError);
}

TEST(TraceFixture, BaseRowsConsistentPerAlternative) {
  Traced t;
  ASSERT_EQ(t.sas.size(), 2u);
  const auto& base = t.tr.snapshots.at(1);
  ASSERT_EQ(base.rows.size(), 2u);
  auto sue = rows_where(t.tr, 1, 1, {{"name", S("Sue")}});
  auto peter = rows_where(t.tr, 1, 1, {{"name", S("Peter")}});
  ASSERT_EQ(sue.size(), 1u);
  ASSERT_EQ(peter.size(), 1u);
  // Under S1 only Sue has an NY address2; under S2 (address1) only Peter has one.
  EXPECT_TRUE(flag(t.tr, *sue[0], AnnotationBase::Consistent, 1, 1, 1));
  EXPECT_FALSE(flag(t.tr, *peter[0], AnnotationBase::Consistent, 1, 1, 1));
  EXPECT_FALSE(flag(t.tr, *sue[0], AnnotationBase::Consistent, 2, 1, 1));
  EXPECT_TRUE(flag(t.tr, *peter[0], AnnotationBase::Consistent, 2, 1, 1));
}

TEST(TraceFixture, FlattenRowsPerAlternative) {
  Traced t;
  // S1 flattens address2 (4 rows), S2 flattens address1 (4 rows).
  EXPECT_EQ(rows_where(t.tr, 2, 1, {}).size(), 4u);
  EXPECT_EQ(rows_where(t.tr, 2, 2, {}).size(), 4u);
  auto sue_ny = rows_where(t.tr, 2, 1, {{"name", S("Sue")}, {"city", S("NY")}});
  ASSERT_EQ(sue_ny.size(), 1u);
  EXPECT_TRUE(flag(t.tr, *sue_ny[0], AnnotationBase::Consistent, 1, 2, 2));
  EXPECT_TRUE(flag(t.tr, *sue_ny[0], AnnotationBase::Retained, 1, 2, 2));
  auto peter_ny = rows_where(t.tr, 2, 2, {{"name", S("Peter")}, {"city", S("NY")}, {"year", I(2010)}});
  ASSERT_EQ(peter_ny.size(), 1u);
  EXPECT_TRUE(flag(t.tr, *peter_ny[0], AnnotationBase::Consistent, 2, 2, 2));
  EXPECT_FALSE(peter_ny[0]->sa[0].has_value());  // not produced under S1
}

TEST(TraceFixture, SelectionRetainsOnlyRecentAddresses) {
  Traced t;
  const auto& sel = t.tr.snapshots.at(3);
  for (const auto& row : sel.rows) {
    for (int sa : {1, 2}) {
      const auto& slot = row.sa[static_cast<std::size_t>(sa - 1)];
      if (!slot) continue;
      const bool recent = slot->relaxed.get("year")->as_int() >= 2019;
      EXPECT_EQ(*sel.flag(row, {AnnotationBase::Retained, sa, 3}), recent) << row_to_json(sel, row).dump();
    }
  }
  EXPECT_EQ(retained_view(sel, 1).cardinality(), 1u);  // Sue LA 2019
  EXPECT_EQ(retained_view(sel, 2).cardinality(), 1u);  // Peter LA 2019
  auto sue_ny = rows_where(t.tr, 3, 1, {{"name", S("Sue")}, {"city", S("NY")}});
  ASSERT_EQ(sue_ny.size(), 1u);
  EXPECT_FALSE(flag(t.tr, *sue_ny[0], AnnotationBase::Retained, 1, 3, 3));
}

TEST(TraceFixture, ProjectionKeepsPerAlternativePayloads) {
  Traced t;
  const auto& proj = t.tr.snapshots.at(4);
  bool found = false;
  for (const auto& row : proj.rows) {
    auto j = row_to_json(proj, row);
    if (j.contains("cityS1") && j["cityS1"] == "SF") {
      EXPECT_EQ(j["cityS2"], "LA");
      found = true;
    }
    EXPECT_FALSE(j.contains("year"));
    EXPECT_FALSE(j.contains("address1"));
  }
  EXPECT_TRUE(found);
}

TEST(TraceFixture, NestingGroupsRelaxedRows) {
  Traced t;
  const auto& root = t.tr.root_relation();
  EXPECT_EQ(relaxed_view(root, 1), V(R"([{"city":"LA","nList":[{"name":"Peter"},{"name":"Sue"}]},
                                         {"city":"NY","nList":[{"name":"Sue"}]},
                                         {"city":"SF","nList":[{"name":"Peter"}]}])"));
  EXPECT_EQ(retained_view(root, 1), V(R"([{"city":"LA","nList":[{"name":"Sue"}]}])"));
  EXPECT_EQ(retained_view(root, 1), evaluate(t.s.question.plan, t.s.question.db));
  EXPECT_EQ(retained_view(root, 2), evaluate(t.sas[1].plan, t.s.question.db));
  auto ny = rows_where(t.tr, 5, 1, {{"city", S("NY")}});
  ASSERT_EQ(ny.size(), 1u);
  for (int sa : {1, 2}) EXPECT_TRUE(root.effective_consistent(*ny[0], sa));
  EXPECT_FALSE(flag(t.tr, *ny[0], AnnotationBase::Retained, 1, 3, 5));
}

TEST(TraceFixture, LineageReachesBaseRows) {
  Traced t;
  auto ny = rows_where(t.tr, 5, 1, {{"city", S("NY")}});
  ASSERT_EQ(ny.size(), 1u);
  auto base = t.tr.lineage_closure({ny[0]->id}, 1, 1);
  ASSERT_EQ(base.size(), 1u);
  EXPECT_EQ(*t.tr.snapshots.at(1).find(base[0])->sa[0]->relaxed.get("name"), S("Sue"));
  auto base2 = t.tr.lineage_closure({ny[0]->id}, 1, 2);
  ASSERT_EQ(base2.size(), 1u);
  EXPECT_EQ(*t.tr.snapshots.at(1).find(base2[0])->sa[1]->relaxed.get("name"), S("Peter"));
}

TEST(Trace, NonEquiJoinRejected) {
  auto db = fixture::db({{"A", R"({"a":"int"})", R"([{"a":1}])"}, {"B", R"({"b":"int"})", R"([{"b":2}])"}});
  auto plan = fixture::plan(R"([{"id":1,"kind":"table","params":{"name":"A"}},
                                {"id":2,"kind":"table","params":{"name":"B"}},
                                {"id":3,"kind":"join","params":{"theta":{"cmp":"<","lhs":"a","rhs":"b"}},"inputs":[1,2]}])");
  auto sas = sas_for(db, plan, P(R"({"a":5})"));
  EXPECT_EQ(code_of([&] { trace(db, sas); }), ErrorCode::NonEquiJoin);
}

TEST(Trace, OuterJoinPaddingIsFaithful) {
  auto db = fixture::db({{"A", R"({"a":"int","x":"string"})", R"([{"a":1,"x":"p"},{"a":2,"x":"q"},{"a":2,"x":"q"}])"},
                         {"B", R"({"b":"int","y":"string"})", R"([{"b":2,"y":"r"},{"b":3,"y":"s"}])"}});
  for (const char* kind : {"inner", "left", "right", "full"}) {
    auto plan = fixture::plan(std::string(R"([{"id":1,"kind":"table","params":{"name":"A"}},
                                {"id":2,"kind":"table","params":{"name":"B"}},
                                {"id":3,"kind":"join","params":{"kind":")") + kind +
                              R"(","theta":{"cmp":"=","lhs":"a","rhs":"b"}},"inputs":[1,2]}])");
    auto outcome = props::check_faithfulness(db, plan, P(R"({"x":"z"})"), {}, 16);
    EXPECT_FALSE(outcome.has_value()) << kind << ": " << outcome.value_or("");
  }
}

TEST(Trace, OuterFlattenOfEmptyBagIsFaithful) {
  auto db = fixture::db({{"N", R"({"id":"int","n":[{"x":"int"}]})", R"([{"id":1,"n":[{"x":2}]},{"id":2,"n":[]}])"}});
  for (const char* kind : {"inner", "outer"}) {
    auto plan = fixture::plan(std::string(R"([{"id":1,"kind":"table","params":{"name":"N"}},
                                {"id":2,"kind":"flatten","params":{"kind":")") + kind +
                              R"(","attr":"n"},"inputs":[1]}])");
    auto outcome = props::check_faithfulness(db, plan, P(R"({"x":7})"), {}, 16);
    EXPECT_FALSE(outcome.has_value()) << kind << ": " << outcome.value_or("");
  }
}

TEST(Trace, AggregationUnderTwoAlternatives) {
  auto db = fixture::db({{"R", R"({"id":"int","p":[{"x":"int"}],"q":[{"x":"int"}]})",
                          R"([{"id":1,"p":[{"x":1},{"x":2}],"q":[{"x":5}]},{"id":2,"p":[],"q":[{"x":1},{"x":1}]}])"}});
  auto plan = fixture::plan(R"([{"id":1,"kind":"table","params":{"name":"R"}},
                                {"id":2,"kind":"aggregation","params":{"fn":"sum","source":"p","target":"s"},"inputs":[1]},
                                {"id":3,"kind":"projection","params":{"attrs":["id","s"]},"inputs":[2]}])");
  const AttributeAlternatives alts{{"p", {"q"}}};
  auto sas = sas_for(db, plan, P(R"({"id":1,"s":5})"), alts);
  ASSERT_EQ(sas.size(), 2u);
  auto tr = trace(db, sas);
  EXPECT_EQ(retained_view(tr.root_relation(), 1), V(R"([{"id":1,"s":3},{"id":2,"s":0}])"));
  EXPECT_EQ(retained_view(tr.root_relation(), 2), V(R"([{"id":1,"s":5},{"id":2,"s":2}])"));
  EXPECT_FALSE(props::check_faithfulness(db, plan, P(R"({"id":1,"s":5})"), alts, 16).has_value());
}

TEST(TraceProperty, RetainedViewsMatchStandaloneEvaluation) {
  gen::Rng rng(2024);
  props::FaithfulnessStats stats;
  int failures = 0;
  for (int i = 0; i < 60; ++i) {
    auto db = gen::random_world(rng);
    auto plan = gen::random_plan(rng);
    const auto root = infer_schema(plan, schema_of(db)).at(plan.root());
    auto tuple = gen::random_pattern(rng, *root->element());
    auto outcome = props::check_faithfulness(db, plan, tuple, gen::world_alternatives(), 64, &stats);
    if (outcome) {
      ++failures;
      ADD_FAILURE() << *outcome << "\nplan: " << plan_to_json(plan).dump();
    }
  }
  EXPECT_EQ(failures, 0);
  EXPECT_GT(stats.comparisons, 60u);
}

TEST(TraceProperty, MatchingRootRowsAreConsistent) {
  gen::Rng rng(99);
  int checked = 0;
  for (int i = 0; i < 40; ++i) {
    auto q = gen::random_question(rng);
    if (!q) continue;
    const auto schema = schema_of(q->db);
    auto sas = enumerate_sas(backtrace_plan(q->plan, schema, q->tuple), gen::world_alternatives(), q->plan, schema, 64);
    auto tr = trace(q->db, sas);
    const auto& root = tr.root_relation();
    for (const auto& row : root.rows) {
      for (const auto& sa : sas) {
        const auto& slot = row.sa[static_cast<std::size_t>(sa.index - 1)];
        if (!slot || !matches_nip(slot->relaxed, q->tuple)) continue;
        ++checked;
        EXPECT_TRUE(root.effective_consistent(row, sa.index)) << row_to_json(root, row).dump();
      }
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(DumpTrace, OneFilePerOperator) {
  Traced t;
  auto dir = fixture::temp_dir("dump");
  dump_trace(t.tr, dir / "trace");
  for (int op : t.tr.order) {
    std::ifstream in(dir / "trace" / ("op_" + std::to_string(op) + ".jsonl"));
    ASSERT_TRUE(in.good()) << op;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      auto j = Json::parse(line);
      EXPECT_TRUE(j.contains("id"));
      ++n;
    }
    EXPECT_EQ(n, t.tr.snapshots.at(op).rows.size());
  }
}
