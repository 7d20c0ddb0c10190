#include <gtest/gtest.h>

#include "fixture.hpp"
#include "properties.hpp"
#include "whynot/engine.hpp"
#include "whynot/error.hpp"

using namespace whynot;
using fixture::P;
using fixture::T;
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

Database flat_db() {
  return fixture::db({{"R", R"({"a":"string","v":"int"})", R"([{"a":"a","v":1},{"a":"a","v":2},{"a":"b","v":1}])"},
                      {"S", R"({"w":"int","x":"string"})", R"([{"w":1,"x":"p"},{"w":1,"x":"p"},{"w":3,"x":"q"}])"}});
}

Value run(const std::string& plan_json, const Database& db) { return evaluate(fixture::plan(plan_json), db); }

}  // namespace

TEST(InferSchema, FixtureRootType) {
  auto s = fixture::running_example();
  auto types = infer_schema(s.question.plan, schema_of(s.question.db));
  EXPECT_TRUE(type_equal(*types.at(s.question.plan.root()), *T(R"([{"city":"string","nList":[{"name":"string"}]}])")));
}

TEST(InferSchema, TableAccessKeepsDeclaredSchema) {
  auto s = fixture::running_example();
  auto types = infer_schema(s.question.plan, schema_of(s.question.db));
  EXPECT_TRUE(type_equal(*types.at(1), *s.question.db.at("person").type));
}

TEST(InferSchema, InnerFlattenConcatenatesElementType) {
  // Relation inner flatten: R's type ∘ τ, attribute by attribute.
  auto s = fixture::running_example();
  auto types = infer_schema(s.question.plan, schema_of(s.question.db));
  const auto& element = *types.at(2)->element();
  EXPECT_EQ(element.names(), (std::vector<std::string>{"name", "address1", "address2", "city", "year"}));
  EXPECT_EQ(element.find("year")->type->kind(), TypeKind::Int);
}

TEST(InferSchema, Errors) {
  auto db = schema_of(flat_db());
  EXPECT_EQ(code_of([&] {
              infer_schema(fixture::plan(R"([{"id":1,"kind":"table","params":{"name":"R"}},
                {"id":2,"kind":"projection","params":{"attrs":["zz"]},"inputs":[1]}])"), db);
            }),
            ErrorCode::UnknownAttribute);
  EXPECT_EQ(code_of([&] {
              infer_schema(fixture::plan(R"([{"id":1,"kind":"table","params":{"name":"R"}},
                {"id":2,"kind":"flatten","params":{"kind":"inner","attr":"v"},"inputs":[1]}])"), db);
            }),
            ErrorCode::KindMismatch);
  auto nested = schema_of(fixture::db({{"N", R"({"a":"int","n":[{"a":"int"}]})", "[]"}}));
  EXPECT_EQ(code_of([&] {
              infer_schema(fixture::plan(R"([{"id":1,"kind":"table","params":{"name":"N"}},
                {"id":2,"kind":"flatten","params":{"kind":"inner","attr":"n"},"inputs":[1]}])"), nested);
            }),
            ErrorCode::DuplicateAttribute);
  EXPECT_EQ(code_of([&] {
              infer_schema(fixture::plan(R"([{"id":1,"kind":"table","params":{"name":"R"}},
                {"id":2,"kind":"aggregation","params":{"fn":"sum","source":"v","target":"t"},"inputs":[1]}])"), db);
            }),
            ErrorCode::AggregationOnNonBag);
}

TEST(QueryPlanShape, MalformedPlansRejected) {
  EXPECT_EQ(code_of([] { fixture::plan(R"([{"id":1,"kind":"table","params":{"name":"R"}},
                                           {"id":1,"kind":"dedup","inputs":[1]}])"); }),
            ErrorCode::MalformedPlan);
  EXPECT_EQ(code_of([] { fixture::plan(R"([{"id":1,"kind":"table","params":{"name":"R"}},
                                           {"id":2,"kind":"table","params":{"name":"S"}}])"); }),
            ErrorCode::MalformedPlan);
  EXPECT_EQ(code_of([] { fixture::plan(R"([{"id":1,"kind":"selection","params":{"theta":true},"inputs":[]}])"); }),
            ErrorCode::MalformedPlan);
  EXPECT_EQ(code_of([] { fixture::plan(R"([{"id":1,"kind":"warp"}])"); }), ErrorCode::MalformedPlan);
}

TEST(QueryPlanShape, JsonRoundTrip) {
  auto s = fixture::running_example();
  auto again = plan_from_json(plan_to_json(s.question.plan));
  EXPECT_EQ(plan_to_json(again), plan_to_json(s.question.plan));
  EXPECT_EQ(again.post_order(), (std::vector<int>{1, 2, 3, 4, 5}));
  EXPECT_EQ(again.root(), 5);
  EXPECT_EQ(again.parent(3), 4);
}

TEST(Evaluate, FixtureQueryYieldsSingleNestedTuple) {
  auto s = fixture::running_example();
  EXPECT_EQ(evaluate(s.question.plan, s.question.db), V(R"([{"city":"LA","nList":[{"name":"Sue"}]}])"));
}

TEST(Evaluate, TrivialSelectionAndFullProjection) {
  auto db = flat_db();
  const Value r = db.at("R").rows;
  EXPECT_EQ(run(R"([{"id":1,"kind":"table","params":{"name":"R"}},
                    {"id":2,"kind":"selection","params":{"theta":true},"inputs":[1]}])", db), r);
  EXPECT_EQ(run(R"([{"id":1,"kind":"table","params":{"name":"R"}},
                    {"id":2,"kind":"projection","params":{"attrs":["a","v"]},"inputs":[1]}])", db), r);
}

TEST(Evaluate, RelationNestGroupsOnRemainingAttributes) {
  EXPECT_EQ(run(R"([{"id":1,"kind":"table","params":{"name":"R"}},
                    {"id":2,"kind":"relation_nest","params":{"attrs":["v"],"target":"C"},"inputs":[1]}])", flat_db()),
            V(R"([{"a":"a","C":[{"v":1},{"v":2}]},{"a":"b","C":[{"v":1}]}])"));
}

TEST(Evaluate, RelationNestKeepsDuplicatesInsideGroups) {
  EXPECT_EQ(run(R"([{"id":1,"kind":"table","params":{"name":"S"}},
                    {"id":2,"kind":"relation_nest","params":{"attrs":["x"],"target":"C"},"inputs":[1]}])", flat_db()),
            V(R"([{"w":1,"C":[{"x":"p"},{"x":"p"}]},{"w":3,"C":[{"x":"q"}]}])"));
}

TEST(Evaluate, TupleNest) {
  EXPECT_EQ(run(R"([{"id":1,"kind":"table","params":{"name":"S"}},
                    {"id":2,"kind":"tuple_nest","params":{"attrs":["x"],"target":"C"},"inputs":[1]}])", flat_db()),
            V(R"([{"w":1,"C":{"x":"p"}},{"w":1,"C":{"x":"p"}},{"w":3,"C":{"x":"q"}}])"));
}

TEST(Evaluate, LeftJoinOnFalsePadsEveryTuple) {
  EXPECT_EQ(run(R"([{"id":1,"kind":"table","params":{"name":"S"}},{"id":2,"kind":"table","params":{"name":"R"}},
                    {"id":3,"kind":"join","params":{"kind":"left","theta":false},"inputs":[1,2]}])", flat_db()),
            V(R"([{"w":1,"x":"p","a":null,"v":null},{"w":1,"x":"p","a":null,"v":null},
                  {"w":3,"x":"q","a":null,"v":null}])"));
}

TEST(Evaluate, JoinMultipliesMultiplicities) {
  auto out = run(R"([{"id":1,"kind":"table","params":{"name":"R"}},{"id":2,"kind":"table","params":{"name":"S"}},
                     {"id":3,"kind":"join","params":{"theta":{"cmp":"=","lhs":"v","rhs":"w"}},"inputs":[1,2]}])",
                 flat_db());
  EXPECT_EQ(out, V(R"([{"a":"a","v":1,"w":1,"x":"p"},{"a":"a","v":1,"w":1,"x":"p"},
                       {"a":"b","v":1,"w":1,"x":"p"},{"a":"b","v":1,"w":1,"x":"p"}])"));
}

TEST(Evaluate, RightAndFullJoinPadding) {
  auto db = flat_db();
  auto right = run(R"([{"id":1,"kind":"table","params":{"name":"R"}},{"id":2,"kind":"table","params":{"name":"S"}},
                       {"id":3,"kind":"join","params":{"kind":"right","theta":{"cmp":"=","lhs":"v","rhs":"w"}},"inputs":[1,2]}])",
                   db);
  EXPECT_EQ(right.cardinality(), 5u);
  EXPECT_EQ(right.multiplicity(V(R"({"a":null,"v":null,"w":3,"x":"q"})")), 1u);
  auto full = run(R"([{"id":1,"kind":"table","params":{"name":"R"}},{"id":2,"kind":"table","params":{"name":"S"}},
                      {"id":3,"kind":"join","params":{"kind":"full","theta":{"cmp":"=","lhs":"v","rhs":"w"}},"inputs":[1,2]}])",
                  db);
  EXPECT_EQ(full.cardinality(), 6u);
  EXPECT_EQ(full.multiplicity(V(R"({"a":"a","v":2,"w":null,"x":null})")), 1u);
}

TEST(Evaluate, ProjectionSumsCollapsingMultiplicities) {
  auto out = run(R"([{"id":1,"kind":"table","params":{"name":"R"}},
                     {"id":2,"kind":"projection","params":{"attrs":["a"]},"inputs":[1]}])", flat_db());
  EXPECT_EQ(out, V(R"([{"a":"a"},{"a":"a"},{"a":"b"}])"));
}

TEST(Evaluate, UnionDedupDifferenceCross) {
  auto db = flat_db();
  auto uni = run(R"([{"id":1,"kind":"table","params":{"name":"S"}},{"id":2,"kind":"table","params":{"name":"S"}},
                     {"id":3,"kind":"union","inputs":[1,2]}])", db);
  EXPECT_EQ(uni.multiplicity(V(R"({"w":1,"x":"p"})")), 4u);
  auto dd = run(R"([{"id":1,"kind":"table","params":{"name":"S"}},{"id":2,"kind":"dedup","inputs":[1]}])", db);
  EXPECT_EQ(dd, V(R"([{"w":1,"x":"p"},{"w":3,"x":"q"}])"));
  auto diff = run(R"([{"id":1,"kind":"table","params":{"name":"S"}},{"id":2,"kind":"table","params":{"name":"S"}},
                      {"id":3,"kind":"selection","params":{"theta":{"cmp":"=","lhs":"w","rhs":{"const":1}}},"inputs":[2]},
                      {"id":4,"kind":"dedup","inputs":[3]},
                      {"id":5,"kind":"difference","inputs":[1,4]}])", db);
  EXPECT_EQ(diff, V(R"([{"w":1,"x":"p"},{"w":3,"x":"q"}])"));
  auto cross = run(R"([{"id":1,"kind":"table","params":{"name":"R"}},{"id":2,"kind":"table","params":{"name":"S"}},
                       {"id":3,"kind":"cross","inputs":[1,2]}])", db);
  EXPECT_EQ(cross.cardinality(), 9u);
}

TEST(Evaluate, FlattenKinds) {
  auto db = fixture::db({{"N", R"({"id":"int","n":[{"x":"int"}],"t":{"y":"int"}})",
                          R"([{"id":1,"n":[{"x":5},{"x":6}],"t":{"y":7}},{"id":2,"n":[],"t":{"y":8}}])"}});
  auto inner = run(R"([{"id":1,"kind":"table","params":{"name":"N"}},
                       {"id":2,"kind":"flatten","params":{"kind":"inner","attr":"n"},"inputs":[1]},
                       {"id":3,"kind":"projection","params":{"attrs":["id","x"]},"inputs":[2]}])", db);
  EXPECT_EQ(inner, V(R"([{"id":1,"x":5},{"id":1,"x":6}])"));
  auto outer = run(R"([{"id":1,"kind":"table","params":{"name":"N"}},
                       {"id":2,"kind":"flatten","params":{"kind":"outer","attr":"n"},"inputs":[1]},
                       {"id":3,"kind":"projection","params":{"attrs":["id","x"]},"inputs":[2]}])", db);
  EXPECT_EQ(outer, V(R"([{"id":1,"x":5},{"id":1,"x":6},{"id":2,"x":null}])"));
  auto tuple = run(R"([{"id":1,"kind":"table","params":{"name":"N"}},
                       {"id":2,"kind":"flatten","params":{"kind":"tuple","attr":"t"},"inputs":[1]},
                       {"id":3,"kind":"projection","params":{"attrs":["id","y"]},"inputs":[2]}])", db);
  EXPECT_EQ(tuple, V(R"([{"id":1,"y":7},{"id":2,"y":8}])"));
}

TEST(Evaluate, AggregationFunctions) {
  auto db = fixture::db({{"N", R"({"id":"int","n":[{"x":"int"}]})",
                          R"([{"id":1,"n":[{"x":2},{"x":3},{"x":3}]},{"id":2,"n":[]}])"}});
  auto agg = [&](const std::string& fn) {
    return run(R"([{"id":1,"kind":"table","params":{"name":"N"}},
                   {"id":2,"kind":"aggregation","params":{"fn":")" + fn + R"(","source":"n","target":"r"},"inputs":[1]},
                   {"id":3,"kind":"projection","params":{"attrs":["id","r"]},"inputs":[2]}])", db);
  };
  EXPECT_EQ(agg("count"), V(R"([{"id":1,"r":3},{"id":2,"r":0}])"));
  EXPECT_EQ(agg("sum"), V(R"([{"id":1,"r":8},{"id":2,"r":0}])"));
  EXPECT_EQ(agg("min"), V(R"([{"id":1,"r":2},{"id":2,"r":null}])"));
  EXPECT_EQ(agg("max"), V(R"([{"id":1,"r":3},{"id":2,"r":null}])"));
  EXPECT_EQ(agg("avg"), V(R"([{"id":1,"r":2},{"id":2,"r":null}])"));  // 8 / 3 truncated
}

TEST(Evaluate, ComparisonsWithNullAreFalse) {
  auto db = fixture::db({{"R", R"({"v":"int"})", R"([{"v":null},{"v":1}])"}});
  for (const char* op : {"=", "!=", "<", "<=", ">", ">="}) {
    auto out = run(std::string(R"([{"id":1,"kind":"table","params":{"name":"R"}},
                    {"id":2,"kind":"selection","params":{"theta":{"cmp":")") + op + R"(","lhs":"v","rhs":{"const":1}}},"inputs":[1]}])",
                   db);
    EXPECT_EQ(out.multiplicity(V(R"({"v":null})")), 0u) << op;
  }
  auto negated = run(R"([{"id":1,"kind":"table","params":{"name":"R"}},
                         {"id":2,"kind":"selection","params":{"theta":{"or":[{"cmp":"=","lhs":"v","rhs":{"const":1}},
                           {"not":{"cmp":"=","lhs":"v","rhs":{"const":1}}}]}},"inputs":[1]}])", db);
  EXPECT_EQ(negated, V(R"([{"v":1}])"));
}

TEST(Evaluate, NestedPathsInPredicates) {
  auto db = fixture::db({{"R", R"({"p":{"q":"int"},"k":"int"})", R"([{"p":{"q":1},"k":1},{"p":{"q":2},"k":2}])"}});
  auto out = run(R"([{"id":1,"kind":"table","params":{"name":"R"}},
                     {"id":2,"kind":"selection","params":{"theta":{"cmp":">","lhs":"p.q","rhs":{"const":1}}},"inputs":[1]},
                     {"id":3,"kind":"projection","params":{"attrs":["k"]},"inputs":[2]}])", db);
  EXPECT_EQ(out, V(R"([{"k":2}])"));
}

TEST(EngineLaws, RandomPlans) {
  gen::Rng rng(101);
  for (int i = 0; i < 200; ++i) {
    auto failure = props::check_engine_laws(rng);
    ASSERT_FALSE(failure.has_value()) << *failure;
  }
}
