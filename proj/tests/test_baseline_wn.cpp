#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <set>

#include "fixture.hpp"
#include "generators.hpp"
#include "whynot/baseline_wn.hpp"
#include "whynot/error.hpp"
#include "whynot/explain.hpp"

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

}  // namespace

TEST(PickyFixture, SelectionIsPicky) {
  auto s = fixture::running_example();
  auto report = picky_operators(s.question);
  EXPECT_EQ(report.picky_ops, std::vector<int>{3});
  ASSERT_EQ(report.compatible_tuples.size(), 1u);
  EXPECT_EQ(*report.compatible_tuples[0].get("name"), Value::string("Sue"));
  EXPECT_EQ(picky_report_to_json(report, s.question.plan)["picky"], Json::parse(R"([{"id":3,"kind":"selection"}])"));
}

TEST(Picky, NoCompatiblesNoPickyOperators) {
  auto db = fixture::db({{"R", R"({"a":"int","b":"int"})", R"([{"a":1,"b":1},{"a":2,"b":2}])"}});
  auto plan = fixture::plan(R"([{"id":1,"kind":"table","params":{"name":"R"}},
                                {"id":2,"kind":"selection","params":{"theta":{"cmp":">","lhs":"b","rhs":{"const":1}}},"inputs":[1]}])");
  auto report = picky_operators({plan, db, P(R"({"a":7})")});
  EXPECT_TRUE(report.compatibles.empty());
  EXPECT_TRUE(report.picky_ops.empty());
}

TEST(Picky, InnerFlattenOfEmptyBagIsPicky) {
  auto db = fixture::db({{"N", R"({"id":"int","n":[{"x":"int"}]})", R"([{"id":1,"n":[]},{"id":2,"n":[{"x":3}]}])"}});
  auto plan = fixture::plan(R"([{"id":1,"kind":"table","params":{"name":"N"}},
                                {"id":2,"kind":"flatten","params":{"kind":"inner","attr":"n"},"inputs":[1]},
                                {"id":3,"kind":"projection","params":{"attrs":["id","x"]},"inputs":[2]}])");
  auto report = picky_operators({plan, db, P(R"({"id":1})")});
  ASSERT_EQ(report.compatible_tuples.size(), 1u);
  EXPECT_EQ(report.compatible_tuples[0], V(R"({"id":1,"n":[]})"));
  EXPECT_EQ(report.picky_ops, std::vector<int>{2});
}

TEST(Picky, SelectionAfterJoin) {
  auto db = fixture::db({{"A", R"({"a":"int","x":"string"})", R"([{"a":1,"x":"p"},{"a":2,"x":"q"}])"},
                         {"B", R"({"b":"int","y":"int"})", R"([{"b":1,"y":5},{"b":2,"y":9}])"}});
  auto plan = fixture::plan(R"([{"id":1,"kind":"table","params":{"name":"A"}},
                                {"id":2,"kind":"table","params":{"name":"B"}},
                                {"id":3,"kind":"join","params":{"theta":{"cmp":"=","lhs":"a","rhs":"b"}},"inputs":[1,2]},
                                {"id":4,"kind":"selection","params":{"theta":{"cmp":">","lhs":"y","rhs":{"const":6}}},"inputs":[3]},
                                {"id":5,"kind":"projection","params":{"attrs":["x"]},"inputs":[4]}])");
  auto report = picky_operators({plan, db, P(R"({"x":"p"})")});
  EXPECT_EQ(report.picky_ops, std::vector<int>{4});
}

TEST(Picky, AnsweredQuestionRejected) {
  auto s = fixture::running_example();
  s.question.tuple = P(R"({"city":"LA"})");
  EXPECT_EQ(code_of([&] { picky_operators(s.question); }), ErrorCode::PreconditionViolated);
}

TEST(PickyProperty, PassThroughOperatorsAreNeverPicky) {
  // Table access, projection, renaming and union keep every successor they
  // receive; only filtering or regrouping operators can lose them all.
  gen::Rng rng(17);
  int seen = 0;
  for (int i = 0; i < 60; ++i) {
    auto q = gen::random_question(rng);
    if (!q) continue;
    auto report = picky_operators(*q);
    for (int op : report.picky_ops) {
      const auto& node = q->plan.node(op);
      ++seen;
      EXPECT_TRUE(node.kind != OpKind::TableAccess && node.kind != OpKind::Projection &&
                  node.kind != OpKind::Renaming && node.kind != OpKind::Union)
          << op_kind_name(node.kind);
    }
    if (report.compatibles.empty()) EXPECT_TRUE(report.picky_ops.empty());
    std::set<int> ids(report.picky_ops.begin(), report.picky_ops.end());
    EXPECT_EQ(ids.size(), report.picky_ops.size());
    EXPECT_TRUE(std::is_sorted(report.picky_ops.begin(), report.picky_ops.end()));
  }
  EXPECT_GT(seen, 0);
}
