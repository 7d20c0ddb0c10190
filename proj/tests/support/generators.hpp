#pragma once

#include <optional>
#include <random>

#include "whynot/alternatives.hpp"
#include "whynot/engine.hpp"
#include "whynot/nip.hpp"
#include "whynot/reparam.hpp"

namespace whynot::gen {

using Rng = std::mt19937;

/// Random instance of `type`: ints in [0, 3], strings from {"x","y","z"},
/// bags of at most `max_bag` tuples, nulls with probability `null_rate`.
Value random_value(Rng& rng, const Type& type, int max_bag = 3, double null_rate = 0.0);

/// Random pattern matched by `v`: parts replaced by `?`, some bag elements
/// dropped in favour of `*`.
Nip generalize(Rng& rng, const Value& v);

/// Random pattern shaped after `type` (may or may not match a given value).
Nip random_pattern(Rng& rng, const Type& type);

/// R{a:int, b:int, s:string, items:[{k:int, v:int}]} and T{a2:int, c:int}.
DbSchema world_schema();
Database random_world(Rng& rng, int r_rows = 3, int t_rows = 2);
/// a↔b and items.k↔items.v.
AttributeAlternatives world_alternatives();

/// Random well-typed plan over the world schema: table access, optional
/// flatten of items, optional equi-join with T, optional selection,
/// optional projection, optional nesting or aggregation. At most 8 operators.
QueryPlan random_plan(Rng& rng);

/// A question whose tuple does not match the original result but matches a
/// tuple produced by some random reparameterization of one or two operators.
std::optional<WhyNotQuestion> random_question(Rng& rng, int tries = 40);

}  // namespace whynot::gen
