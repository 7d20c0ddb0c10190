#include "whynot/nip.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include "whynot/error.hpp"

namespace whynot {

Nip Nip::star() {
  Nip n;
  n.kind_ = Kind::Star;
  return n;
}

Nip Nip::concrete(Value v) {
  Nip n;
  n.kind_ = Kind::Concrete;
  n.value_ = std::move(v);
  return n;
}

Nip Nip::tuple(std::vector<NamedNip> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].pattern.is_star()) {
      fail(ErrorCode::InvalidNip, "'*' cannot be an attribute value ('" + fields[i].name + "')");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (fields[j].name == fields[i].name) {
        fail(ErrorCode::InvalidNip, "duplicate attribute '" + fields[i].name + "' in pattern");
      }
    }
  }
  Nip n;
  n.kind_ = Kind::Tuple;
  n.fields_ = std::make_shared<const std::vector<NamedNip>>(std::move(fields));
  return n;
}

Nip Nip::bag(std::vector<Nip> elements) {
  int stars = 0;
  for (const auto& e : elements) {
    switch (e.kind()) {
      case Kind::Star:
        if (++stars > 1) fail(ErrorCode::InvalidNip, "at most one '*' per bag pattern");
        break;
      case Kind::Any:
      case Kind::Tuple:
        break;
      case Kind::Concrete:
        if (!e.value().is_tuple()) {
          fail(ErrorCode::InvalidNip, "bag pattern element must be a tuple: " + to_string(e.value()));
        }
        break;
      case Kind::Bag:
        fail(ErrorCode::InvalidNip, "bag pattern element must be a tuple pattern");
    }
  }
  Nip n;
  n.kind_ = Kind::Bag;
  n.elements_ = std::make_shared<const std::vector<Nip>>(std::move(elements));
  return n;
}

const Value& Nip::value() const {
  if (kind_ != Kind::Concrete) fail(ErrorCode::InvalidNip, "pattern is not concrete");
  return value_;
}

const std::vector<NamedNip>& Nip::fields() const {
  if (kind_ != Kind::Tuple) fail(ErrorCode::InvalidNip, "pattern is not a tuple pattern");
  return *fields_;
}

const std::vector<Nip>& Nip::elements() const {
  if (kind_ != Kind::Bag) fail(ErrorCode::InvalidNip, "pattern is not a bag pattern");
  return *elements_;
}

const Nip* Nip::field(std::string_view name) const {
  if (kind_ != Kind::Tuple) return nullptr;
  for (const auto& f : *fields_) {
    if (f.name == name) return &f.pattern;
  }
  return nullptr;
}

bool Nip::is_ground() const {
  switch (kind_) {
    case Kind::Any:
    case Kind::Star:
      return false;
    case Kind::Concrete:
      return true;
    case Kind::Tuple:
      return std::all_of(fields_->begin(), fields_->end(),
                         [](const NamedNip& f) { return f.pattern.is_ground(); });
    case Kind::Bag:
      return std::all_of(elements_->begin(), elements_->end(),
                         [](const Nip& e) { return e.is_ground(); });
  }
  return false;
}

Value Nip::to_value() const {
  switch (kind_) {
    case Kind::Concrete:
      return value_;
    case Kind::Tuple: {
      std::vector<NamedValue> out;
      for (const auto& f : *fields_) out.push_back({f.name, f.pattern.to_value()});
      return Value::tuple(std::move(out));
    }
    case Kind::Bag: {
      BagBuilder b;
      for (const auto& e : *elements_) b.add(e.to_value());
      return std::move(b).build();
    }
    default:
      fail(ErrorCode::InvalidNip, "pattern with placeholders has no value");
  }
}

bool operator==(const Nip& a, const Nip& b) {
  if (a.kind_ != b.kind_) return false;
  switch (a.kind_) {
    case Nip::Kind::Any:
    case Nip::Kind::Star:
      return true;
    case Nip::Kind::Concrete:
      return a.value_ == b.value_;
    case Nip::Kind::Tuple: {
      if (a.fields_->size() != b.fields_->size()) return false;
      for (const auto& f : *a.fields_) {
        const Nip* g = b.field(f.name);
        if (!g || !(f.pattern == *g)) return false;
      }
      return true;
    }
    case Nip::Kind::Bag:
      return *a.elements_ == *b.elements_;
  }
  return false;
}

bool operator==(const NamedNip& a, const NamedNip& b) { return a.name == b.name && a.pattern == b.pattern; }

void validate_top_level(const Nip& p) {
  if (p.is_star()) fail(ErrorCode::InvalidNip, "'*' is only valid as a bag element");
}

namespace {

constexpr std::uint64_t kInfinite = std::numeric_limits<std::uint64_t>::max() / 4;

/// Dense max-flow over a tiny bipartite network (Edmonds-Karp).
class FlowNetwork {
 public:
  explicit FlowNetwork(std::size_t n) : cap_(n, std::vector<std::uint64_t>(n, 0)) {}

  void add_edge(std::size_t from, std::size_t to, std::uint64_t capacity) { cap_[from][to] += capacity; }

  std::uint64_t max_flow(std::size_t source, std::size_t sink) {
    std::uint64_t total = 0;
    const std::size_t n = cap_.size();
    std::vector<std::size_t> parent(n);
    while (true) {
      std::fill(parent.begin(), parent.end(), n);
      parent[source] = source;
      std::queue<std::size_t> q;
      q.push(source);
      while (!q.empty() && parent[sink] == n) {
        auto u = q.front();
        q.pop();
        for (std::size_t v = 0; v < n; ++v) {
          if (parent[v] == n && cap_[u][v] > 0) {
            parent[v] = u;
            q.push(v);
          }
        }
      }
      if (parent[sink] == n) return total;
      std::uint64_t push = kInfinite;
      for (auto v = sink; v != source; v = parent[v]) push = std::min(push, cap_[parent[v]][v]);
      for (auto v = sink; v != source; v = parent[v]) {
        cap_[parent[v]][v] -= push;
        cap_[v][parent[v]] += push;
      }
      total += push;
    }
  }

 private:
  std::vector<std::vector<std::uint64_t>> cap_;
};

bool match_bag(const Value& v, const Nip& p) {
  const auto& elements = p.elements();
  bool has_star = false;
  // Group identical non-star elements: one demand node per distinct pattern.
  std::vector<const Nip*> groups;
  std::vector<std::uint64_t> demand;
  for (const auto& e : elements) {
    if (e.is_star()) {
      has_star = true;
      continue;
    }
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Nip* g) { return *g == e; });
    if (it == groups.end()) {
      groups.push_back(&e);
      demand.push_back(1);
    } else {
      ++demand[static_cast<std::size_t>(it - groups.begin())];
    }
  }
  const auto entries = v.entries();
  std::uint64_t supply = v.cardinality();
  std::uint64_t required = 0;
  for (auto d : demand) required += d;
  if (has_star ? supply < required : supply != required) return false;
  if (required == 0) return true;
  // `?` slots accept any tuple, so the counts above decide.
  if (std::all_of(groups.begin(), groups.end(), [](const Nip* g) { return g->is_any(); })) return true;

  const std::size_t source = 0;
  const std::size_t first_entry = 1;
  const std::size_t first_group = first_entry + entries.size();
  const std::size_t sink = first_group + groups.size();
  FlowNetwork net(sink + 1);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    net.add_edge(source, first_entry + i, entries[i].multiplicity);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (matches_nip(entries[i].value, *groups[g])) net.add_edge(first_entry + i, first_group + g, kInfinite);
    }
  }
  for (std::size_t g = 0; g < groups.size(); ++g) net.add_edge(first_group + g, sink, demand[g]);
  // Every non-star slot must be filled exactly; leftovers go to the star.
  return net.max_flow(source, sink) == required;
}

}  // namespace

bool matches_nip(const Value& v, const Nip& p) {
  switch (p.kind()) {
    case Nip::Kind::Any:
      return true;
    case Nip::Kind::Star:
      fail(ErrorCode::InvalidNip, "'*' is only valid as a bag element");
    case Nip::Kind::Concrete:
      return v == p.value();
    case Nip::Kind::Tuple: {
      if (v.is_null()) return false;
      if (!v.is_tuple()) {
        fail(ErrorCode::TypeMismatch, "tuple pattern " + to_string(p) + " against " + to_string(v));
      }
      for (const auto& f : p.fields()) {
        const Value* x = v.get(f.name);
        if (!x) fail(ErrorCode::TypeMismatch, "value has no attribute '" + f.name + "': " + to_string(v));
        if (!matches_nip(*x, f.pattern)) return false;
      }
      return true;
    }
    case Nip::Kind::Bag: {
      if (v.is_null()) return false;
      if (!v.is_bag()) {
        fail(ErrorCode::TypeMismatch, "bag pattern " + to_string(p) + " against " + to_string(v));
      }
      return match_bag(v, p);
    }
  }
  return false;
}

bool nip_conforms(const Nip& p, const Type& type) {
  switch (p.kind()) {
    case Nip::Kind::Any:
    case Nip::Kind::Star:
      return true;
    case Nip::Kind::Concrete:
      return conforms(p.value(), type);
    case Nip::Kind::Tuple:
      if (!type.is_tuple()) return type.is_bottom();
      for (const auto& f : p.fields()) {
        const Field* t = type.find(f.name);
        if (!t || !nip_conforms(f.pattern, *t->type)) return false;
      }
      return true;
    case Nip::Kind::Bag:
      if (!type.is_bag()) return type.is_bottom();
      for (const auto& e : p.elements()) {
        if (!nip_conforms(e, *type.element())) return false;
      }
      return true;
  }
  return false;
}

Nip all_any_tuple(const Type& tuple_type) {
  std::vector<NamedNip> fields;
  for (const auto& f : tuple_type.fields()) fields.push_back({f.name, Nip::any()});
  return Nip::tuple(std::move(fields));
}

std::string to_string(const Nip& p) {
  switch (p.kind()) {
    case Nip::Kind::Any: return "?";
    case Nip::Kind::Star: return "*";
    case Nip::Kind::Concrete: return to_string(p.value());
    case Nip::Kind::Tuple: {
      std::string out = "<";
      bool first = true;
      for (const auto& f : p.fields()) {
        if (!first) out += ", ";
        first = false;
        out += f.name + ": " + to_string(f.pattern);
      }
      return out + ">";
    }
    case Nip::Kind::Bag: {
      std::string out = "{";
      bool first = true;
      for (const auto& e : p.elements()) {
        if (!first) out += ", ";
        first = false;
        out += to_string(e);
      }
      return out + "}";
    }
  }
  return "?";
}

}  // namespace whynot
