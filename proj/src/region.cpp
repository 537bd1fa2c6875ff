#include "optswitch/region.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <random>

#include "optswitch/expression.hpp"

namespace optswitch {

double LinearConstraint::value(std::span<const double> x) const {
  double s = offset;
  for (std::size_t i = 0; i < coeffs.size() && i < x.size(); ++i) s += coeffs[i] * x[i];
  return s;
}

bool LinearConstraint::satisfied(std::span<const double> x, double eq_tol) const {
  const double v = value(x);
  switch (relation) {
  case Relation::GreaterEqual: return v >= 0.0;
  case Relation::LessEqual: return v <= 0.0;
  case Relation::Equal: return std::fabs(v) <= eq_tol;
  }
  return false;
}

bool ConvexRegion::contains(std::span<const double> x, double eq_tol) const {
  for (const auto& c : constraints)
    if (!c.satisfied(x, eq_tol)) return false;
  return true;
}

bool ConvexRegion::has_equality() const {
  for (const auto& c : constraints)
    if (c.relation == Relation::Equal) return true;
  return false;
}

Region Region::full() {
  Region r;
  r.pieces_.emplace_back();
  return r;
}

Region Region::of(ConvexRegion piece) {
  Region r;
  r.pieces_.push_back(std::move(piece));
  return r;
}

bool Region::is_full() const {
  for (const auto& p : pieces_)
    if (p.constraints.empty()) return true;
  return false;
}

bool Region::contains(std::span<const double> x, double eq_tol) const {
  for (const auto& p : pieces_)
    if (p.contains(x, eq_tol)) return true;
  return false;
}

Region Region::intersect(const Region& other) const {
  Region out;
  for (const auto& a : pieces_) {
    for (const auto& b : other.pieces_) {
      ConvexRegion c = a;
      c.constraints.insert(c.constraints.end(), b.constraints.begin(), b.constraints.end());
      out.pieces_.push_back(std::move(c));
    }
  }
  return out;
}

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

namespace {

const char* relation_token(Relation r) {
  switch (r) {
  case Relation::GreaterEqual: return ">=";
  case Relation::LessEqual: return "<=";
  case Relation::Equal: return "==";
  }
  return "?";
}

Relation flipped(Relation r) {
  if (r == Relation::GreaterEqual) return Relation::LessEqual;
  if (r == Relation::LessEqual) return Relation::GreaterEqual;
  return r;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, std::string_view sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t at = s.find(sep, start);
    if (at == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      return out;
    }
    out.push_back(trim(s.substr(start, at - start)));
    start = at + sep.size();
  }
}

LinearConstraint parse_constraint(const std::string& text, std::span<const std::string> names) {
  struct Tok {
    std::string_view tok;
    Relation rel;
  };
  static constexpr Tok kToks[] = {{">=", Relation::GreaterEqual}, {"<=", Relation::LessEqual},
                                  {"==", Relation::Equal},        {">", Relation::GreaterEqual},
                                  {"<", Relation::LessEqual},     {"=", Relation::Equal}};
  for (const auto& t : kToks) {
    const auto at = text.find(t.tok);
    if (at == std::string::npos) continue;
    const std::string lhs = text.substr(0, at);
    const std::string rhs = text.substr(at + t.tok.size());
    SymbolTable sym;
    sym.slots.assign(names.begin(), names.end());
    const Expression e = Expression::compile("(" + lhs + ") - (" + rhs + ")", sym);

    const std::size_t n = names.size();
    std::vector<double> x(n, 0.0);
    LinearConstraint c;
    c.relation = t.rel;
    c.offset = e.eval(x);
    c.coeffs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = 1.0;
      c.coeffs[i] = e.eval(x) - c.offset;
      x[i] = 0.0;
    }
    // affinity check at a handful of deterministic random points
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int k = 0; k < 8; ++k) {
      for (auto& xi : x) xi = u(rng);
      const double lin = c.value(x);
      const double ref = e.eval(x);
      if (!(std::fabs(lin - ref) <= 1e-9 * (1.0 + std::fabs(ref))))
        throw ExpressionError("guard constraint '" + text + "' is not affine");
    }
    return c;
  }
  throw ExpressionError("guard constraint '" + text + "' has no relation operator");
}

} // namespace

std::string to_string(const LinearConstraint& c, std::span<const std::string> names) {
  int nonzero = 0;
  std::size_t which = 0;
  for (std::size_t i = 0; i < c.coeffs.size(); ++i) {
    if (c.coeffs[i] != 0.0) {
      ++nonzero;
      which = i;
    }
  }
  if (nonzero == 1) {
    const double a = c.coeffs[which];
    const Relation rel = a > 0 ? c.relation : flipped(c.relation);
    return names[which] + " " + relation_token(rel) + " " + format_number(-c.offset / a);
  }
  std::string s;
  for (std::size_t i = 0; i < c.coeffs.size(); ++i) {
    if (c.coeffs[i] == 0.0) continue;
    if (!s.empty()) s += " + ";
    s += format_number(c.coeffs[i]) + "*" + names[i];
  }
  if (s.empty()) s = "0";
  s += " + " + format_number(c.offset);
  s += std::string(" ") + relation_token(c.relation) + " 0";
  return s;
}

std::string to_string(const ConvexRegion& r, std::span<const std::string> names) {
  if (r.constraints.empty()) return "full";
  std::string s;
  for (const auto& c : r.constraints) {
    if (!s.empty()) s += " && ";
    s += to_string(c, names);
  }
  return s;
}

std::string to_string(const Region& r, std::span<const std::string> names) {
  if (r.is_empty()) return "empty";
  if (r.is_full()) return "full";
  std::string s;
  for (const auto& p : r.pieces()) {
    if (!s.empty()) s += " || ";
    s += to_string(p, names);
  }
  return s;
}

Region parse_region(std::string_view text, std::span<const std::string> names) {
  const std::string t = trim(text);
  if (t == "empty") return Region::empty();
  if (t == "full") return Region::full();
  Region r;
  for (const auto& piece : split(t, "||")) {
    ConvexRegion c;
    if (piece != "full") {
      for (const auto& atom : split(piece, "&&")) c.constraints.push_back(parse_constraint(atom, names));
    }
    r.add(std::move(c));
  }
  return r;
}

} // namespace optswitch
