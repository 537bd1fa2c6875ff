#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace optswitch {

/// Tolerance for equality constraints such as `iL == 0`: a state lies on the
/// hyperplane when |a.x + b| <= tolerance.
inline constexpr double kDefaultEqualityTolerance = 1e-3;

enum class Relation { GreaterEqual, LessEqual, Equal };

/// coeffs . x + offset (>= | <= | ==) 0
struct LinearConstraint {
  std::vector<double> coeffs;
  double offset = 0.0;
  Relation relation = Relation::GreaterEqual;

  double value(std::span<const double> x) const;
  bool satisfied(std::span<const double> x, double eq_tol) const;
};

/// Conjunction of linear constraints; no constraints means all of R^n.
struct ConvexRegion {
  std::vector<LinearConstraint> constraints;

  bool contains(std::span<const double> x, double eq_tol) const;
  bool has_equality() const;
};

/// Finite union of convex polyhedra. Empty union is the empty set.
class Region {
public:
  Region() = default;
  static Region empty() { return {}; }
  static Region full();
  static Region of(ConvexRegion piece);

  bool is_empty() const { return pieces_.empty(); }
  bool is_full() const;
  bool contains(std::span<const double> x, double eq_tol = kDefaultEqualityTolerance) const;

  Region intersect(const Region& other) const;
  void add(ConvexRegion piece) { pieces_.push_back(std::move(piece)); }

  const std::vector<ConvexRegion>& pieces() const { return pieces_; }

private:
  std::vector<ConvexRegion> pieces_;
};

std::string format_number(double v);
std::string to_string(const LinearConstraint& c, std::span<const std::string> names);
std::string to_string(const ConvexRegion& r, std::span<const std::string> names);
std::string to_string(const Region& r, std::span<const std::string> names);

/// Parses "empty", "full", or a `||`-separated union of `&&`-separated linear
/// (in)equalities over `names`. Strict `<`/`>` are read as their closures.
Region parse_region(std::string_view text, std::span<const std::string> names);

} // namespace optswitch
