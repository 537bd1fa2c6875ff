#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace optswitch {

class ExpressionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Names visible to an expression. Each slot name resolves to a position in
/// the evaluation frame; constants are folded in at compile time.
struct SymbolTable {
  std::vector<std::string> slots;
  std::map<std::string, double, std::less<>> constants;

  int slot_of(std::string_view name) const;
};

/// Compiled infix expression over a flat frame of doubles.
///
/// Grammar: ternary `c ? a : b`, `|| && !`, comparisons `< <= > >= == !=`,
/// `+ - * / ^`, unary minus, numeric literals, identifiers and calls to
/// sin cos tan exp log sqrt abs floor sign min max pow mod atan2 if.
/// Comparisons and logic yield 1.0 / 0.0.
class Expression {
public:
  Expression() = default;

  static Expression compile(std::string_view text, const SymbolTable& symbols);
  static Expression constant(double value);

  double eval(std::span<const double> frame) const;

  const std::string& text() const { return text_; }
  bool empty() const { return code_.empty(); }
  bool references(int slot) const;

  enum class Op : unsigned char {
    Const, Slot,
    Neg, Not,
    Add, Sub, Mul, Div, Pow,
    Lt, Le, Gt, Ge, Eq, Ne, And, Or,
    Select,
    Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Floor, Sign,
    Min, Max, Mod, Atan2,
  };

  struct Instr {
    Op op;
    int slot = 0;
    double value = 0.0;
  };

private:
  std::string text_;
  std::vector<Instr> code_;
  int max_depth_ = 0;
};

} // namespace optswitch
