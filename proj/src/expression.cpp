#include "optswitch/expression.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

namespace optswitch {

int SymbolTable::slot_of(std::string_view name) const {
  for (std::size_t i = 0; i < slots.size(); ++i)
    if (slots[i] == name) return static_cast<int>(i);
  return -1;
}

namespace {

using Op = Expression::Op;
using Instr = Expression::Instr;

struct FunctionInfo {
  std::string_view name;
  int arity;
  Op op;
};

constexpr std::array<FunctionInfo, 15> kFunctions{{
    {"sin", 1, Op::Sin},   {"cos", 1, Op::Cos},     {"tan", 1, Op::Tan},
    {"exp", 1, Op::Exp},   {"log", 1, Op::Log},     {"sqrt", 1, Op::Sqrt},
    {"abs", 1, Op::Abs},   {"floor", 1, Op::Floor}, {"sign", 1, Op::Sign},
    {"min", 2, Op::Min},   {"max", 2, Op::Max},     {"pow", 2, Op::Pow},
    {"mod", 2, Op::Mod},   {"atan2", 2, Op::Atan2}, {"if", 3, Op::Select},
}};

class Parser {
public:
  Parser(std::string_view text, const SymbolTable& symbols)
      : text_(text), symbols_(symbols) {}

  std::vector<Instr> run(int& max_depth) {
    skip_ws();
    ternary();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    max_depth = max_depth_;
    return std::move(code_);
  }

private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ExpressionError("expression '" + std::string(text_) + "': " + what +
                          " at offset " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(std::string_view tok) {
    skip_ws();
    if (text_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  void emit(Instr in, int stack_delta) {
    code_.push_back(in);
    depth_ += stack_delta;
    if (depth_ > max_depth_) max_depth_ = depth_;
  }
  void emit_op(Op op, int arity) { emit({op}, 1 - arity); }

  void ternary() {
    logic_or();
    if (accept("?")) {
      ternary();
      if (!accept(":")) fail("expected ':'");
      ternary();
      emit_op(Op::Select, 3);
    }
  }

  void logic_or() {
    logic_and();
    while (accept("||")) {
      logic_and();
      emit_op(Op::Or, 2);
    }
  }

  void logic_and() {
    comparison();
    while (accept("&&")) {
      comparison();
      emit_op(Op::And, 2);
    }
  }

  void comparison() {
    additive();
    for (;;) {
      Op op;
      if (accept("<=")) op = Op::Le;
      else if (accept(">=")) op = Op::Ge;
      else if (accept("==")) op = Op::Eq;
      else if (accept("!=")) op = Op::Ne;
      else if (accept("<")) op = Op::Lt;
      else if (accept(">")) op = Op::Gt;
      else return;
      additive();
      emit_op(op, 2);
    }
  }

  void additive() {
    multiplicative();
    for (;;) {
      if (accept("+")) {
        multiplicative();
        emit_op(Op::Add, 2);
      } else if (accept("-")) {
        multiplicative();
        emit_op(Op::Sub, 2);
      } else {
        return;
      }
    }
  }

  void multiplicative() {
    unary();
    for (;;) {
      if (accept("*")) {
        unary();
        emit_op(Op::Mul, 2);
      } else if (accept("/")) {
        unary();
        emit_op(Op::Div, 2);
      } else {
        return;
      }
    }
  }

  void unary() {
    if (accept("-")) {
      unary();
      emit_op(Op::Neg, 1);
    } else if (accept("+")) {
      unary();
    } else if (!peek("!=") && accept("!")) {
      unary();
      emit_op(Op::Not, 1);
    } else {
      power();
    }
  }

  bool peek(std::string_view tok) {
    skip_ws();
    return text_.substr(pos_, tok.size()) == tok;
  }

  void power() {
    primary();
    if (accept("^")) {
      unary(); // right associative, binds tighter than unary minus on the left
      emit_op(Op::Pow, 2);
    }
  }

  void primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      ternary();
      if (!accept(")")) fail("expected ')'");
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      identifier();
      return;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  void number() {
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{}) fail("bad number");
    pos_ += static_cast<std::size_t>(ptr - first);
    emit({Op::Const, 0, v}, 1);
  }

  void identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);

    if (accept("(")) {
      for (const auto& fn : kFunctions) {
        if (fn.name != name) continue;
        for (int i = 0; i < fn.arity; ++i) {
          if (i > 0 && !accept(",")) fail("expected ',' in call to " + std::string(name));
          ternary();
        }
        if (!accept(")")) fail("expected ')' after arguments");
        emit_op(fn.op, fn.arity);
        return;
      }
      fail("unknown function '" + std::string(name) + "'");
    }

    if (name == "pi") {
      emit({Op::Const, 0, 3.14159265358979323846}, 1);
      return;
    }
    if (const int slot = symbols_.slot_of(name); slot >= 0) {
      emit({Op::Slot, slot, 0.0}, 1);
      return;
    }
    if (auto it = symbols_.constants.find(name); it != symbols_.constants.end()) {
      emit({Op::Const, 0, it->second}, 1);
      return;
    }
    fail("unknown identifier '" + std::string(name) + "'");
  }

  std::string_view text_;
  const SymbolTable& symbols_;
  std::size_t pos_ = 0;
  std::vector<Instr> code_;
  int depth_ = 0;
  int max_depth_ = 0;
};

inline double truth(bool b) { return b ? 1.0 : 0.0; }

} // namespace

Expression Expression::compile(std::string_view text, const SymbolTable& symbols) {
  Expression e;
  e.text_ = std::string(text);
  Parser p(text, symbols);
  e.code_ = p.run(e.max_depth_);
  return e;
}

Expression Expression::constant(double value) {
  Expression e;
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  (void)ec;
  e.text_.assign(buf, ptr);
  e.code_.push_back({Op::Const, 0, value});
  e.max_depth_ = 1;
  return e;
}

bool Expression::references(int slot) const {
  for (const auto& in : code_)
    if (in.op == Op::Slot && in.slot == slot) return true;
  return false;
}

double Expression::eval(std::span<const double> frame) const {
  constexpr int kInline = 32;
  std::array<double, kInline> small;
  std::vector<double> big;
  double* st = small.data();
  if (max_depth_ > kInline) {
    big.resize(static_cast<std::size_t>(max_depth_));
    st = big.data();
  }
  int sp = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
    case Op::Const: st[sp++] = in.value; break;
    case Op::Slot: st[sp++] = frame[static_cast<std::size_t>(in.slot)]; break;
    case Op::Neg: st[sp - 1] = -st[sp - 1]; break;
    case Op::Not: st[sp - 1] = truth(st[sp - 1] == 0.0); break;
    case Op::Sin: st[sp - 1] = std::sin(st[sp - 1]); break;
    case Op::Cos: st[sp - 1] = std::cos(st[sp - 1]); break;
    case Op::Tan: st[sp - 1] = std::tan(st[sp - 1]); break;
    case Op::Exp: st[sp - 1] = std::exp(st[sp - 1]); break;
    case Op::Log: st[sp - 1] = std::log(st[sp - 1]); break;
    case Op::Sqrt: st[sp - 1] = std::sqrt(st[sp - 1]); break;
    case Op::Abs: st[sp - 1] = std::fabs(st[sp - 1]); break;
    case Op::Floor: st[sp - 1] = std::floor(st[sp - 1]); break;
    case Op::Sign: {
      const double v = st[sp - 1];
      st[sp - 1] = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
      break;
    }
    case Op::Select: {
      const double c = st[sp - 3];
      st[sp - 3] = c != 0.0 ? st[sp - 2] : st[sp - 1];
      sp -= 2;
      break;
    }
    default: {
      const double b = st[--sp];
      double& a = st[sp - 1];
      switch (in.op) {
      case Op::Add: a = a + b; break;
      case Op::Sub: a = a - b; break;
      case Op::Mul: a = a * b; break;
      case Op::Div: a = a / b; break;
      case Op::Pow: a = std::pow(a, b); break;
      case Op::Lt: a = truth(a < b); break;
      case Op::Le: a = truth(a <= b); break;
      case Op::Gt: a = truth(a > b); break;
      case Op::Ge: a = truth(a >= b); break;
      case Op::Eq: a = truth(a == b); break;
      case Op::Ne: a = truth(a != b); break;
      case Op::And: a = truth(a != 0.0 && b != 0.0); break;
      case Op::Or: a = truth(a != 0.0 || b != 0.0); break;
      case Op::Min: a = std::fmin(a, b); break;
      case Op::Max: a = std::fmax(a, b); break;
      case Op::Mod: a = std::fmod(a, b); break;
      case Op::Atan2: a = std::atan2(a, b); break;
      default: break;
      }
    }
    }
  }
  return sp > 0 ? st[0] : 0.0;
}

} // namespace optswitch
