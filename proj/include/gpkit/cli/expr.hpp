#pragma once

// Textual syntax for kernels, means and likelihoods.
//
//   expr   := term ('+' term)*
//   term   := factor ('*' factor)*
//   factor := call | '(' expr ')'
//   call   := ident '(' [arg (',' arg)*] ')'
//   arg    := expr | number [':' number] | number '/' number | '[' [arg (',' arg)*] ']' | ident
//
// Parsing produces an Expr tree with no semantics attached; build_kernel,
// build_mean and build_likelihood turn a tree into library objects. Error
// offsets are 1-based byte positions into the source text.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "gpkit/kernels.hpp"
#include "gpkit/likelihoods.hpp"
#include "gpkit/means.hpp"

namespace gpkit::cli {

/// Syntax error carrying the position and the set of tokens that would
/// have been accepted there.
class ParseError : public ConfigError {
 public:
  ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& found)
      : ConfigError(make_message(offset, expected, found)), offset_(offset), expected_(std::move(expected)) {}
  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  static std::string make_message(std::size_t offset, const std::vector<std::string>& expected,
                                  const std::string& found) {
    std::string s = "syntax error at offset " + std::to_string(offset) + ": expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) s += i + 1 == expected.size() ? " or " : ", ";
      s += expected[i];
    }
    return s + ", found " + found;
  }

  std::size_t offset_;
  std::vector<std::string> expected_;
};

struct Expr {
  enum class Kind { Number, Rational, Vector, Range, Name, Call, Sum, Product };

  Kind kind = Kind::Number;
  double value = 0.0;          ///< Number
  long num = 0, den = 1;       ///< Rational; Range uses num:den as lo:hi
  std::string name;            ///< Name, Call
  std::vector<Expr> children;  ///< Call arguments, Vector items, Sum/Product operands
  std::size_t offset = 1;      ///< where the node starts in the source

  bool operator==(const Expr& o) const {
    return kind == o.kind && value == o.value && num == o.num && den == o.den && name == o.name &&
           children == o.children;
  }
};

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view src) : s_(src) {}

  Expr parse_all() {
    Expr e = expr();
    skip_ws();
    if (pos_ < s_.size()) fail(operator_follow_set());
    return e;
  }

 private:
  Expr expr() { return chain(Expr::Kind::Sum, '+', [this] { return term(); }); }
  Expr term() { return chain(Expr::Kind::Product, '*', [this] { return factor(); }); }

  template <class Next>
  Expr chain(Expr::Kind kind, char op, Next next) {
    skip_ws();
    const std::size_t start = pos_;
    Expr first = next();
    skip_ws();
    if (!peek(op)) return first;
    Expr node;
    node.kind = kind;
    node.offset = start + 1;
    node.children.push_back(std::move(first));
    while (peek(op)) {
      ++pos_;
      node.children.push_back(next());
      skip_ws();
    }
    return node;
  }

  Expr factor() {
    skip_ws();
    if (peek('(')) {
      ++pos_;
      Expr e = expr();
      expect(')', {"')'"});
      return e;
    }
    if (at_ident_start()) return call();
    fail({"identifier", "'('"});
  }

  Expr call() {
    Expr e;
    e.kind = Expr::Kind::Call;
    e.offset = pos_ + 1;
    e.name = ident();
    skip_ws();
    if (!peek('(')) fail({"'('"});
    ++pos_;
    skip_ws();
    if (peek(')')) {
      ++pos_;
      return e;
    }
    for (;;) {
      e.children.push_back(arg());
      skip_ws();
      if (peek(',')) {
        ++pos_;
        continue;
      }
      if (peek(')')) {
        ++pos_;
        return e;
      }
      fail({"')'", "','"});
    }
  }

  Expr arg() {
    skip_ws();
    if (peek('[')) return vector();
    if (at_number_start()) return numeric();
    if (at_ident_start()) {
      const std::size_t save = pos_;
      std::string id = ident();
      skip_ws();
      if (peek('(')) {
        pos_ = save;
        return operators_after(call(), save);
      }
      Expr e;
      e.kind = Expr::Kind::Name;
      e.name = std::move(id);
      e.offset = save + 1;
      return e;
    }
    if (peek('(')) return expr();
    fail({"number", "'['", "identifier", "'('"});
  }

  // A call inside an argument list may start a larger kernel expression,
  // e.g. fix(SE(0,0) + RQ(0,0,0), 1).
  Expr operators_after(Expr first, std::size_t start) {
    skip_ws();
    if (!peek('+') && !peek('*')) return first;
    pos_ = start;
    return expr();
  }

  Expr vector() {
    Expr e;
    e.kind = Expr::Kind::Vector;
    e.offset = pos_ + 1;
    ++pos_;
    skip_ws();
    if (peek(']')) {
      ++pos_;
      return e;
    }
    for (;;) {
      e.children.push_back(arg());
      skip_ws();
      if (peek(',')) {
        ++pos_;
        continue;
      }
      if (peek(']')) {
        ++pos_;
        return e;
      }
      fail({"']'", "','"});
    }
  }

  // number, rational p/q, or integer range a:b.
  Expr numeric() {
    const std::size_t start = pos_;
    const auto [value, integral] = number();
    skip_ws();
    Expr e;
    e.offset = start + 1;
    if (peek('/') || peek(':')) {
      const char op = s_[pos_];
      if (!integral) fail({"')'", "','"});
      ++pos_;
      skip_ws();
      if (!at_number_start()) fail({"integer"});
      const auto [rhs, rhs_integral] = number();
      if (!rhs_integral) {
        pos_ = start;
        fail({"integer"});
      }
      e.kind = op == '/' ? Expr::Kind::Rational : Expr::Kind::Range;
      e.num = static_cast<long>(value);
      e.den = static_cast<long>(rhs);
      if (e.kind == Expr::Kind::Rational && e.den == 0) throw ConfigError("rational with zero denominator");
      return e;
    }
    e.kind = Expr::Kind::Number;
    e.value = value;
    return e;
  }

  std::pair<double, bool> number() {
    const std::size_t start = pos_;
    if (peek('-') || peek('+')) ++pos_;
    bool digits = false, integral = true;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_, digits = true;
    if (peek('.')) {
      integral = false;
      ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_, digits = true;
    }
    if (!digits) {
      pos_ = start;
      fail({"number"});
    }
    if (peek('e') || peek('E')) {
      const std::size_t mark = pos_;
      ++pos_;
      if (peek('-') || peek('+')) ++pos_;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        integral = false;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      } else {
        pos_ = mark;
        fail({"exponent digits"});
      }
    }
    // from_chars rejects a leading '+', which we accept.
    std::string text(s_.substr(start, pos_ - start));
    if (!text.empty() && text[0] == '+') text.erase(0, 1);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc()) {
      pos_ = start;
      fail({"number"});
    }
    return {v, integral};
  }

  std::string ident() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && is_ident_char(s_[pos_])) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  static bool is_ident_char(char c) {
    const auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '_' || u >= 0x80;  // UTF-8 continuation for names like σ
  }
  bool at_ident_start() const {
    if (pos_ >= s_.size()) return false;
    const auto u = static_cast<unsigned char>(s_[pos_]);
    return std::isalpha(u) || s_[pos_] == '_' || u >= 0x80;
  }
  bool at_number_start() const {
    if (pos_ >= s_.size()) return false;
    std::size_t p = pos_;
    if (s_[p] == '-' || s_[p] == '+') ++p;
    if (p < s_.size() && s_[p] == '.') ++p;
    return p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]));
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool peek(char c) const { return pos_ < s_.size() && s_[pos_] == c; }

  void expect(char c, std::vector<std::string> what) {
    skip_ws();
    if (!peek(c)) fail(std::move(what));
    ++pos_;
  }

  std::vector<std::string> operator_follow_set() const { return {"'+'", "'*'", "end of input"}; }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    std::string found = pos_ >= s_.size() ? "end of input" : "'" + std::string(1, s_[pos_]) + "'";
    throw ParseError(pos_ + 1, std::move(expected), found);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

inline int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Sum: return 0;
    case Expr::Kind::Product: return 1;
    default: return 2;
  }
}

}  // namespace detail

inline Expr parse_expr(std::string_view text) { return detail::Parser(text).parse_all(); }

/// Canonical text for a tree. Operands of the same or lower precedence are
/// parenthesized, so render -> parse reproduces the tree exactly.
inline std::string render(const Expr& e) {
  auto list = [](const std::vector<Expr>& items) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) s += ",";
      s += render(items[i]);
    }
    return s;
  };
  switch (e.kind) {
    case Expr::Kind::Number: {
      std::string s = format_double(e.value);
      // Keep a decimal point so the literal reads as a real number.
      if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
      return s;
    }
    case Expr::Kind::Rational: return std::to_string(e.num) + "/" + std::to_string(e.den);
    case Expr::Kind::Range: return std::to_string(e.num) + ":" + std::to_string(e.den);
    case Expr::Kind::Vector: return "[" + list(e.children) + "]";
    case Expr::Kind::Name: return e.name;
    case Expr::Kind::Call: return e.name + "(" + list(e.children) + ")";
    case Expr::Kind::Sum:
    case Expr::Kind::Product: {
      const char* op = e.kind == Expr::Kind::Sum ? " + " : " * ";
      std::string s;
      for (std::size_t i = 0; i < e.children.size(); ++i) {
        if (i) s += op;
        const bool paren = detail::precedence(e.children[i]) <= detail::precedence(e);
        s += paren ? "(" + render(e.children[i]) + ")" : render(e.children[i]);
      }
      return s;
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Semantic layer.

namespace detail {

[[noreturn]] inline void semantic_error(const Expr& at, const std::string& what) {
  throw ConfigError("at offset " + std::to_string(at.offset) + ": " + what);
}

inline void check_arity(const Expr& call, const std::string& label, std::size_t lo, std::size_t hi) {
  const std::size_t n = call.children.size();
  if (n >= lo && n <= hi) return;
  std::string want = std::to_string(lo);
  if (hi != lo) want += hi == static_cast<std::size_t>(-1) ? " or more" : "-" + std::to_string(hi);
  semantic_error(call, label + " takes " + want + " argument" + (lo == 1 && hi == 1 ? "" : "s") + ", got " +
                           std::to_string(n));
}

inline double scalar(const Expr& e, const std::string& what) {
  if (e.kind == Expr::Kind::Number) return e.value;
  if (e.kind == Expr::Kind::Rational) return static_cast<double>(e.num) / static_cast<double>(e.den);
  semantic_error(e, what + " must be a number");
}

inline bool is_vector_like(const Expr& e) {
  return e.kind == Expr::Kind::Vector || e.kind == Expr::Kind::Range ||
         (e.kind == Expr::Kind::Call && (e.name == "zeros" || e.name == "ones" || e.name == "collect"));
}

/// Numeric vector from [a,b,...], zeros(n), ones(n), collect(a:b) or a:b.
inline std::vector<double> vector_value(const Expr& e, const std::string& what) {
  std::vector<double> out;
  auto range = [&](const Expr& r) {
    if (r.den < r.num) semantic_error(r, what + ": empty range");
    for (long i = r.num; i <= r.den; ++i) out.push_back(static_cast<double>(i));
  };
  switch (e.kind) {
    case Expr::Kind::Vector:
      for (const Expr& c : e.children) {
        if (is_vector_like(c)) {
          auto inner = vector_value(c, what);
          out.insert(out.end(), inner.begin(), inner.end());
        } else {
          out.push_back(scalar(c, what + " element"));
        }
      }
      return out;
    case Expr::Kind::Range: range(e); return out;
    case Expr::Kind::Call:
      if (e.name == "zeros" || e.name == "ones") {
        check_arity(e, e.name, 1, 1);
        const double n = scalar(e.children[0], e.name + " length");
        if (n < 0 || n != std::floor(n)) semantic_error(e, e.name + " length must be a non-negative integer");
        out.assign(static_cast<std::size_t>(n), e.name == "zeros" ? 0.0 : 1.0);
        return out;
      }
      if (e.name == "collect") {
        check_arity(e, "collect", 1, 1);
        if (e.children[0].kind != Expr::Kind::Range) semantic_error(e, "collect expects a range a:b");
        range(e.children[0]);
        return out;
      }
      break;
    default: break;
  }
  semantic_error(e, what + " must be a vector");
}

inline std::vector<std::size_t> index_list(const Expr& e, const std::string& what) {
  std::vector<double> v = is_vector_like(e) ? vector_value(e, what) : std::vector<double>{scalar(e, what)};
  std::vector<std::size_t> out;
  for (double x : v) {
    if (x < 1 || x != std::floor(x)) semantic_error(e, what + ": indices are 1-based positive integers");
    out.push_back(static_cast<std::size_t>(x) - 1);
  }
  return out;
}

inline MaternOrder matern_order(const Expr& e) {
  const double nu = scalar(e, "Matern order");
  if (nu == 0.5) return MaternOrder::Half;
  if (nu == 1.5) return MaternOrder::ThreeHalves;
  if (nu == 2.5) return MaternOrder::FiveHalves;
  semantic_error(e, "Matern order must be 1/2, 3/2 or 5/2");
}

/// Keyword inside a parameter name selected by a symbolic fix() argument.
inline std::string param_keyword(const std::string& sym) {
  if (sym == "σ" || sym == "sigma" || sym == "sf" || sym == "s") return "log scale";
  if (sym == "ℓ" || sym == "ell" || sym == "l" || sym == "ll") return "log length";
  if (sym == "α" || sym == "alpha" || sym == "a") return "log alpha";
  if (sym == "p" || sym == "period") return "log period";
  if (sym == "c") return "log c";
  return {};
}

inline Kernel kernel_from(const Expr& e);

inline Kernel build_fix(const Expr& e) {
  check_arity(e, "fix", 1, static_cast<std::size_t>(-1));
  Kernel child = kernel_from(e.children[0]);
  const auto names = child.param_names();
  std::vector<bool> free(names.size(), true);
  if (e.children.size() == 1) std::fill(free.begin(), free.end(), false);
  for (std::size_t a = 1; a < e.children.size(); ++a) {
    const Expr& ref = e.children[a];
    if (ref.kind == Expr::Kind::Name) {
      const std::string key = param_keyword(ref.name);
      if (key.empty()) semantic_error(ref, "fix: unknown parameter name '" + ref.name + "'");
      bool hit = false;
      for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i].find(key) != std::string::npos) free[i] = false, hit = true;
      if (!hit) semantic_error(ref, "fix: kernel has no '" + ref.name + "' parameter");
    } else {
      for (std::size_t i : index_list(ref, "fix")) {
        if (i >= names.size())
          semantic_error(ref, "fix: parameter index " + std::to_string(i + 1) + " out of range (kernel has " +
                                  std::to_string(names.size()) + ")");
        free[i] = false;
      }
    }
  }
  return kern::fix(child, std::move(free));
}

inline Kernel build_call(const Expr& e) {
  const std::string& n = e.name;
  const auto& a = e.children;

  // Stationary families: length argument picks Iso (scalar) or ARD (vector).
  auto length_arg = [&](std::size_t i, bool ard_only, bool iso_only) {
    const bool vec = is_vector_like(a[i]);
    if (ard_only && !vec) semantic_error(a[i], n + " expects a vector of log length scales");
    if (iso_only && vec) semantic_error(a[i], n + " expects a scalar log length scale");
    return vec;
  };
  auto family = [&](const std::string& base) { return n == base || n == base + "Iso" || n == base + "Ard"; };

  if (family("SE")) {
    check_arity(e, "SE", 2, 2);
    const double sf = scalar(a[1], "SE log scale");
    if (length_arg(0, n == "SEArd", n == "SEIso")) return kern::se_ard(vector_value(a[0], "SE log length"), sf);
    return kern::se_iso(scalar(a[0], "SE log length"), sf);
  }
  if (n == "Matern" || n == "Mat") {
    check_arity(e, "Matern", 3, 3);
    const MaternOrder o = matern_order(a[0]);
    const double sf = scalar(a[2], "Matern log scale");
    if (length_arg(1, false, false)) return kern::matern_ard(o, vector_value(a[1], "Matern log length"), sf);
    return kern::matern_iso(o, scalar(a[1], "Matern log length"), sf);
  }
  for (auto [prefix, order] : {std::pair{"Mat12", MaternOrder::Half}, std::pair{"Mat32", MaternOrder::ThreeHalves},
                               std::pair{"Mat52", MaternOrder::FiveHalves}}) {
    if (family(prefix)) {
      check_arity(e, prefix, 2, 2);
      const double sf = scalar(a[1], "Matern log scale");
      if (length_arg(0, n.ends_with("Ard"), n.ends_with("Iso")))
        return kern::matern_ard(order, vector_value(a[0], "Matern log length"), sf);
      return kern::matern_iso(order, scalar(a[0], "Matern log length"), sf);
    }
  }
  if (family("RQ")) {
    check_arity(e, "RQ", 3, 3);
    const double sf = scalar(a[1], "RQ log scale"), la = scalar(a[2], "RQ log alpha");
    if (length_arg(0, n == "RQArd", n == "RQIso")) return kern::rq_ard(vector_value(a[0], "RQ log length"), sf, la);
    return kern::rq_iso(scalar(a[0], "RQ log length"), sf, la);
  }
  if (n == "Periodic" || n == "Peri") {
    check_arity(e, "Periodic", 3, 3);
    return kern::periodic(scalar(a[0], "Periodic log length"), scalar(a[1], "Periodic log scale"),
                          scalar(a[2], "Periodic log period"));
  }
  if (n == "Poly") {
    check_arity(e, "Poly", 3, 3);
    const double deg = scalar(a[2], "Poly degree");
    if (deg < 1 || deg != std::floor(deg)) semantic_error(a[2], "Poly degree must be a positive integer");
    return kern::poly(scalar(a[0], "Poly log c"), scalar(a[1], "Poly log scale"), static_cast<int>(deg));
  }
  if (family("Lin")) {
    check_arity(e, "Lin", 1, 1);
    if (length_arg(0, n == "LinArd", n == "LinIso")) return kern::lin_ard(vector_value(a[0], "Lin log length"));
    return kern::lin_iso(scalar(a[0], "Lin log length"));
  }
  if (n == "Const") {
    check_arity(e, "Const", 1, 1);
    return kern::constant(scalar(a[0], "Const log scale"));
  }
  if (n == "Noise") {
    check_arity(e, "Noise", 1, 1);
    return kern::noise(scalar(a[0], "Noise log scale"));
  }
  if (n == "fix") return build_fix(e);
  if (n == "Masked" || n == "masked") {
    check_arity(e, "Masked", 2, 2);
    return kern::masked(kernel_from(a[0]), index_list(a[1], "Masked dimensions"));
  }
  semantic_error(e, "unknown kernel '" + n + "'");
}

inline Kernel kernel_from(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Call: return build_call(e);
    case Expr::Kind::Sum:
    case Expr::Kind::Product: {
      Kernel k = kernel_from(e.children[0]);
      for (std::size_t i = 1; i < e.children.size(); ++i) {
        Kernel r = kernel_from(e.children[i]);
        k = e.kind == Expr::Kind::Sum ? k + r : k * r;
      }
      return k;
    }
    default: semantic_error(e, "expected a kernel");
  }
}

inline MeanFunction mean_from(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Sum:
    case Expr::Kind::Product: {
      MeanFunction m = mean_from(e.children[0]);
      for (std::size_t i = 1; i < e.children.size(); ++i) {
        MeanFunction r = mean_from(e.children[i]);
        m = e.kind == Expr::Kind::Sum ? m + r : m * r;
      }
      return m;
    }
    case Expr::Kind::Call: break;
    default: semantic_error(e, "expected a mean function");
  }
  const std::string& n = e.name;
  const auto& a = e.children;
  if (n == "MeanZero") {
    check_arity(e, n, 0, 0);
    return mean::zero();
  }
  if (n == "MeanConst") {
    check_arity(e, n, 1, 1);
    return mean::constant(scalar(a[0], "MeanConst value"));
  }
  if (n == "MeanLin") {
    check_arity(e, n, 1, 1);
    if (is_vector_like(a[0])) return mean::linear(vector_value(a[0], "MeanLin coefficients"));
    return mean::linear({scalar(a[0], "MeanLin coefficient")});
  }
  if (n == "MeanPoly") {
    check_arity(e, n, 1, static_cast<std::size_t>(-1));
    std::vector<std::vector<double>> cols;
    for (const Expr& c : a) cols.push_back(vector_value(c, "MeanPoly column"));
    MatrixXd theta(static_cast<Eigen::Index>(cols[0].size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (cols[j].size() != cols[0].size()) semantic_error(a[j], "MeanPoly columns must have equal length");
      for (std::size_t i = 0; i < cols[j].size(); ++i)
        theta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][i];
    }
    return mean::poly(std::move(theta));
  }
  semantic_error(e, "unknown mean function '" + n + "'");
}

inline Likelihood likelihood_from(const Expr& e) {
  if (e.kind != Expr::Kind::Call) semantic_error(e, "expected a single likelihood");
  const std::string& n = e.name;
  const auto& a = e.children;
  if (n == "Bernoulli" || n == "BernLik") {
    check_arity(e, n, 0, 0);
    return lik::bernoulli();
  }
  if (n == "Binomial" || n == "BinLik") {
    check_arity(e, n, 1, 1);
    const double trials = scalar(a[0], "Binomial trials");
    if (trials < 1 || trials != std::floor(trials)) semantic_error(a[0], "Binomial trials must be a positive integer");
    return lik::binomial(static_cast<int>(trials));
  }
  if (n == "Exponential" || n == "ExpLik") {
    check_arity(e, n, 0, 0);
    return lik::exponential();
  }
  if (n == "Gaussian" || n == "GaussLik") {
    check_arity(e, n, 1, 1);
    return lik::gaussian(scalar(a[0], "Gaussian log sigma"));
  }
  if (n == "Poisson" || n == "PoisLik") {
    check_arity(e, n, 0, 0);
    return lik::poisson();
  }
  if (n == "StudentT" || n == "StuTLik") {
    check_arity(e, n, 2, 2);
    return lik::student_t(scalar(a[0], "StudentT nu"), scalar(a[1], "StudentT log sigma"));
  }
  semantic_error(e, "unknown likelihood '" + n + "'");
}

}  // namespace detail

inline Kernel build_kernel(const Expr& e) { return detail::kernel_from(e); }
inline MeanFunction build_mean(const Expr& e) { return detail::mean_from(e); }
inline Likelihood build_likelihood(const Expr& e) { return detail::likelihood_from(e); }

inline Kernel parse_kernel(std::string_view text) { return build_kernel(parse_expr(text)); }
inline MeanFunction parse_mean(std::string_view text) { return build_mean(parse_expr(text)); }
inline Likelihood parse_likelihood(std::string_view text) { return build_likelihood(parse_expr(text)); }

}  // namespace gpkit::cli
