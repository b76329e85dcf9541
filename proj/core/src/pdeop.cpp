#include "ordcomp/pdeop.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace ordcomp {

// ------------------------------------------------------------- Expr

ExprPtr Expr::constant(double v) {
  auto e = std::make_shared<Expr>();
  e->op = Op::Const;
  e->value = v;
  return e;
}

ExprPtr Expr::param(std::string name) {
  auto e = std::make_shared<Expr>();
  e->op = Op::Param;
  e->name = std::move(name);
  return e;
}

ExprPtr Expr::coord(int axis, bool is_time) {
  auto e = std::make_shared<Expr>();
  e->op = Op::Coord;
  e->axis = axis;
  e->is_time = is_time;
  return e;
}

ExprPtr Expr::jet(std::string unknown, MultiIndex alpha) {
  auto e = std::make_shared<Expr>();
  e->op = Op::Jet;
  e->jet_unknown = std::move(unknown);
  e->jet_alpha = std::move(alpha);
  return e;
}

ExprPtr Expr::binary(Op op, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

ExprPtr Expr::pow(ExprPtr a, int k) {
  auto e = std::make_shared<Expr>();
  e->op = Op::Pow;
  e->a = std::move(a);
  e->ipow = k;
  return e;
}

ExprPtr Expr::neg(ExprPtr a) {
  if (a->op == Op::Const) return constant(-a->value);
  auto e = std::make_shared<Expr>();
  e->op = Op::Neg;
  e->a = std::move(a);
  return e;
}

ExprPtr Expr::unary(Op fn, ExprPtr a) {
  auto e = std::make_shared<Expr>();
  e->op = fn;
  e->a = std::move(a);
  return e;
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return a == b;
  if (a->op != b->op) return false;
  switch (a->op) {
    case Expr::Op::Const: return a->value == b->value;
    case Expr::Op::Param: return a->name == b->name;
    case Expr::Op::Coord: return a->axis == b->axis && a->is_time == b->is_time;
    case Expr::Op::Jet:
      return a->jet_unknown == b->jet_unknown && a->jet_alpha == b->jet_alpha;
    case Expr::Op::Pow:
      if (a->ipow != b->ipow) return false;
      return expr_equal(a->a, b->a);
    default:
      return expr_equal(a->a, b->a) && expr_equal(a->b, b->b);
  }
}

// ---------------------------------------------------------- printing

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int prec_of(const Expr& e) {
  switch (e.op) {
    case Expr::Op::Add:
    case Expr::Op::Sub: return 1;
    case Expr::Op::Mul:
    case Expr::Op::Div: return 2;
    case Expr::Op::Neg: return 3;
    case Expr::Op::Pow: return 4;
    case Expr::Op::Const: return e.value < 0 ? 3 : 5;
    default: return 5;
  }
}

std::string jet_name(const Expr& e) {
  const MultiIndex& al = e.jet_alpha;
  const int total = al.total();
  if (total == 0) return e.jet_unknown;
  // classify: dt | dx<k> | dxx<k> | dx<j>x<k>
  int t_ord = 0;
  std::vector<std::pair<int, int>> sp;  // (1-based axis, order)
  const int n = al.dim();
  for (int i = 0; i < n; ++i) {
    if (al[i] == 0) continue;
    sp.emplace_back(i + 1, al[i]);
  }
  // time is the last axis; the caller guarantees the layout
  if (!sp.empty() && e.is_time_axis >= 0 && sp.back().first - 1 == e.is_time_axis) {
    t_ord = sp.back().second;
    sp.pop_back();
  }
  std::string head;
  if (t_ord == 1 && sp.empty()) {
    head = "dt";
  } else if (t_ord == 0 && sp.size() == 1 && sp[0].second == 1) {
    head = "dx" + std::to_string(sp[0].first);
  } else if (t_ord == 0 && sp.size() == 1 && sp[0].second == 2) {
    head = "dxx" + std::to_string(sp[0].first);
  } else if (t_ord == 0 && sp.size() == 2 && sp[0].second == 1 && sp[1].second == 1) {
    head = "dx" + std::to_string(sp[0].first) + "x" + std::to_string(sp[1].first);
  } else {
    throw InternalError("jet_name: multi-index not expressible in the DSL");
  }
  return head + "(" + e.jet_unknown + ")";
}

std::string print_expr(const Expr& e, int parent_prec);

std::string print_child(const ExprPtr& c, int min_prec) {
  return print_expr(*c, min_prec);
}

std::string print_expr(const Expr& e, int parent_prec) {
  std::string s;
  switch (e.op) {
    case Expr::Op::Const: s = fmt17(e.value); break;
    case Expr::Op::Param: s = e.name; break;
    case Expr::Op::Coord: s = e.is_time ? "t" : ("x" + std::to_string(e.axis + 1)); break;
    case Expr::Op::Jet: s = jet_name(e); break;
    case Expr::Op::Add:
      s = print_child(e.a, 1) + " + " + print_child(e.b, 2);
      break;
    case Expr::Op::Sub:
      s = print_child(e.a, 1) + " - " + print_child(e.b, 2);
      break;
    case Expr::Op::Mul:
      s = print_child(e.a, 2) + "*" + print_child(e.b, 3);
      break;
    case Expr::Op::Div:
      s = print_child(e.a, 2) + "/" + print_child(e.b, 3);
      break;
    case Expr::Op::Neg: s = "-" + print_child(e.a, 3); break;
    case Expr::Op::Pow: s = print_child(e.a, 5) + "^" + std::to_string(e.ipow); break;
    case Expr::Op::Sin: s = "sin(" + print_child(e.a, 0) + ")"; break;
    case Expr::Op::Cos: s = "cos(" + print_child(e.a, 0) + ")"; break;
    case Expr::Op::Exp: s = "exp(" + print_child(e.a, 0) + ")"; break;
    case Expr::Op::Abs: s = "abs(" + print_child(e.a, 0) + ")"; break;
  }
  if (prec_of(e) < parent_prec) s = "(" + s + ")";
  return s;
}

}  // namespace

std::string expr_to_string(const ExprPtr& e) { return print_expr(*e, 0); }

// ------------------------------------------------------------ JetSpec

int JetSpec::max_order() const {
  int m = 0;
  for (const Slot& s : slots) m = std::max(m, s.alpha.total());
  return m;
}

int JetSpec::slot_index(const std::string& unknown, const MultiIndex& alpha) const {
  for (size_t i = 0; i < slots.size(); ++i)
    if (slots[i].unknown == unknown && slots[i].alpha == alpha) return static_cast<int>(i);
  return -1;
}

std::vector<MultiIndex> JetSpec::slots_of(const std::string& unknown) const {
  std::vector<MultiIndex> out;
  for (const Slot& s : slots)
    if (s.unknown == unknown) out.push_back(s.alpha);
  return out;
}

// ------------------------------------------------------------- parser

namespace {

struct Token {
  enum class Kind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Equals, Newline, End };
  Kind kind;
  std::string text;
  double num = 0.0;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        continue;
      }
      if (c == '\n') {
        if (!out.empty() && out.back().kind != Token::Kind::Newline)
          out.push_back(tok(Token::Kind::Newline, "\n"));
        advance_line();
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        out.push_back(number());
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        out.push_back(ident());
        continue;
      }
      switch (c) {
        case '+': out.push_back(tok(Token::Kind::Plus, "+")); advance(); break;
        case '-': out.push_back(tok(Token::Kind::Minus, "-")); advance(); break;
        case '*': out.push_back(tok(Token::Kind::Star, "*")); advance(); break;
        case '/': out.push_back(tok(Token::Kind::Slash, "/")); advance(); break;
        case '^': out.push_back(tok(Token::Kind::Caret, "^")); advance(); break;
        case '(': out.push_back(tok(Token::Kind::LParen, "(")); advance(); break;
        case ')': out.push_back(tok(Token::Kind::RParen, ")")); advance(); break;
        case '=': out.push_back(tok(Token::Kind::Equals, "=")); advance(); break;
        default:
          throw SyntaxError(std::string("unexpected character '") + c + "'", line_, col_);
      }
    }
    out.push_back(tok(Token::Kind::End, ""));
    return out;
  }

 private:
  Token tok(Token::Kind k, std::string text) {
    Token t;
    t.kind = k;
    t.text = std::move(text);
    t.line = line_;
    t.col = col_;
    return t;
  }
  void advance() { ++pos_; ++col_; }
  void advance_line() { ++pos_; ++line_; col_ = 1; }

  Token number() {
    const size_t start = pos_;
    const int line = line_, col = col_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
      advance();
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      size_t save = pos_;
      int save_col = col_;
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
      } else {
        pos_ = save;
        col_ = save_col;
      }
    }
    Token t;
    t.kind = Token::Kind::Number;
    t.text = src_.substr(start, pos_ - start);
    t.line = line;
    t.col = col;
    try {
      t.num = std::stod(t.text);
    } catch (const std::exception&) {
      throw SyntaxError("malformed number '" + t.text + "'", line, col);
    }
    return t;
  }

  Token ident() {
    const size_t start = pos_;
    const int line = line_, col = col_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      advance();
    Token t;
    t.kind = Token::Kind::Ident;
    t.text = src_.substr(start, pos_ - start);
    t.line = line;
    t.col = col;
    return t;
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// pre-resolution jet reference: axis orders are 1-based spatial axes
struct RawJet {
  std::string unknown;
  std::vector<std::pair<int, int>> spatial;  // (axis, order)
  int t_order = 0;
};

// derivative head like dt / dx1 / dxx2 / dx1x3; nullopt when `s` is not one
std::optional<RawJet> parse_deriv_head(const std::string& s) {
  RawJet j;
  if (s == "dt") {
    j.t_order = 1;
    return j;
  }
  if (s.size() < 2 || s[0] != 'd' || s[1] != 'x') return std::nullopt;
  size_t i = 2;
  int order = 1;
  if (i < s.size() && s[i] == 'x') {
    order = 2;
    ++i;
  }
  auto read_axis = [&](int& axis) {
    if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    axis = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      axis = axis * 10 + (s[i] - '0');
      ++i;
    }
    return axis >= 1;
  };
  int a1 = 1;
  if (!read_axis(a1)) {
    // bare dx / dxx: first axis shorthand
    if (i == s.size()) {
      j.spatial.emplace_back(1, order);
      return j;
    }
    return std::nullopt;
  }
  if (order == 2) {
    if (i != s.size()) return std::nullopt;
    j.spatial.emplace_back(a1, 2);
    return j;
  }
  if (i == s.size()) {
    j.spatial.emplace_back(a1, 1);
    return j;
  }
  // mixed dx<a>x<b>
  if (s[i] != 'x') return std::nullopt;
  ++i;
  int a2 = 1;
  if (!read_axis(a2) || i != s.size()) return std::nullopt;
  if (a1 == a2) {
    j.spatial.emplace_back(a1, 2);
  } else {
    j.spatial.emplace_back(std::min(a1, a2), 1);
    j.spatial.emplace_back(std::max(a1, a2), 1);
  }
  return j;
}

bool is_unknown_name(const std::string& s) {
  if (s == "p") return true;
  return s.size() >= 1 && s[0] == 'u';
}

struct ParsedEquation {
  ExprPtr expr;
  std::string rhs;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, bool allow_jets)
      : toks_(std::move(toks)), allow_jets_(allow_jets) {}

  std::vector<ParsedEquation> parse_system() {
    std::vector<ParsedEquation> eqs;
    skip_newlines();
    while (!at(Token::Kind::End)) {
      ParsedEquation eq;
      eq.expr = parse_expr();
      expect(Token::Kind::Equals, "expected '='");
      const Token& t = cur();
      if (t.kind == Token::Kind::Ident) {
        eq.rhs = t.text;
        ++i_;
      } else if (t.kind == Token::Kind::Number) {
        eq.rhs = t.text;
        ++i_;
      } else {
        throw SyntaxError("expected right-hand-side name", t.line, t.col);
      }
      eqs.push_back(std::move(eq));
      if (at(Token::Kind::Newline)) {
        skip_newlines();
      } else if (!at(Token::Kind::End)) {
        const Token& u = cur();
        throw SyntaxError("expected end of equation", u.line, u.col);
      }
    }
    if (eqs.empty()) throw SyntaxError("empty system", 1, 1);
    return eqs;
  }

  ExprPtr parse_single_expr() {
    skip_newlines();
    ExprPtr e = parse_expr();
    skip_newlines();
    if (!at(Token::Kind::End)) {
      const Token& t = cur();
      throw SyntaxError("trailing input after expression", t.line, t.col);
    }
    return e;
  }

  // side tables filled during the parse
  int max_spatial_axis = 0;
  bool uses_time = false;
  std::vector<std::pair<Expr*, RawJet>> jets;
  std::vector<std::pair<Expr*, int>> spatial_coords;  // node, 1-based axis
  std::vector<Expr*> time_coords;

 private:
  const Token& cur() const { return toks_[i_]; }
  bool at(Token::Kind k) const { return cur().kind == k; }
  void expect(Token::Kind k, const char* msg) {
    if (!at(k)) throw SyntaxError(msg, cur().line, cur().col);
    ++i_;
  }
  void skip_newlines() {
    while (at(Token::Kind::Newline)) ++i_;
  }

  ExprPtr parse_expr() {
    ExprPtr e;
    if (at(Token::Kind::Minus)) {
      ++i_;
      e = Expr::neg(parse_term());
    } else {
      e = parse_term();
    }
    while (at(Token::Kind::Plus) || at(Token::Kind::Minus)) {
      const bool plus = at(Token::Kind::Plus);
      ++i_;
      ExprPtr rhs = parse_term();
      e = Expr::binary(plus ? Expr::Op::Add : Expr::Op::Sub, std::move(e), std::move(rhs));
    }
    return e;
  }

  ExprPtr parse_term() {
    ExprPtr e = parse_factor();
    while (at(Token::Kind::Star) || at(Token::Kind::Slash)) {
      const bool mul = at(Token::Kind::Star);
      ++i_;
      ExprPtr rhs = parse_factor();
      e = Expr::binary(mul ? Expr::Op::Mul : Expr::Op::Div, std::move(e), std::move(rhs));
    }
    return e;
  }

  ExprPtr parse_factor() {
    ExprPtr e = parse_primary();
    while (at(Token::Kind::Caret)) {
      ++i_;
      if (!at(Token::Kind::Number))
        throw SyntaxError("expected integer exponent after '^'", cur().line, cur().col);
      const Token& t = cur();
      const double v = t.num;
      if (v != std::floor(v) || v < 0 || v > 64)
        throw SyntaxError("exponent must be a small nonnegative integer", t.line, t.col);
      ++i_;
      e = Expr::pow(std::move(e), static_cast<int>(v));
    }
    return e;
  }

  ExprPtr parse_primary() {
    const Token t = cur();
    if (t.kind == Token::Kind::Number) {
      ++i_;
      return Expr::constant(t.num);
    }
    if (t.kind == Token::Kind::Minus) {
      ++i_;
      return Expr::neg(parse_primary());
    }
    if (t.kind == Token::Kind::LParen) {
      ++i_;
      ExprPtr e = parse_expr();
      expect(Token::Kind::RParen, "expected ')'");
      return e;
    }
    if (t.kind != Token::Kind::Ident)
      throw SyntaxError("expected a value", t.line, t.col);
    ++i_;
    const std::string& s = t.text;

    // functions
    if (s == "sin" || s == "cos" || s == "exp" || s == "abs") {
      expect(Token::Kind::LParen, "expected '(' after function name");
      ExprPtr arg = parse_expr();
      expect(Token::Kind::RParen, "expected ')'");
      Expr::Op fn = s == "sin"   ? Expr::Op::Sin
                    : s == "cos" ? Expr::Op::Cos
                    : s == "exp" ? Expr::Op::Exp
                                 : Expr::Op::Abs;
      return Expr::unary(fn, std::move(arg));
    }

    // derivative heads
    if (auto rj = parse_deriv_head(s)) {
      if (!allow_jets_)
        throw SyntaxError("jet variables are not allowed in this expression", t.line, t.col);
      expect(Token::Kind::LParen, "expected '(' after derivative");
      if (!at(Token::Kind::Ident) || !is_unknown_name(cur().text))
        throw SyntaxError("expected unknown name inside derivative", cur().line, cur().col);
      rj->unknown = cur().text;
      ++i_;
      expect(Token::Kind::RParen, "expected ')'");
      for (auto [axis, order] : rj->spatial) max_spatial_axis = std::max(max_spatial_axis, axis);
      if (rj->t_order > 0) uses_time = true;
      ExprPtr e = Expr::jet(rj->unknown, MultiIndex());
      jets.emplace_back(const_cast<Expr*>(e.get()), *rj);
      return e;
    }

    // coordinates
    if (s == "t") {
      uses_time = true;
      ExprPtr e = Expr::coord(-1, true);
      time_coords.push_back(const_cast<Expr*>(e.get()));
      return e;
    }
    if (s.size() >= 2 && s[0] == 'x' &&
        std::all_of(s.begin() + 1, s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      const int axis = std::stoi(s.substr(1));
      if (axis < 1) throw SyntaxError("coordinate axis must be >= 1", t.line, t.col);
      max_spatial_axis = std::max(max_spatial_axis, axis);
      ExprPtr e = Expr::coord(-1, false);
      spatial_coords.emplace_back(const_cast<Expr*>(e.get()), axis);
      return e;
    }

    // unknown referenced by value
    if (is_unknown_name(s)) {
      if (!allow_jets_)
        throw SyntaxError("unknowns are not allowed in this expression", t.line, t.col);
      RawJet rj;
      rj.unknown = s;
      ExprPtr e = Expr::jet(s, MultiIndex());
      jets.emplace_back(const_cast<Expr*>(e.get()), rj);
      return e;
    }

    // anything else is a named parameter
    return Expr::param(s);
  }

  std::vector<Token> toks_;
  size_t i_ = 0;
  bool allow_jets_;
};

MultiIndex raw_to_alpha(const RawJet& rj, int n, bool has_time) {
  std::vector<int> o(static_cast<size_t>(n), 0);
  for (auto [axis, order] : rj.spatial) o[static_cast<size_t>(axis - 1)] += order;
  if (rj.t_order > 0) o[static_cast<size_t>(n - 1)] += rj.t_order;
  (void)has_time;
  return MultiIndex(std::move(o));
}

void fix_jet_time_axes(const ExprPtr& e, int time_axis) {
  if (!e) return;
  if (e->op == Expr::Op::Jet) const_cast<Expr*>(e.get())->is_time_axis = time_axis;
  fix_jet_time_axes(e->a, time_axis);
  fix_jet_time_axes(e->b, time_axis);
}

}  // namespace

PdeSystem parse_operator(const std::string& text, int n_spatial, int with_time) {
  Parser parser(Lexer(text).run(), /*allow_jets=*/true);
  std::vector<ParsedEquation> eqs = parser.parse_system();

  const int inferred_spatial = parser.max_spatial_axis;
  const bool inferred_time = parser.uses_time;
  int ns = std::max(inferred_spatial, n_spatial < 0 ? 0 : n_spatial);
  bool ht = with_time < 0 ? inferred_time : (with_time != 0 || inferred_time);
  if (ns == 0 && !ht) ns = 1;  // zeroth-order systems live on one axis
  const int n = ns + (ht ? 1 : 0);
  const int time_axis = ht ? n - 1 : -1;

  PdeSystem sys;
  sys.n = n;
  sys.has_time = ht;
  for (ParsedEquation& eq : eqs) {
    sys.equations.push_back(eq.expr);
    sys.rhs_labels.push_back(eq.rhs);
  }

  // resolve coordinates
  for (auto [node, axis] : parser.spatial_coords) node->axis = axis - 1;
  for (Expr* node : parser.time_coords) node->axis = time_axis;

  // resolve jets and build the spec
  std::set<std::pair<std::string, MultiIndex>> slot_set;
  for (auto& [node, rj] : parser.jets) {
    node->jet_alpha = raw_to_alpha(rj, n, ht);
    if (rj.t_order > 0 && !ht)
      throw InternalError("parse_operator: time derivative without a time axis");
    slot_set.insert({node->jet_unknown, node->jet_alpha});
  }
  std::set<std::string> names;
  for (const auto& [u, al] : slot_set) names.insert(u);
  sys.jet.unknowns.assign(names.begin(), names.end());
  for (const auto& [u, al] : slot_set) sys.jet.slots.push_back({u, al});
  for (auto& [node, rj] : parser.jets)
    node->jet_slot = sys.jet.slot_index(node->jet_unknown, node->jet_alpha);

  for (const ExprPtr& e : sys.equations) fix_jet_time_axes(e, time_axis);
  return sys;
}

std::string pretty_print(const PdeSystem& sys) {
  std::ostringstream out;
  for (size_t i = 0; i < sys.equations.size(); ++i)
    out << expr_to_string(sys.equations[i]) << " = " << sys.rhs_labels[i] << "\n";
  return out.str();
}

// ----------------------------------------------------------- evaluation

namespace {

double eval_expr(const Expr& e, const Point& p, const std::vector<double>& jet,
                 const std::map<std::string, double>& params) {
  switch (e.op) {
    case Expr::Op::Const: return e.value;
    case Expr::Op::Param: {
      auto it = params.find(e.name);
      if (it == params.end()) throw EvalDomain("unbound parameter '" + e.name + "'");
      return it->second;
    }
    case Expr::Op::Coord: return p[e.axis];
    case Expr::Op::Jet: {
      if (e.jet_slot < 0 || e.jet_slot >= static_cast<int>(jet.size()))
        throw InternalError("eval: unresolved jet slot");
      return jet[static_cast<size_t>(e.jet_slot)];
    }
    case Expr::Op::Add: return eval_expr(*e.a, p, jet, params) + eval_expr(*e.b, p, jet, params);
    case Expr::Op::Sub: return eval_expr(*e.a, p, jet, params) - eval_expr(*e.b, p, jet, params);
    case Expr::Op::Mul: return eval_expr(*e.a, p, jet, params) * eval_expr(*e.b, p, jet, params);
    case Expr::Op::Div: {
      const double den = eval_expr(*e.b, p, jet, params);
      if (den == 0.0)
        throw EvalDomain("division by zero in '" + print_expr(e, 0) + "'");
      return eval_expr(*e.a, p, jet, params) / den;
    }
    case Expr::Op::Pow: {
      const double base = eval_expr(*e.a, p, jet, params);
      double r = 1.0;
      for (int k = 0; k < e.ipow; ++k) r *= base;
      return r;
    }
    case Expr::Op::Neg: return -eval_expr(*e.a, p, jet, params);
    case Expr::Op::Sin: return std::sin(eval_expr(*e.a, p, jet, params));
    case Expr::Op::Cos: return std::cos(eval_expr(*e.a, p, jet, params));
    case Expr::Op::Exp: return std::exp(eval_expr(*e.a, p, jet, params));
    case Expr::Op::Abs: return std::abs(eval_expr(*e.a, p, jet, params));
  }
  throw InternalError("eval: unknown node");
}

}  // namespace

std::vector<double> eval_F(const PdeSystem& sys, const Point& p,
                           const std::vector<double>& jet) {
  if (static_cast<int>(jet.size()) != sys.jet.K())
    throw DimensionMismatch("eval_F: jet length does not match the JetSpec");
  if (p.dim() != sys.n) throw DimensionMismatch("eval_F: point dimension mismatch");
  std::vector<double> out;
  out.reserve(sys.equations.size());
  for (const ExprPtr& e : sys.equations) out.push_back(eval_expr(*e, p, jet, sys.params));
  return out;
}

std::vector<double> jet_of_polys(const JetSpec& spec, const std::vector<Poly>& polys,
                                 const std::vector<std::string>& poly_unknowns,
                                 const Point& x) {
  std::vector<double> jet(static_cast<size_t>(spec.K()), 0.0);
  for (size_t s = 0; s < spec.slots.size(); ++s) {
    const auto& slot = spec.slots[s];
    auto it = std::find(poly_unknowns.begin(), poly_unknowns.end(), slot.unknown);
    if (it == poly_unknowns.end())
      throw DimensionMismatch("jet_of_polys: missing polynomial for unknown " + slot.unknown);
    const size_t idx = static_cast<size_t>(it - poly_unknowns.begin());
    jet[s] = polys[idx].deriv(x, slot.alpha);
  }
  return jet;
}

std::vector<PwExpr> apply_T(const PdeSystem& sys, const std::vector<PwPoly>& v) {
  const auto& unknowns = sys.jet.unknowns;
  if (v.size() != unknowns.size())
    throw DimensionMismatch("apply_T: one piecewise polynomial per unknown required");
  const CellComplex& cx = v.front().complex();
  for (const PwPoly& f : v)
    if (!(f.complex() == cx)) throw ComplexMismatch("apply_T: unknowns must share one complex");

  auto sys_copy = std::make_shared<const PdeSystem>(sys);
  std::vector<PwExpr> out;
  out.reserve(sys.equations.size());
  for (int eq = 0; eq < sys.m(); ++eq) {
    std::vector<PieceExpr> pieces;
    pieces.reserve(cx.size());
    for (size_t c = 0; c < cx.size(); ++c) {
      auto cell_polys = std::make_shared<std::vector<Poly>>();
      cell_polys->reserve(v.size());
      for (const PwPoly& f : v) cell_polys->push_back(f.pieces()[c]);
      auto fn = [sys_copy, eq, cell_polys](const Point& x) {
        const std::vector<double> jet =
            jet_of_polys(sys_copy->jet, *cell_polys, sys_copy->jet.unknowns, x);
        return eval_expr(*sys_copy->equations[static_cast<size_t>(eq)], x, jet,
                         sys_copy->params);
      };
      pieces.push_back(PieceExpr::callable(fn, "T" + std::to_string(eq + 1)));
    }
    out.emplace_back(cx, std::move(pieces));
  }
  return out;
}

// --------------------------------------------------------- Navier-Stokes

namespace {

std::string ns_dsl_text(bool standard_convective) {
  std::ostringstream out;
  for (int i = 1; i <= 3; ++i) {
    out << "dt(u" << i << ")";
    for (int j = 1; j <= 3; ++j) {
      if (standard_convective)
        out << " + u" << j << "*dx" << j << "(u" << i << ")";
      else
        out << " + u" << j << "*dx" << i << "(u" << j << ")";
    }
    out << " - nu*(dxx1(u" << i << ") + dxx2(u" << i << ") + dxx3(u" << i << "))";
    out << " + dx" << i << "(p) = f" << i << "\n";
  }
  out << "dx1(u1) + dx2(u2) + dx3(u3) = 0\n";
  return out.str();
}

}  // namespace

PdeSystem ns_system(double nu, bool standard_convective) {
  if (!(nu > 0)) throw NonpositiveViscosity("ns_system: viscosity must be positive");
  PdeSystem sys = parse_operator(ns_dsl_text(standard_convective), 3, 1);
  sys.params["nu"] = nu;
  sys.initial_unknowns = {"u1", "u2", "u3"};

  // closed-form jet for interior cells: velocities zero, time slots carry
  // the momentum targets, one diagonal velocity gradient carries the
  // divergence target.
  sys.hooks.regular = [](const PdeSystem& s, const Point&, const std::vector<double>& target)
      -> std::optional<std::vector<double>> {
    std::vector<double> jet(static_cast<size_t>(s.jet.K()), 0.0);
    const int n = s.n;
    for (int i = 0; i < 3; ++i) {
      const int slot = s.jet.slot_index("u" + std::to_string(i + 1),
                                        MultiIndex::unit(n, s.time_axis()));
      if (slot < 0) return std::nullopt;
      jet[static_cast<size_t>(slot)] = target[static_cast<size_t>(i)];
    }
    const int div_slot = s.jet.slot_index("u1", MultiIndex::unit(n, 0));
    if (div_slot < 0) return std::nullopt;
    jet[static_cast<size_t>(div_slot)] = target[3];
    return jet;
  };

  // initial-face cells: spatial slots pinned to the initial field, momentum
  // targets absorbed into the time slots, the divergence target reached at
  // the cell's top time face through the linear steering term.
  sys.hooks.initial = [](const PdeSystem& s, const Point& anchor,
                         const std::vector<double>& target,
                         const std::vector<Poly>& u0_at_anchor, double cell_t_top)
      -> std::optional<JetHooks::InitialResult> {
    const int n = s.n;
    std::vector<double> jet(static_cast<size_t>(s.jet.K()), 0.0);
    for (size_t k = 0; k < s.jet.slots.size(); ++k) {
      const auto& slot = s.jet.slots[k];
      if (slot.unknown == "p") continue;
      if (slot.alpha[s.time_axis()] > 0) continue;
      const int ui = slot.unknown[1] - '1';
      jet[k] = u0_at_anchor[static_cast<size_t>(ui)].deriv(anchor, slot.alpha);
    }
    const std::vector<double> pinned = eval_F(s, anchor, jet);
    for (int i = 0; i < 3; ++i) {
      const int slot = s.jet.slot_index("u" + std::to_string(i + 1),
                                        MultiIndex::unit(n, s.time_axis()));
      if (slot < 0) return std::nullopt;
      jet[static_cast<size_t>(slot)] =
          target[static_cast<size_t>(i)] - pinned[static_cast<size_t>(i)];
    }
    JetHooks::InitialResult res;
    res.jet = std::move(jet);
    res.steering.assign(s.jet.unknowns.size(),
                        std::vector<double>(static_cast<size_t>(s.n_spatial()), 0.0));
    const double d_total = (target[3] - pinned[3]) / cell_t_top;
    for (int i = 0; i < 3; ++i) {
      const auto it = std::find(s.jet.unknowns.begin(), s.jet.unknowns.end(),
                                "u" + std::to_string(i + 1));
      const size_t ui = static_cast<size_t>(it - s.jet.unknowns.begin());
      res.steering[ui][static_cast<size_t>(i)] = d_total / 3.0;
    }
    return res;
  };

  return sys;
}

// ------------------------------------------------- scalar expressions

ExprPtr parse_scalar_expr(const std::string& text, int n, bool has_time) {
  Parser parser(Lexer(text).run(), /*allow_jets=*/false);
  ExprPtr e = parser.parse_single_expr();
  const int ns = has_time ? n - 1 : n;
  if (parser.max_spatial_axis > ns)
    throw SyntaxError("expression references axis x" + std::to_string(parser.max_spatial_axis) +
                          " beyond the spatial dimension",
                      1, 1);
  if (parser.uses_time && !has_time)
    throw SyntaxError("expression references t but the domain has no time axis", 1, 1);
  for (auto [node, axis] : parser.spatial_coords) node->axis = axis - 1;
  for (Expr* node : parser.time_coords) node->axis = n - 1;
  return e;
}

std::vector<ExprPtr> parse_scalar_exprs(const std::string& text, int n, bool has_time) {
  std::vector<ExprPtr> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, ';')) out.push_back(parse_scalar_expr(cur, n, has_time));
  if (out.empty()) throw SyntaxError("empty expression list", 1, 1);
  return out;
}

double eval_scalar(const ExprPtr& e, const Point& p,
                   const std::map<std::string, double>& params) {
  return eval_expr(*e, p, {}, params);
}

// plain monomial-coefficient arithmetic used only for the exact expr->poly
// conversion
namespace {

using Mono = std::map<MultiIndex, double>;

Mono mono_add(const Mono& a, const Mono& b, double sb) {
  Mono out = a;
  for (const auto& [k, v] : b) out[k] += sb * v;
  return out;
}

Mono mono_mul(const Mono& a, const Mono& b) {
  Mono out;
  for (const auto& [ka, va] : a) {
    for (const auto& [kb, vb] : b) {
      std::vector<int> o(ka.orders);
      for (int i = 0; i < ka.dim(); ++i) o[static_cast<size_t>(i)] += kb[i];
      out[MultiIndex(std::move(o))] += va * vb;
    }
  }
  return out;
}

std::optional<Mono> to_mono(const Expr& e, int n, const std::map<std::string, double>& params) {
  switch (e.op) {
    case Expr::Op::Const: {
      Mono m;
      m[MultiIndex::zeros(n)] = e.value;
      return m;
    }
    case Expr::Op::Param: {
      auto it = params.find(e.name);
      if (it == params.end()) return std::nullopt;
      Mono m;
      m[MultiIndex::zeros(n)] = it->second;
      return m;
    }
    case Expr::Op::Coord: {
      Mono m;
      m[MultiIndex::unit(n, e.axis)] = 1.0;
      return m;
    }
    case Expr::Op::Add:
    case Expr::Op::Sub: {
      auto a = to_mono(*e.a, n, params);
      auto b = to_mono(*e.b, n, params);
      if (!a || !b) return std::nullopt;
      return mono_add(*a, *b, e.op == Expr::Op::Add ? 1.0 : -1.0);
    }
    case Expr::Op::Mul: {
      auto a = to_mono(*e.a, n, params);
      auto b = to_mono(*e.b, n, params);
      if (!a || !b) return std::nullopt;
      return mono_mul(*a, *b);
    }
    case Expr::Op::Div: {
      auto a = to_mono(*e.a, n, params);
      auto b = to_mono(*e.b, n, params);
      if (!a || !b) return std::nullopt;
      if (b->size() != 1 || b->begin()->first.total() != 0 || b->begin()->second == 0.0)
        return std::nullopt;
      const double den = b->begin()->second;
      Mono out;
      for (const auto& [k, v] : *a) out[k] = v / den;
      return out;
    }
    case Expr::Op::Pow: {
      auto a = to_mono(*e.a, n, params);
      if (!a) return std::nullopt;
      Mono out;
      out[MultiIndex::zeros(n)] = 1.0;
      for (int k = 0; k < e.ipow; ++k) out = mono_mul(out, *a);
      return out;
    }
    case Expr::Op::Neg: {
      auto a = to_mono(*e.a, n, params);
      if (!a) return std::nullopt;
      Mono out;
      for (const auto& [k, v] : *a) out[k] = -v;
      return out;
    }
    default:
      return std::nullopt;
  }
}

}  // namespace

std::optional<Poly> expr_to_poly(const ExprPtr& e, int n,
                                 const std::map<std::string, double>& params) {
  auto m = to_mono(*e, n, params);
  if (!m) return std::nullopt;
  // scaled Taylor coefficients: c_alpha = m_alpha * alpha!
  std::map<MultiIndex, double> coeffs;
  for (const auto& [k, v] : *m) {
    double f = 1.0;
    for (int i = 0; i < k.dim(); ++i) f *= factorial(k[i]);
    coeffs[k] = v * f;
  }
  if (coeffs.empty()) coeffs[MultiIndex::zeros(n)] = 0.0;
  return Poly(Point(std::vector<double>(static_cast<size_t>(n), 0.0)), std::move(coeffs));
}

}  // namespace ordcomp
