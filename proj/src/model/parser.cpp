#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "lrtng/errors.hpp"
#include "lrtng/model.hpp"

namespace lrtng {

struct OdeSystem::Lazy {
  std::once_flag jac_once;
  std::vector<std::vector<Expr>> jac;
  std::once_flag tape_once;
  Tape tape;
};

OdeSystem::OdeSystem(std::string name, std::vector<Expr> rhs, std::optional<std::size_t> time_index)
    : name_(std::move(name)), rhs_(std::move(rhs)), time_index_(time_index), lazy_(std::make_shared<Lazy>()) {
  if (rhs_.empty()) throw UsageError("ODE system needs at least one equation");
  for (const auto& e : rhs_) {
    if (e.empty()) throw UsageError("empty right-hand side");
    if (e.arity() > rhs_.size()) throw UsageError("right-hand side references an undeclared variable");
  }
  if (time_index_) {
    if (*time_index_ >= rhs_.size()) throw UsageError("time index out of range");
    if (!rhs_[*time_index_].is_constant(1.0)) throw UsageError("time variable must have right-hand side 1");
  }
}

const std::vector<std::vector<Expr>>& OdeSystem::jacobian() const {
  std::call_once(lazy_->jac_once, [this] {
    Differentiator d;
    lazy_->jac.assign(dim(), std::vector<Expr>(dim()));
    for (std::size_t j = 0; j < dim(); ++j) {
      for (std::size_t k = 0; k < dim(); ++k) lazy_->jac[j][k] = d(rhs_[j], k);
    }
  });
  return lazy_->jac;
}

const Tape& OdeSystem::rhs_tape() const {
  std::call_once(lazy_->tape_once, [this] { lazy_->tape = Tape(rhs_, dim()); });
  return lazy_->tape;
}

std::string OdeSystem::to_text() const {
  std::string out = "# " + name_ + "\n";
  for (std::size_t j = 0; j < dim(); ++j) out += "x" + std::to_string(j + 1) + "' = " + to_string(rhs_[j]) + "\n";
  if (time_index_) out += "time x" + std::to_string(*time_index_ + 1) + "\n";
  return out;
}

InitialSet make_initial_set(const Vector& center, const Vector& radii, double floor) {
  if (center.size() == 0) throw UsageError("initial center is empty");
  Vector r = radii;
  if (r.size() == 1 && center.size() > 1) r = Vector::Constant(center.size(), radii[0]);
  if (r.size() != center.size()) {
    throw UsageError("initial radius has " + std::to_string(r.size()) + " entries, center has " +
                     std::to_string(center.size()));
  }
  InitialSet s{center, r, {}};
  for (Eigen::Index j = 0; j < r.size(); ++j) {
    if (!std::isfinite(center[j])) throw UsageError("non-finite initial center");
    if (!std::isfinite(r[j]) || r[j] < 0.0) throw UsageError("initial radii must be finite and non-negative");
    if (r[j] < floor) {
      s.radii[j] = floor;
      s.floored.push_back(static_cast<std::size_t>(j));
    }
  }
  return s;
}

namespace {

enum class Tok { Number, Ident, Prime, Eq, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, Sep, End };

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  bool integral = false;
  std::size_t line = 1;
  std::size_t col = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_blank();
      Token t;
      t.line = line_;
      t.col = col_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (c == '\n' || c == ';') {
        t.kind = Tok::Sep;
        advance();
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        lex_number(t);
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Tok::Ident;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          t.text += src_[pos_];
          advance();
        }
      } else {
        switch (c) {
          case '\'':
            t.kind = Tok::Prime;
            break;
          case '=':
            t.kind = Tok::Eq;
            break;
          case '+':
            t.kind = Tok::Plus;
            break;
          case '-':
            t.kind = Tok::Minus;
            break;
          case '*':
            t.kind = Tok::Star;
            break;
          case '/':
            t.kind = Tok::Slash;
            break;
          case '^':
            t.kind = Tok::Caret;
            break;
          case '(':
            t.kind = Tok::LParen;
            break;
          case ')':
            t.kind = Tok::RParen;
            break;
          case ',':
            t.kind = Tok::Comma;
            break;
          default:
            throw ParseError(line_, col_, std::string("unexpected character '") + c + "'");
        }
        t.text = std::string(1, c);
        advance();
      }
      out.push_back(t);
    }
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_blank() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\r') {
        advance();
      } else {
        return;
      }
    }
  }

  void lex_number(Token& t) {
    const std::size_t start = pos_;
    bool integral = true;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      integral = false;
      advance();
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      const std::size_t save_pos = pos_;
      const std::size_t save_col = col_;
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        integral = false;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
      } else {
        pos_ = save_pos;
        col_ = save_col;
      }
    }
    t.kind = Tok::Number;
    t.text = std::string(src_.substr(start, pos_ - start));
    t.integral = integral;
    const auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
    if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size() || !std::isfinite(t.number)) {
      throw ParseError(t.line, t.col, "malformed number '" + t.text + "'");
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

std::optional<std::size_t> state_variable(const std::string& ident) {
  if (ident.size() < 2 || ident[0] != 'x') return std::nullopt;
  std::size_t k = 0;
  for (std::size_t i = 1; i < ident.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(ident[i]))) return std::nullopt;
    k = k * 10 + static_cast<std::size_t>(ident[i] - '0');
    if (k > 1000000) return std::nullopt;
  }
  if (ident[1] == '0') return std::nullopt;
  return k;
}

const std::map<std::string, UnaryOp, std::less<>>& functions() {
  static const std::map<std::string, UnaryOp, std::less<>> table{
      {"sin", UnaryOp::Sin}, {"cos", UnaryOp::Cos}, {"tan", UnaryOp::Tan}, {"tanh", UnaryOp::Tanh},
      {"exp", UnaryOp::Exp}, {"ln", UnaryOp::Ln},   {"sqrt", UnaryOp::Sqrt}};
  return table;
}

struct VarRef {
  std::size_t index;
  std::size_t line;
  std::size_t col;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  OdeSystem parse(std::string name) {
    std::map<std::size_t, Expr> equations;
    std::map<std::size_t, Token> equation_at;
    std::optional<std::pair<std::size_t, Token>> time_var;

    while (true) {
      while (peek().kind == Tok::Sep) ++pos_;
      if (peek().kind == Tok::End) break;
      const Token head = expect(Tok::Ident, "an equation 'x<k>' = ...' or 'time x<k>'");
      if (head.text == "time" && peek().kind == Tok::Ident) {
        const Token v = next();
        auto k = state_variable(v.text);
        if (!k) throw ParseError(v.line, v.col, "expected a state variable after 'time', got '" + v.text + "'");
        if (time_var) throw ParseError(head.line, head.col, "duplicate time directive");
        time_var = std::make_pair(*k, v);
      } else {
        auto k = state_variable(head.text);
        if (!k) throw ParseError(head.line, head.col, "expected a state variable x<k>, got '" + head.text + "'");
        expect(Tok::Prime, "' after the state variable");
        expect(Tok::Eq, "'='");
        if (equations.count(*k)) {
          throw ParseError(head.line, head.col, "duplicate equation for " + head.text);
        }
        equations.emplace(*k, parse_expr());
        equation_at.emplace(*k, head);
      }
      const Token& end = peek();
      if (end.kind != Tok::Sep && end.kind != Tok::End) {
        throw ParseError(end.line, end.col, "unexpected '" + end.text + "' after equation");
      }
    }

    if (equations.empty()) throw ParseError(1, 1, "model defines no equations");
    const std::size_t n = equations.size();
    for (const auto& [k, tok] : equation_at) {
      if (k > n) {
        throw ParseError(tok.line, tok.col,
                         "equations must define x1..x" + std::to_string(n) + " contiguously; found " + tok.text);
      }
    }
    for (const auto& ref : refs_) {
      if (!equations.count(ref.index)) {
        throw ParseError(ref.line, ref.col, "undeclared variable x" + std::to_string(ref.index) +
                                                " (no equation defines it)");
      }
    }
    std::vector<Expr> rhs;
    rhs.reserve(n);
    for (auto& [k, e] : equations) rhs.push_back(e);

    std::optional<std::size_t> time_index;
    if (time_var) {
      const auto& [k, tok] = *time_var;
      if (!equations.count(k)) throw ParseError(tok.line, tok.col, "time directive names undeclared " + tok.text);
      if (!equations.at(k).is_constant(1.0)) {
        throw ParseError(tok.line, tok.col, "time variable " + tok.text + " must have right-hand side 1");
      }
      time_index = k - 1;
    }
    return OdeSystem(std::move(name), std::move(rhs), time_index);
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  Token next() { return toks_[pos_++]; }
  Token expect(Tok kind, const std::string& what) {
    const Token& t = peek();
    if (t.kind != kind) {
      throw ParseError(t.line, t.col, "expected " + what + ", got " + (t.kind == Tok::End ? "end of input" :
                                                                        t.kind == Tok::Sep ? "end of equation" :
                                                                        "'" + t.text + "'"));
    }
    return next();
  }

  Expr parse_expr() {
    Expr e = parse_term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const bool plus = next().kind == Tok::Plus;
      Expr r = parse_term();
      e = plus ? e + r : e - r;
    }
    return e;
  }

  Expr parse_term() {
    Expr e = parse_unary();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      const bool mul = next().kind == Tok::Star;
      Expr r = parse_unary();
      e = mul ? e * r : e / r;
    }
    return e;
  }

  Expr parse_unary() {
    if (peek().kind == Tok::Minus) {
      ++pos_;
      return -parse_unary();
    }
    if (peek().kind == Tok::Plus) {
      ++pos_;
      return parse_unary();
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (peek().kind != Tok::Caret) return base;
    ++pos_;
    bool negative = false;
    if (peek().kind == Tok::Minus || peek().kind == Tok::Plus) negative = next().kind == Tok::Minus;
    const Token t = peek();
    if (t.kind != Tok::Number) throw ParseError(t.line, t.col, "exponent must be an integer literal");
    if (!t.integral || t.number > 1e6) throw ParseError(t.line, t.col, "non-integer exponent '" + t.text + "'");
    ++pos_;
    const int n = static_cast<int>(t.number);
    return pow(base, negative ? -n : n);
  }

  Expr parse_primary() {
    const Token t = peek();
    switch (t.kind) {
      case Tok::Number:
        ++pos_;
        return Expr::constant(t.number);
      case Tok::LParen: {
        ++pos_;
        Expr e = parse_expr();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::Ident: {
        ++pos_;
        if (auto k = state_variable(t.text)) {
          refs_.push_back({*k, t.line, t.col});
          return Expr::variable(*k - 1);
        }
        const auto& fns = functions();
        if (auto it = fns.find(t.text); it != fns.end()) {
          expect(Tok::LParen, "'(' after " + t.text);
          Expr arg = parse_expr();
          expect(Tok::RParen, "')'");
          return Expr::unary(it->second, arg);
        }
        throw ParseError(t.line, t.col, "unknown identifier '" + t.text + "'");
      }
      default:
        throw ParseError(t.line, t.col, t.kind == Tok::End || t.kind == Tok::Sep
                                            ? std::string("unexpected end of expression")
                                            : "unexpected '" + t.text + "'");
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<VarRef> refs_;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> parse_number_list(std::string_view text, std::size_t line) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    std::string_view item = text.substr(pos, comma - pos);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front()))) item.remove_prefix(1);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back()))) item.remove_suffix(1);
    double v = 0.0;
    const char* first = item.data();
    if (!item.empty() && item.front() == '+') ++first;
    const auto res = std::from_chars(first, item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size() || !std::isfinite(v)) {
      throw ParseError(line, pos + 1, "malformed number '" + std::string(item) + "'");
    }
    values.push_back(v);
    pos = comma + 1;
  }
  return values;
}

}  // namespace

OdeSystem parse_model(std::string_view text, std::string name) {
  Parser p(Lexer(text).run());
  return p.parse(std::move(name));
}

OdeSystem load_model(const std::filesystem::path& path) {
  return parse_model(read_file(path), path.stem().string());
}

InitSpec parse_init(std::string_view text) {
  InitSpec spec;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, 1, "expected 'key = value'");
    std::string key(line.substr(0, eq));
    while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
    const auto values = parse_number_list(line.substr(eq + 1), line_no);
    auto scalar = [&](const char* what) {
      if (values.size() != 1) throw ParseError(line_no, 1, std::string(what) + " takes a single value");
      return values[0];
    };
    auto to_vector = [&] { return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())); };
    if (key == "center") {
      spec.center = to_vector();
    } else if (key == "radius") {
      spec.radius = to_vector();
    } else if (key == "dt") {
      spec.dt = scalar("dt");
    } else if (key == "T") {
      spec.horizon = scalar("T");
    } else if (key == "order") {
      const double o = scalar("order");
      if (o != 1.0 && o != 2.0 && o != 4.0) throw ParseError(line_no, 1, "order must be 1, 2 or 4");
      spec.order = static_cast<int>(o);
    } else {
      throw ParseError(line_no, 1, "unknown key '" + key + "'");
    }
  }
  return spec;
}

InitSpec load_init(const std::filesystem::path& path) { return parse_init(read_file(path)); }

double eval_real(const Expr& e, const Vector& x) { return Tape({e}, static_cast<std::size_t>(x.size())).eval(x)[0]; }

Interval eval_interval(const Expr& e, const Box& x) { return Tape({e}, x.size()).eval(x)[0]; }

}  // namespace lrtng
