#include "vessiot/parse.hpp"

#include <cctype>
#include <map>

#include "vessiot/errors.hpp"

namespace vessiot {

namespace {

struct Token {
  enum class Kind { Number, Ident, Op, LParen, RParen, Comma, End };
  Kind kind = Kind::End;
  std::string text;
  Rational value;
  int pos = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) { advance(); }

  const Token& peek() const { return tok_; }
  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& msg, const Token& t) const {
    int line = 1, col = 1;
    for (int i = 0; i < t.pos && i < static_cast<int>(s_.size()); ++i) {
      if (s_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(msg + (t.text.empty() ? "" : " near '" + t.text + "'") + " at line " +
                         std::to_string(line) + ", column " + std::to_string(col),
                     line, col, t.text);
  }

 private:
  void advance() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    tok_ = Token{};
    tok_.pos = static_cast<int>(pos_);
    if (pos_ >= s_.size()) {
      tok_.kind = Token::Kind::End;
      return;
    }
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      std::string intpart = s_.substr(start, pos_ - start);
      std::string fracpart;
      if (pos_ < s_.size() && s_[pos_] == '.') {
        ++pos_;
        size_t fs = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        fracpart = s_.substr(fs, pos_ - fs);
      }
      tok_.kind = Token::Kind::Number;
      tok_.text = s_.substr(start, pos_ - start);
      BigInt num(intpart.empty() ? "0" : intpart);
      BigInt den = 1;
      for (char d : fracpart) {
        num = num * 10 + (d - '0');
        den *= 10;
      }
      tok_.value = Rational(num, den);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      tok_.kind = Token::Kind::Ident;
      tok_.text = s_.substr(start, pos_ - start);
      return;
    }
    ++pos_;
    tok_.text = std::string(1, c);
    switch (c) {
      case '(':
        tok_.kind = Token::Kind::LParen;
        return;
      case ')':
        tok_.kind = Token::Kind::RParen;
        return;
      case ',':
        tok_.kind = Token::Kind::Comma;
        return;
      case '+':
      case '-':
      case '*':
      case '/':
      case '^':
        tok_.kind = Token::Kind::Op;
        return;
      default:
        throw ParseError("unexpected character '" + std::string(1, c) + "'", 1,
                         static_cast<int>(pos_), std::string(1, c));
    }
  }

  const std::string& s_;
  size_t pos_ = 0;
  Token tok_;
};

// A parsed value: scalar expression plus optional vector-field part.
struct PValue {
  Expr scalar;
  std::map<uint32_t, Expr> vec;
  bool is_vector() const { return !vec.empty(); }
};

class Parser {
 public:
  Parser(const std::string& text, const ParseContext& ctx, bool allow_vector)
      : lex_(text), ctx_(ctx), allow_vector_(allow_vector) {}

  PValue parse() {
    PValue v = parse_sum();
    if (lex_.peek().kind != Token::Kind::End) lex_.fail("trailing input", lex_.peek());
    return v;
  }

 private:
  PValue parse_sum() {
    PValue acc = parse_product();
    while (lex_.peek().kind == Token::Kind::Op &&
           (lex_.peek().text == "+" || lex_.peek().text == "-")) {
      Token op = lex_.next();
      PValue rhs = parse_product();
      if (op.text == "-") rhs = negate(rhs);
      acc = add(acc, rhs);
    }
    return acc;
  }

  PValue parse_product() {
    PValue acc = parse_unary();
    while (lex_.peek().kind == Token::Kind::Op &&
           (lex_.peek().text == "*" || lex_.peek().text == "/")) {
      Token op = lex_.next();
      PValue rhs = parse_unary();
      if (op.text == "*") {
        acc = mul(acc, rhs, op);
      } else {
        if (rhs.is_vector()) lex_.fail("cannot divide by a vector field", op);
        if (rhs.scalar.is_zero_expr()) lex_.fail("division by zero", op);
        if (acc.is_vector()) {
          for (auto& [id, c] : acc.vec) c = c / rhs.scalar;
        } else {
          acc.scalar = acc.scalar / rhs.scalar;
        }
      }
    }
    return acc;
  }

  PValue parse_unary() {
    if (lex_.peek().kind == Token::Kind::Op && lex_.peek().text == "-") {
      lex_.next();
      return negate(parse_unary());
    }
    if (lex_.peek().kind == Token::Kind::Op && lex_.peek().text == "+") {
      lex_.next();
      return parse_unary();
    }
    return parse_power();
  }

  PValue parse_power() {
    PValue base = parse_primary();
    if (lex_.peek().kind == Token::Kind::Op && lex_.peek().text == "^") {
      Token op = lex_.next();
      if (base.is_vector()) lex_.fail("cannot raise a vector field to a power", op);
      PValue e = parse_unary();  // right-associative, allows -2 and (1/2)
      if (e.is_vector()) lex_.fail("exponent cannot be a vector field", op);
      auto q = e.scalar.rational_value();
      if (!q) lex_.fail("exponent must be a rational constant", op);
      base.scalar = pow(base.scalar, *q);
    }
    return base;
  }

  PValue parse_primary() {
    Token t = lex_.next();
    switch (t.kind) {
      case Token::Kind::Number: {
        PValue v;
        v.scalar = Expr::from_rational(t.value);
        return v;
      }
      case Token::Kind::LParen: {
        PValue v = parse_sum();
        expect_rparen();
        return v;
      }
      case Token::Kind::Ident: {
        if (t.text == "exp" || t.text == "log") {
          expect_lparen(t);
          PValue a = parse_sum();
          expect_rparen();
          if (a.is_vector()) lex_.fail("vector field inside " + t.text, t);
          PValue v;
          v.scalar = t.text == "exp" ? exp(a.scalar) : log(a.scalar);
          return v;
        }
        if (t.text == "D") {
          if (!allow_vector_) lex_.fail("D(...) is only valid in vector fields", t);
          expect_lparen(t);
          Token coord = lex_.next();
          if (coord.kind != Token::Kind::Ident) lex_.fail("expected coordinate name", coord);
          Symbol s = resolve(coord);
          if (!s.is_coordinate()) lex_.fail("D argument must be a coordinate", coord);
          expect_rparen();
          PValue v;
          v.vec.emplace(s.id(), Expr::from_int(1));
          return v;
        }
        Symbol s = resolve(t);
        PValue v;
        v.scalar = Expr::from_symbol(s);
        return v;
      }
      default:
        lex_.fail("unexpected token", t);
    }
  }

  Symbol resolve(const Token& t) {
    auto it = ctx_.names.find(t.text);
    if (it == ctx_.names.end()) lex_.fail("unknown identifier", t);
    return it->second;
  }

  void expect_lparen(const Token& at) {
    if (lex_.peek().kind != Token::Kind::LParen) lex_.fail("expected '('", at);
    lex_.next();
  }
  void expect_rparen() {
    if (lex_.peek().kind != Token::Kind::RParen) lex_.fail("expected ')'", lex_.peek());
    lex_.next();
  }

  PValue negate(PValue v) {
    v.scalar = -v.scalar;
    for (auto& [id, c] : v.vec) c = -c;
    return v;
  }

  PValue add(PValue a, PValue b) {
    a.scalar = a.scalar + b.scalar;
    for (auto& [id, c] : b.vec) {
      auto it = a.vec.find(id);
      if (it == a.vec.end())
        a.vec.emplace(id, c);
      else
        it->second = it->second + c;
    }
    return a;
  }

  PValue mul(PValue a, PValue b, const Token& at) {
    if (a.is_vector() && b.is_vector()) lex_.fail("product of vector fields", at);
    if (b.is_vector()) std::swap(a, b);
    for (auto& [id, c] : a.vec) c = c * b.scalar;
    if (!a.is_vector()) a.scalar = a.scalar * b.scalar;
    return a;
  }

  Lexer lex_;
  const ParseContext& ctx_;
  bool allow_vector_;
};

}  // namespace

Expr parse_expression(const std::string& text, const ParseContext& ctx) {
  Parser p(text, ctx, false);
  PValue v = p.parse();
  return v.scalar;
}

std::vector<std::pair<Symbol, Expr>> parse_vector_field(const std::string& text,
                                                        const ParseContext& ctx) {
  Parser p(text, ctx, true);
  PValue v = p.parse();
  if (!v.scalar.is_zero_expr())
    throw ParseError("vector field has a scalar part: " + to_string(v.scalar), 1, 1, "");
  std::vector<std::pair<Symbol, Expr>> out;
  for (auto& [id, c] : v.vec)
    if (!c.is_zero_expr()) out.emplace_back(Symbol(id), c);
  return out;
}

}  // namespace vessiot
