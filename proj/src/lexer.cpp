#include "lexer.hpp"

#include <array>
#include <cctype>

namespace tmprl::lang::detail {

namespace {

constexpr std::array<std::string_view, 13> kKeywords = {
    "type", "object", "fluent", "action", "fact", "if", "causes",
    "nonexecutable", "inertial", "init", "goal", "scenario", "label"};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

}  // namespace

bool is_keyword(std::string_view word) {
  for (auto keyword : kKeywords) {
    if (keyword == word) return true;
  }
  return false;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  int line = 1;
  int column = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
      ++i;
    }
  };

  while (i < text.size()) {
    const char c = text[i];
    if (c == '%') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c)) != 0) {
      advance(1);
      continue;
    }
    Token token;
    token.line = line;
    token.column = column;
    if (ident_start(c)) {
      std::size_t end = i;
      while (end < text.size() && ident_char(text[end])) ++end;
      token.kind = TokenKind::kIdent;
      token.text = std::string(text.substr(i, end - i));
      advance(end - i);
      tokens.push_back(std::move(token));
      continue;
    }
    switch (c) {
      case '(': token.kind = TokenKind::kLParen; break;
      case ')': token.kind = TokenKind::kRParen; break;
      case ',': token.kind = TokenKind::kComma; break;
      case '.': token.kind = TokenKind::kDot; break;
      case ':': token.kind = TokenKind::kColon; break;
      case '-': token.kind = TokenKind::kMinus; break;
      case '!':
        if (i + 1 < text.size() && text[i + 1] == '=') {
          token.kind = TokenKind::kNeq;
          token.text = "!=";
          advance(2);
          tokens.push_back(std::move(token));
          continue;
        }
        [[fallthrough]];
      default:
        throw SyntaxError("unexpected character '" + std::string(1, c) + "'", line, column);
    }
    token.text = std::string(1, c);
    advance(1);
    tokens.push_back(std::move(token));
  }

  Token end;
  end.kind = TokenKind::kEnd;
  end.line = line;
  end.column = column;
  tokens.push_back(end);
  return tokens;
}

std::string describe(const Token& token) {
  if (token.kind == TokenKind::kEnd) return "end of input";
  return "token `" + token.text + "`";
}

const Token& TokenStream::peek(std::size_t ahead) const {
  const std::size_t index = pos_ + ahead;
  return index < tokens_.size() ? tokens_[index] : tokens_.back();
}

const Token& TokenStream::next() {
  const Token& token = peek();
  if (pos_ < tokens_.size() - 1) ++pos_;
  return token;
}

bool TokenStream::accept(TokenKind kind) {
  if (peek().kind != kind) return false;
  next();
  return true;
}

bool TokenStream::accept_word(std::string_view word) {
  if (peek().kind != TokenKind::kIdent || peek().text != word) return false;
  next();
  return true;
}

const Token& TokenStream::expect(TokenKind kind, std::string_view what) {
  if (peek().kind != kind) fail(peek(), "expected " + std::string(what) + ", found " + describe(peek()));
  return next();
}

std::string TokenStream::expect_name(std::string_view what) {
  const Token& token = peek();
  if (token.kind != TokenKind::kIdent || is_keyword(token.text)) {
    fail(token, "expected " + std::string(what) + ", found " + describe(token));
  }
  return next().text;
}

void TokenStream::fail(const Token& at, const std::string& message) const {
  throw SyntaxError(message, at.line, at.column);
}

Atom TokenStream::parse_atom() {
  Atom atom;
  atom.predicate = expect_name("predicate or action name");
  if (accept(TokenKind::kLParen)) {
    do {
      atom.args.push_back(expect_name("argument"));
    } while (accept(TokenKind::kComma));
    expect(TokenKind::kRParen, "`)`");
  }
  return atom;
}

void TokenStream::parse_body(std::vector<Literal>& literals, std::vector<Inequality>* inequalities) {
  do {
    if (inequalities != nullptr && peek().kind == TokenKind::kIdent && peek(1).kind == TokenKind::kNeq) {
      Inequality neq;
      neq.lhs = expect_name("term");
      next();
      neq.rhs = expect_name("term");
      inequalities->push_back(std::move(neq));
      continue;
    }
    Literal literal;
    literal.negated = accept(TokenKind::kMinus);
    literal.atom = parse_atom();
    literals.push_back(std::move(literal));
  } while (accept(TokenKind::kComma));
}

}  // namespace tmprl::lang::detail
