// Tokenizer shared by the domain and problem file parsers.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tmprl/action_lang.hpp"

namespace tmprl::lang::detail {

enum class TokenKind { kIdent, kLParen, kRParen, kComma, kDot, kColon, kMinus, kNeq, kEnd };

struct Token {
  TokenKind kind = TokenKind::kEnd;
  std::string text;
  int line = 1;
  int column = 1;
};

std::vector<Token> tokenize(std::string_view text);

bool is_keyword(std::string_view word);

/// Cursor over a token list with the helpers both parsers need.
class TokenStream {
 public:
  explicit TokenStream(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  const Token& peek(std::size_t ahead = 0) const;
  const Token& next();
  bool at_end() const { return peek().kind == TokenKind::kEnd; }
  bool accept(TokenKind kind);
  bool accept_word(std::string_view word);
  const Token& expect(TokenKind kind, std::string_view what);
  /// Non-keyword identifier.
  std::string expect_name(std::string_view what);

  [[noreturn]] void fail(const Token& at, const std::string& message) const;

  /// `name` or `name(arg, ...)`.
  Atom parse_atom();
  /// Comma-separated `[-]atom` and `X != Y` items.
  void parse_body(std::vector<Literal>& literals, std::vector<Inequality>* inequalities);

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

std::string describe(const Token& token);

}  // namespace tmprl::lang::detail
