#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hjlc/diag.hpp"

namespace hjl {

enum class Tok : uint8_t {
  Eof, Newline, Ident, Int, Float,
  KwFunction, KwWhere, KwFor, KwIn, KwIf, KwElseif, KwElse, KwEnd, KwReturn,
  KwTrue, KwFalse, KwUndef,
  Plus, Minus, Star, Shl, Shr, Lt, Gt, Le, Ge, EqEq, Ne,
  Assign, Quote, Question, Colon, ColonColon, Comma, Semi, At,
  LParen, RParen, LBracket, RBracket, LBrace, RBrace,
};

struct Token {
  Tok kind = Tok::Eof;
  std::string text;
  int64_t int_val = 0;
  double float_val = 0;
  SrcSpan span;
};

// Tokenizes one source file; returns false on a lexical error (reported in diags).
bool lex_file(const std::string& text, int file_index, std::vector<Token>& out,
              DiagList& diags);

}  // namespace hjl
