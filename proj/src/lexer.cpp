#include "lexer.hpp"

#include <cctype>
#include <unordered_map>

namespace hjl {

namespace {

const std::unordered_map<std::string, Tok> kKeywords = {
    {"function", Tok::KwFunction}, {"where", Tok::KwWhere}, {"for", Tok::KwFor},
    {"in", Tok::KwIn},             {"if", Tok::KwIf},       {"elseif", Tok::KwElseif},
    {"else", Tok::KwElse},         {"end", Tok::KwEnd},     {"return", Tok::KwReturn},
    {"true", Tok::KwTrue},         {"false", Tok::KwFalse}, {"undef", Tok::KwUndef},
};

}  // namespace

bool lex_file(const std::string& text, int file_index, std::vector<Token>& out,
              DiagList& diags) {
  size_t i = 0, n = text.size();
  int line = 1, col = 1;
  bool ok = true;

  auto loc = [&]() { return SrcLoc{file_index, line, col}; };
  auto push = [&](Tok k, SrcLoc b, std::string t = "") {
    Token tok;
    tok.kind = k;
    tok.text = std::move(t);
    tok.span = {b, loc()};
    out.push_back(std::move(tok));
  };
  auto advance = [&](size_t count) {
    for (size_t k = 0; k < count && i < n; k++) {
      if (text[i] == '\n') {
        line++;
        col = 1;
      } else {
        col++;
      }
      i++;
    }
  };

  while (i < n) {
    char c = text[i];
    SrcLoc begin = loc();
    if (c == '\n') {
      advance(1);
      if (!out.empty() && out.back().kind != Tok::Newline) push(Tok::Newline, begin);
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < n && text[i] != '\n') advance(1);
      continue;
    }
    if (std::isalpha((unsigned char)c) || c == '_') {
      size_t s = i;
      while (i < n && (std::isalnum((unsigned char)text[i]) || text[i] == '_')) advance(1);
      std::string word = text.substr(s, i - s);
      auto it = kKeywords.find(word);
      if (it != kKeywords.end()) {
        push(it->second, begin, word);
      } else {
        push(Tok::Ident, begin, word);
      }
      continue;
    }
    if (std::isdigit((unsigned char)c)) {
      size_t s = i;
      while (i < n && std::isdigit((unsigned char)text[i])) advance(1);
      bool is_float = false;
      if (i + 1 < n && text[i] == '.' && std::isdigit((unsigned char)text[i + 1])) {
        is_float = true;
        advance(1);
        while (i < n && std::isdigit((unsigned char)text[i])) advance(1);
      }
      std::string num = text.substr(s, i - s);
      Token tok;
      tok.span = {begin, loc()};
      tok.text = num;
      if (is_float) {
        tok.kind = Tok::Float;
        tok.float_val = std::stod(num);
      } else {
        tok.kind = Tok::Int;
        try {
          tok.int_val = std::stoll(num);
        } catch (...) {
          diags.error(tok.span, "integer literal out of range: " + num);
          ok = false;
        }
      }
      out.push_back(std::move(tok));
      continue;
    }
    // Unicode comparison operators.
    if ((unsigned char)c == 0xE2 && i + 2 < n && (unsigned char)text[i + 1] == 0x89) {
      unsigned char b3 = (unsigned char)text[i + 2];
      if (b3 == 0xA5) {  // >=
        advance(3);
        push(Tok::Ge, begin, ">=");
        continue;
      }
      if (b3 == 0xA4) {  // <=
        advance(3);
        push(Tok::Le, begin, "<=");
        continue;
      }
    }
    auto two = [&](char a, char b) { return c == a && i + 1 < n && text[i + 1] == b; };
    if (two('>', '>')) { advance(2); push(Tok::Shr, begin, ">>"); continue; }
    if (two('<', '<')) { advance(2); push(Tok::Shl, begin, "<<"); continue; }
    if (two('>', '=')) { advance(2); push(Tok::Ge, begin, ">="); continue; }
    if (two('<', '=')) { advance(2); push(Tok::Le, begin, "<="); continue; }
    if (two('=', '=')) { advance(2); push(Tok::EqEq, begin, "=="); continue; }
    if (two('!', '=')) { advance(2); push(Tok::Ne, begin, "!="); continue; }
    if (two(':', ':')) { advance(2); push(Tok::ColonColon, begin, "::"); continue; }
    Tok k;
    switch (c) {
      case '+': k = Tok::Plus; break;
      case '-': k = Tok::Minus; break;
      case '*': k = Tok::Star; break;
      case '<': k = Tok::Lt; break;
      case '>': k = Tok::Gt; break;
      case '=': k = Tok::Assign; break;
      case '\'': k = Tok::Quote; break;
      case '?': k = Tok::Question; break;
      case ':': k = Tok::Colon; break;
      case ',': k = Tok::Comma; break;
      case ';': k = Tok::Semi; break;
      case '@': k = Tok::At; break;
      case '(': k = Tok::LParen; break;
      case ')': k = Tok::RParen; break;
      case '[': k = Tok::LBracket; break;
      case ']': k = Tok::RBracket; break;
      case '{': k = Tok::LBrace; break;
      case '}': k = Tok::RBrace; break;
      default: {
        diags.error({begin, begin}, std::string("unexpected character '") + c + "'");
        advance(1);
        ok = false;
        continue;
      }
    }
    advance(1);
    push(k, begin, std::string(1, c));
  }
  Token eof;
  eof.kind = Tok::Eof;
  eof.span = {loc(), loc()};
  out.push_back(eof);
  return ok;
}

}  // namespace hjl
