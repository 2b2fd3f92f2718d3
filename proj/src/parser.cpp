#include <cassert>

#include "hjlc/frontend.hpp"
#include "lexer.hpp"

namespace hjl {

ExprPtr make_expr(Expr::Kind k, SrcSpan span) {
  auto e = std::make_unique<Expr>();
  e->kind = k;
  e->span = span;
  return e;
}

Function* Ast::find(const std::string& name) {
  for (auto& f : functions)
    if (f.name == name) return &f;
  return nullptr;
}

namespace {

class Parser {
 public:
  Parser(std::vector<Token> toks, DiagList& diags)
      : toks_(std::move(toks)), diags_(diags) {}

  bool parse_into(Ast& ast) {
    skip_seps();
    while (!at(Tok::Eof)) {
      if (!at(Tok::KwFunction)) {
        diags_.error(cur().span, "expected 'function' at top level, got '" + describe() + "'");
        return false;
      }
      Function fn;
      if (!parse_function(fn)) return false;
      ast.functions.push_back(std::move(fn));
      skip_seps();
    }
    return true;
  }

 private:
  std::vector<Token> toks_;
  DiagList& diags_;
  size_t pos_ = 0;
  int paren_depth_ = 0;

  const Token& cur() const { return toks_[pos_]; }
  const Token& peek(int k = 1) const {
    size_t p = pos_ + k;
    return toks_[p < toks_.size() ? p : toks_.size() - 1];
  }
  bool at(Tok k) const { return cur().kind == k; }
  void bump() {
    if (pos_ + 1 < toks_.size()) pos_++;
  }
  std::string describe() const {
    if (cur().kind == Tok::Eof) return "end of input";
    if (cur().kind == Tok::Newline) return "end of line";
    return cur().text;
  }
  void skip_nl() {
    while (at(Tok::Newline)) bump();
  }
  void skip_seps() {
    while (at(Tok::Newline) || at(Tok::Semi)) bump();
  }
  bool expect(Tok k, const char* what) {
    if (!at(k)) {
      diags_.error(cur().span, std::string("expected ") + what + ", got '" + describe() + "'");
      return false;
    }
    bump();
    return true;
  }

  bool parse_function(Function& fn) {
    fn.span = cur().span;
    bump();  // function
    if (!at(Tok::Ident)) return expect(Tok::Ident, "function name");
    fn.name = cur().text;
    bump();
    if (!expect(Tok::LParen, "'('")) return false;
    skip_nl();
    while (!at(Tok::RParen)) {
      Param p;
      p.span = cur().span;
      if (!at(Tok::Ident)) return expect(Tok::Ident, "parameter name");
      p.name = cur().text;
      bump();
      if (!at(Tok::ColonColon)) {
        diags_.error(cur().span, "parameter '" + p.name + "' requires a '::' type annotation");
        return false;
      }
      bump();
      if (!parse_type_expr(p.texpr)) return false;
      fn.params.push_back(std::move(p));
      skip_nl();
      if (at(Tok::Comma)) {
        bump();
        skip_nl();
      } else {
        break;
      }
    }
    if (!expect(Tok::RParen, "')'")) return false;
    if (at(Tok::KwWhere)) {
      bump();
      if (!expect(Tok::LBrace, "'{' after where")) return false;
      while (true) {
        if (!at(Tok::Ident)) return expect(Tok::Ident, "type parameter name");
        fn.where_params.push_back(cur().text);
        bump();
        if (at(Tok::Comma)) {
          bump();
          continue;
        }
        break;
      }
      if (!expect(Tok::RBrace, "'}'")) return false;
    }
    if (!parse_body(fn.body)) return false;
    return expect(Tok::KwEnd, "'end'");
  }

  bool body_terminator() const {
    return at(Tok::KwEnd) || at(Tok::KwElse) || at(Tok::KwElseif) || at(Tok::Eof);
  }

  bool parse_body(std::vector<StmtPtr>& out) {
    skip_seps();
    while (!body_terminator()) {
      StmtPtr s;
      if (!parse_statement(s)) return false;
      out.push_back(std::move(s));
      if (!body_terminator() && !at(Tok::Newline) && !at(Tok::Semi)) {
        diags_.error(cur().span, "expected end of statement, got '" + describe() + "'");
        return false;
      }
      skip_seps();
    }
    if (at(Tok::Eof)) {
      diags_.error(cur().span, "unexpected end of input inside block");
      return false;
    }
    return true;
  }

  bool parse_statement(StmtPtr& out) {
    if (at(Tok::At)) {  // @inbounds etc. prefix the following statement
      SrcSpan sp = cur().span;
      if (peek().kind == Tok::Ident && peek().text == "inbounds") {
        bump();
        bump();
        return parse_statement(out);
      }
      if (peek().kind == Tok::Ident && peek().text == "MMatrix") {
        // falls through: an @MMatrix literal can only appear in an assignment RHS
      } else {
        diags_.error(sp, "unsupported macro '@" +
                             (peek().kind == Tok::Ident ? peek().text : "") + "'");
        return false;
      }
    }
    if (at(Tok::KwReturn)) return parse_return(out);
    if (at(Tok::KwIf)) return parse_if(out);
    if (at(Tok::KwFor)) return parse_for(out);
    if (at(Tok::KwFunction)) {
      diags_.error(cur().span, "nested function definitions are not supported");
      return false;
    }
    return parse_assign(out);
  }

  bool parse_return(StmtPtr& out) {
    auto s = std::make_unique<Stmt>();
    s->kind = Stmt::Kind::Return;
    s->span = cur().span;
    bump();
    if (!at(Tok::Newline) && !at(Tok::Semi) && !body_terminator()) {
      if (!parse_expr(s->ret)) return false;
    }
    out = std::move(s);
    return true;
  }

  bool parse_if(StmtPtr& out) {
    auto s = std::make_unique<Stmt>();
    s->kind = Stmt::Kind::If;
    s->span = cur().span;
    bump();  // if / elseif
    if (!parse_expr(s->cond)) return false;
    if (!parse_body(s->then_body)) return false;
    if (at(Tok::KwElseif)) {
      StmtPtr nested;
      if (!parse_if(nested)) return false;  // consumes through matching end
      s->else_body.push_back(std::move(nested));
      out = std::move(s);
      return true;
    }
    if (at(Tok::KwElse)) {
      bump();
      if (!parse_body(s->else_body)) return false;
    }
    if (!expect(Tok::KwEnd, "'end'")) return false;
    out = std::move(s);
    return true;
  }

  // for j in 1:N, i in 1:M ... end  desugars to nested loops, written order outermost.
  bool parse_for(StmtPtr& out) {
    SrcSpan sp = cur().span;
    bump();
    struct Hdr {
      std::string var;
      ExprPtr lo, hi;
    };
    std::vector<Hdr> hdrs;
    while (true) {
      Hdr h;
      if (!at(Tok::Ident)) return expect(Tok::Ident, "loop variable");
      h.var = cur().text;
      bump();
      if (!expect(Tok::KwIn, "'in'")) return false;
      if (!parse_range_operand(h.lo)) return false;
      if (!expect(Tok::Colon, "':' in loop range")) return false;
      skip_nl();
      if (!parse_range_operand(h.hi)) return false;
      hdrs.push_back(std::move(h));
      if (at(Tok::Comma)) {
        bump();
        skip_nl();
        continue;
      }
      break;
    }
    std::vector<StmtPtr> body;
    if (!parse_body(body)) return false;
    if (!expect(Tok::KwEnd, "'end'")) return false;
    // Build innermost-out.
    for (auto it = hdrs.rbegin(); it != hdrs.rend(); ++it) {
      auto s = std::make_unique<Stmt>();
      s->kind = Stmt::Kind::For;
      s->span = sp;
      s->loop_var = it->var;
      s->range_lo = std::move(it->lo);
      s->range_hi = std::move(it->hi);
      s->for_body = std::move(body);
      body.clear();
      body.push_back(std::move(s));
    }
    out = std::move(body.front());
    return true;
  }

  // Range bounds bind tighter than ':' but may contain any non-range expression.
  bool parse_range_operand(ExprPtr& out) { return parse_additive(out); }

  bool parse_assign(StmtPtr& out) {
    auto s = std::make_unique<Stmt>();
    s->kind = Stmt::Kind::Assign;
    s->span = cur().span;
    while (true) {
      LValue lv;
      lv.span = cur().span;
      if (!at(Tok::Ident)) {
        diags_.error(cur().span, "expected a statement, got '" + describe() + "'");
        return false;
      }
      lv.name = cur().text;
      bump();
      if (at(Tok::ColonColon)) {
        bump();
        TypeExpr te;
        if (!parse_type_expr(te)) return false;
        lv.annot = std::move(te);
      } else if (at(Tok::LBracket)) {
        bump();
        skip_nl();
        while (true) {
          ExprPtr idx;
          if (!parse_expr(idx)) return false;
          lv.indices.push_back(std::move(idx));
          if (at(Tok::Comma)) {
            bump();
            skip_nl();
            continue;
          }
          break;
        }
        if (!expect(Tok::RBracket, "']'")) return false;
      }
      s->targets.push_back(std::move(lv));
      if (at(Tok::Comma)) {
        bump();
        skip_nl();
        continue;
      }
      break;
    }
    if (!expect(Tok::Assign, "'='")) return false;
    skip_nl();
    while (true) {
      ExprPtr v;
      if (!parse_expr(v)) return false;
      s->values.push_back(std::move(v));
      if (s->values.size() < s->targets.size() && at(Tok::Comma)) {
        bump();
        skip_nl();
        continue;
      }
      break;
    }
    if (s->values.size() != s->targets.size()) {
      diags_.error(s->span, "assignment arity mismatch: " + std::to_string(s->targets.size()) +
                                " targets, " + std::to_string(s->values.size()) + " values");
      return false;
    }
    out = std::move(s);
    return true;
  }

  bool parse_type_expr(TypeExpr& te) {
    te.span = cur().span;
    if (!at(Tok::Ident)) return expect(Tok::Ident, "type name");
    std::string name = cur().text;
    bump();
    if (at(Tok::LBrace)) {
      bump();
      skip_nl();
      std::vector<TypeExpr::Arg> args;
      while (true) {
        TypeExpr::Arg a;
        if (at(Tok::Int)) {
          a.is_int = true;
          a.value = cur().int_val;
          bump();
        } else if (at(Tok::Ident)) {
          a.name = cur().text;
          bump();
        } else {
          diags_.error(cur().span, "expected type argument, got '" + describe() + "'");
          return false;
        }
        args.push_back(std::move(a));
        skip_nl();
        if (at(Tok::Comma)) {
          bump();
          skip_nl();
          continue;
        }
        break;
      }
      if (!expect(Tok::RBrace, "'}'")) return false;
      if (name == "Fixed") {
        te.kind = TypeExpr::Kind::Fixed;
      } else if (name == "MMatrix") {
        te.kind = TypeExpr::Kind::Matrix;
      } else {
        diags_.error(te.span, "unknown parameterized type '" + name + "'");
        return false;
      }
      te.name = name;
      te.args = std::move(args);
      return true;
    }
    te.kind = TypeExpr::Kind::Named;
    te.name = name;
    return true;
  }

  // Expression grammar, loosest to tightest:
  //   ternary > comparison > additive > multiplicative > shift > unary > postfix
  bool parse_expr(ExprPtr& out) { return parse_ternary(out); }

  bool parse_ternary(ExprPtr& out) {
    ExprPtr c;
    if (!parse_comparison(c)) return false;
    if (!at(Tok::Question)) {
      out = std::move(c);
      return true;
    }
    auto e = make_expr(Expr::Kind::Ternary, cur().span);
    bump();
    skip_nl();
    ExprPtr a, b;
    if (!parse_ternary(a)) return false;
    skip_nl();
    if (!expect(Tok::Colon, "':' in conditional expression")) return false;
    skip_nl();
    if (!parse_ternary(b)) return false;
    e->args.push_back(std::move(c));
    e->args.push_back(std::move(a));
    e->args.push_back(std::move(b));
    out = std::move(e);
    return true;
  }

  bool peek_binop(BinOp& op) {
    switch (cur().kind) {
      case Tok::Lt: op = BinOp::Lt; return true;
      case Tok::Gt: op = BinOp::Gt; return true;
      case Tok::Le: op = BinOp::Le; return true;
      case Tok::Ge: op = BinOp::Ge; return true;
      case Tok::EqEq: op = BinOp::Eq; return true;
      case Tok::Ne: op = BinOp::Ne; return true;
      default: return false;
    }
  }

  bool parse_comparison(ExprPtr& out) {
    ExprPtr lhs;
    if (!parse_additive(lhs)) return false;
    BinOp op;
    if (!peek_binop(op)) {
      out = std::move(lhs);
      return true;
    }
    auto e = make_expr(Expr::Kind::Binary, cur().span);
    e->op = op;
    bump();
    skip_nl();
    ExprPtr rhs;
    if (!parse_additive(rhs)) return false;
    e->args.push_back(std::move(lhs));
    e->args.push_back(std::move(rhs));
    out = std::move(e);
    return true;
  }

  bool parse_additive(ExprPtr& out) {
    ExprPtr lhs;
    if (!parse_multiplicative(lhs)) return false;
    while (at(Tok::Plus) || at(Tok::Minus)) {
      auto e = make_expr(Expr::Kind::Binary, cur().span);
      e->op = at(Tok::Plus) ? BinOp::Add : BinOp::Sub;
      bump();
      skip_nl();
      ExprPtr rhs;
      if (!parse_multiplicative(rhs)) return false;
      e->args.push_back(std::move(lhs));
      e->args.push_back(std::move(rhs));
      lhs = std::move(e);
    }
    out = std::move(lhs);
    return true;
  }

  bool parse_multiplicative(ExprPtr& out) {
    ExprPtr lhs;
    if (!parse_shift(lhs)) return false;
    while (at(Tok::Star)) {
      auto e = make_expr(Expr::Kind::Binary, cur().span);
      e->op = BinOp::Mul;
      bump();
      skip_nl();
      ExprPtr rhs;
      if (!parse_shift(rhs)) return false;
      e->args.push_back(std::move(lhs));
      e->args.push_back(std::move(rhs));
      lhs = std::move(e);
    }
    out = std::move(lhs);
    return true;
  }

  bool parse_shift(ExprPtr& out) {
    ExprPtr lhs;
    if (!parse_unary(lhs)) return false;
    while (at(Tok::Shl) || at(Tok::Shr)) {
      auto e = make_expr(Expr::Kind::Binary, cur().span);
      e->op = at(Tok::Shl) ? BinOp::Shl : BinOp::Shr;
      bump();
      skip_nl();
      ExprPtr rhs;
      if (!parse_unary(rhs)) return false;
      e->args.push_back(std::move(lhs));
      e->args.push_back(std::move(rhs));
      lhs = std::move(e);
    }
    out = std::move(lhs);
    return true;
  }

  bool parse_unary(ExprPtr& out) {
    if (at(Tok::Minus)) {
      SrcSpan sp = cur().span;
      bump();
      ExprPtr inner;
      if (!parse_unary(inner)) return false;
      if (inner->kind == Expr::Kind::IntLit) {
        inner->int_val = -inner->int_val;
        inner->span = sp;
        out = std::move(inner);
        return true;
      }
      if (inner->kind == Expr::Kind::FloatLit) {
        inner->float_val = -inner->float_val;
        inner->span = sp;
        out = std::move(inner);
        return true;
      }
      auto e = make_expr(Expr::Kind::Neg, sp);
      e->args.push_back(std::move(inner));
      out = std::move(e);
      return true;
    }
    return parse_postfix(out);
  }

  bool parse_postfix(ExprPtr& out) {
    ExprPtr e;
    if (!parse_primary(e)) return false;
    while (true) {
      if (at(Tok::LBracket)) {
        auto idx = make_expr(Expr::Kind::Index, cur().span);
        idx->args.push_back(std::move(e));
        bump();
        skip_nl();
        while (true) {
          ExprPtr i;
          if (!parse_expr(i)) return false;
          idx->args.push_back(std::move(i));
          if (at(Tok::Comma)) {
            bump();
            skip_nl();
            continue;
          }
          break;
        }
        if (!expect(Tok::RBracket, "']'")) return false;
        e = std::move(idx);
        continue;
      }
      if (at(Tok::Quote)) {
        auto t = make_expr(Expr::Kind::Transpose, cur().span);
        bump();
        t->args.push_back(std::move(e));
        e = std::move(t);
        continue;
      }
      break;
    }
    out = std::move(e);
    return true;
  }

  bool parse_call_args(std::vector<ExprPtr>& args) {
    paren_depth_++;
    bump();  // (
    skip_nl();
    while (!at(Tok::RParen)) {
      ExprPtr a;
      if (!parse_expr(a)) {
        paren_depth_--;
        return false;
      }
      args.push_back(std::move(a));
      skip_nl();
      if (at(Tok::Comma)) {
        bump();
        skip_nl();
        continue;
      }
      break;
    }
    paren_depth_--;
    return expect(Tok::RParen, "')'");
  }

  bool parse_matrix_literal(ExprPtr& out) {
    auto e = make_expr(Expr::Kind::MatrixLit, cur().span);
    bump();  // [
    std::vector<std::vector<ExprPtr>> rows;
    rows.emplace_back();
    skip_nl();
    while (!at(Tok::RBracket)) {
      ExprPtr el;
      if (!parse_expr(el)) return false;
      rows.back().push_back(std::move(el));
      bool row_break = false;
      while (at(Tok::Semi) || at(Tok::Newline)) {
        row_break = true;
        bump();
      }
      if (at(Tok::Comma)) {
        bump();
        skip_nl();
        continue;
      }
      if (row_break && !at(Tok::RBracket)) rows.emplace_back();
    }
    bump();  // ]
    while (!rows.empty() && rows.back().empty()) rows.pop_back();
    if (rows.empty()) {
      diags_.error(e->span, "empty matrix literal");
      return false;
    }
    size_t cols = rows[0].size();
    for (auto& r : rows) {
      if (r.size() != cols) {
        diags_.error(e->span, "ragged matrix literal: row with " + std::to_string(r.size()) +
                                  " elements, expected " + std::to_string(cols));
        return false;
      }
    }
    e->lit_rows = (int)rows.size();
    e->lit_cols = (int)cols;
    for (auto& r : rows)
      for (auto& el : r) e->args.push_back(std::move(el));
    out = std::move(e);
    return true;
  }

  bool is_builtin_scalar_name(const std::string& s) {
    return s == "Int8" || s == "Int16" || s == "Int32" || s == "Int64" || s == "UInt8" ||
           s == "UInt16" || s == "UInt32" || s == "UInt64" || s == "Bool";
  }

  bool parse_primary(ExprPtr& out) {
    switch (cur().kind) {
      case Tok::Int: {
        auto e = make_expr(Expr::Kind::IntLit, cur().span);
        e->int_val = cur().int_val;
        bump();
        out = std::move(e);
        return true;
      }
      case Tok::Float: {
        auto e = make_expr(Expr::Kind::FloatLit, cur().span);
        e->float_val = cur().float_val;
        bump();
        out = std::move(e);
        return true;
      }
      case Tok::KwTrue:
      case Tok::KwFalse: {
        auto e = make_expr(Expr::Kind::BoolLit, cur().span);
        e->int_val = at(Tok::KwTrue) ? 1 : 0;
        bump();
        out = std::move(e);
        return true;
      }
      case Tok::LParen: {
        paren_depth_++;
        bump();
        skip_nl();
        ExprPtr inner;
        if (!parse_expr(inner)) {
          paren_depth_--;
          return false;
        }
        skip_nl();
        paren_depth_--;
        if (!expect(Tok::RParen, "')'")) return false;
        out = std::move(inner);
        return true;
      }
      case Tok::LBracket:
        return parse_matrix_literal(out);
      case Tok::At: {
        bump();
        if (!at(Tok::Ident) || cur().text != "MMatrix") {
          diags_.error(cur().span, "unsupported macro in expression position");
          return false;
        }
        bump();
        skip_nl();
        if (!at(Tok::LBracket)) return expect(Tok::LBracket, "'[' after @MMatrix");
        return parse_matrix_literal(out);
      }
      case Tok::Ident:
        return parse_ident_expr(out);
      default:
        diags_.error(cur().span, "expected expression, got '" + describe() + "'");
        return false;
    }
  }

  bool parse_ident_expr(ExprPtr& out) {
    SrcSpan sp = cur().span;
    std::string name = cur().text;
    // Parameterized type constructor: Fixed{...}(x) / MMatrix{...}(undef)
    if (peek().kind == Tok::LBrace && (name == "Fixed" || name == "MMatrix")) {
      TypeExpr te;
      if (!parse_type_expr(te)) return false;
      if (!at(Tok::LParen)) return expect(Tok::LParen, "'(' after type");
      if (peek().kind == Tok::KwUndef) {
        bump();  // (
        bump();  // undef
        if (!expect(Tok::RParen, "')'")) return false;
        auto e = make_expr(Expr::Kind::Construct, sp);
        e->texpr = std::move(te);
        out = std::move(e);
        return true;
      }
      std::vector<ExprPtr> args;
      if (!parse_call_args(args)) return false;
      if (args.size() != 1) {
        diags_.error(sp, "type conversion takes exactly one argument");
        return false;
      }
      auto e = make_expr(Expr::Kind::Convert, sp);
      e->texpr = std::move(te);
      e->args.push_back(std::move(args[0]));
      out = std::move(e);
      return true;
    }
    bump();
    if (!at(Tok::LParen)) {
      auto e = make_expr(Expr::Kind::Var, sp);
      e->name = name;
      out = std::move(e);
      return true;
    }
    // one(T) / zero(T): type argument
    if (name == "one" || name == "zero") {
      bump();  // (
      auto e = make_expr(Expr::Kind::Intrinsic, sp);
      e->name = name;
      TypeExpr te;
      if (!parse_type_expr(te)) return false;
      e->texpr = std::move(te);
      if (!expect(Tok::RParen, "')'")) return false;
      out = std::move(e);
      return true;
    }
    std::vector<ExprPtr> args;
    if (!parse_call_args(args)) return false;
    if (name == "length" || name == "atan") {
      if (args.size() != 1) {
        diags_.error(sp, name + "() takes exactly one argument");
        return false;
      }
      auto e = make_expr(Expr::Kind::Intrinsic, sp);
      e->name = name;
      e->args.push_back(std::move(args[0]));
      out = std::move(e);
      return true;
    }
    if (is_builtin_scalar_name(name)) {
      if (args.size() != 1) {
        diags_.error(sp, "type conversion takes exactly one argument");
        return false;
      }
      auto e = make_expr(Expr::Kind::Convert, sp);
      TypeExpr te;
      te.kind = TypeExpr::Kind::Named;
      te.name = name;
      te.span = sp;
      e->texpr = std::move(te);
      e->args.push_back(std::move(args[0]));
      out = std::move(e);
      return true;
    }
    auto e = make_expr(Expr::Kind::Call, sp);
    e->name = name;
    e->args = std::move(args);
    out = std::move(e);
    return true;
  }
};

}  // namespace

bool is_cmp(BinOp op) {
  switch (op) {
    case BinOp::Lt:
    case BinOp::Gt:
    case BinOp::Le:
    case BinOp::Ge:
    case BinOp::Eq:
    case BinOp::Ne:
      return true;
    default:
      return false;
  }
}

bool parse_program(const SourceProgram& src, Ast& out, DiagList& diags) {
  diags.set_stage("frontend");
  bool ok = true;
  for (size_t fi = 0; fi < src.files.size(); fi++) {
    std::vector<Token> toks;
    if (!lex_file(src.files[fi].text, (int)fi, toks, diags)) {
      ok = false;
      continue;
    }
    Parser p(std::move(toks), diags);
    if (!p.parse_into(out)) ok = false;
  }
  if (ok) {
    // entry must be defined in exactly one file
    int count = 0;
    for (auto& f : out.functions)
      if (f.name == src.entry) count++;
    if (count == 0) {
      diags.error("entry function '" + src.entry + "' is not defined");
      ok = false;
    } else if (count > 1) {
      diags.error("entry function '" + src.entry + "' is defined more than once");
      ok = false;
    }
  }
  return ok;
}

}  // namespace hjl
