#include <sstream>

#include "hjlc/frontend.hpp"

namespace hjl {

namespace {

const char* binop_str(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Shl: return "<<";
    case BinOp::Shr: return ">>";
    case BinOp::Lt: return "<";
    case BinOp::Gt: return ">";
    case BinOp::Le: return "<=";
    case BinOp::Ge: return ">=";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
  }
  return "?";
}

void print_texpr(std::ostream& os, const TypeExpr& te) {
  os << te.name;
  if (te.kind != TypeExpr::Kind::Named) {
    os << "{";
    for (size_t i = 0; i < te.args.size(); i++) {
      if (i) os << ", ";
      if (te.args[i].is_int)
        os << te.args[i].value;
      else
        os << te.args[i].name;
    }
    os << "}";
  }
}

void print_expr(std::ostream& os, const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::IntLit: os << e.int_val; return;
    case Expr::Kind::FloatLit: {
      std::ostringstream tmp;
      tmp << e.float_val;
      std::string s = tmp.str();
      os << s;
      if (s.find('.') == std::string::npos && s.find('e') == std::string::npos) os << ".0";
      return;
    }
    case Expr::Kind::BoolLit: os << (e.int_val ? "true" : "false"); return;
    case Expr::Kind::Var: os << e.name; return;
    case Expr::Kind::Binary:
      os << "(";
      print_expr(os, *e.args[0]);
      os << " " << binop_str(e.op) << " ";
      print_expr(os, *e.args[1]);
      os << ")";
      return;
    case Expr::Kind::Neg:
      os << "(-";
      print_expr(os, *e.args[0]);
      os << ")";
      return;
    case Expr::Kind::Ternary:
      os << "(";
      print_expr(os, *e.args[0]);
      os << " ? ";
      print_expr(os, *e.args[1]);
      os << " : ";
      print_expr(os, *e.args[2]);
      os << ")";
      return;
    case Expr::Kind::Call: {
      os << e.name << "(";
      for (size_t i = 0; i < e.args.size(); i++) {
        if (i) os << ", ";
        print_expr(os, *e.args[i]);
      }
      os << ")";
      return;
    }
    case Expr::Kind::Convert:
      print_texpr(os, *e.texpr);
      os << "(";
      print_expr(os, *e.args[0]);
      os << ")";
      return;
    case Expr::Kind::Construct:
      print_texpr(os, *e.texpr);
      os << "(undef)";
      return;
    case Expr::Kind::Intrinsic:
      os << e.name << "(";
      if (e.texpr)
        print_texpr(os, *e.texpr);
      else if (!e.args.empty())
        print_expr(os, *e.args[0]);
      os << ")";
      return;
    case Expr::Kind::Index: {
      print_expr(os, *e.args[0]);
      os << "[";
      for (size_t i = 1; i < e.args.size(); i++) {
        if (i > 1) os << ", ";
        print_expr(os, *e.args[i]);
      }
      os << "]";
      return;
    }
    case Expr::Kind::Transpose:
      print_expr(os, *e.args[0]);
      os << "'";
      return;
    case Expr::Kind::MatrixLit: {
      os << "[";
      for (int r = 0; r < e.lit_rows; r++) {
        if (r) os << "; ";
        for (int c = 0; c < e.lit_cols; c++) {
          if (c) os << ", ";
          print_expr(os, *e.args[r * e.lit_cols + c]);
        }
      }
      os << "]";
      return;
    }
  }
}

void print_stmt(std::ostream& os, const Stmt& s, int depth) {
  std::string ind(depth * 4, ' ');
  switch (s.kind) {
    case Stmt::Kind::Assign: {
      os << ind;
      for (size_t i = 0; i < s.targets.size(); i++) {
        if (i) os << ", ";
        auto& t = s.targets[i];
        os << t.name;
        if (t.annot) {
          os << "::";
          print_texpr(os, *t.annot);
        }
        if (!t.indices.empty()) {
          os << "[";
          for (size_t k = 0; k < t.indices.size(); k++) {
            if (k) os << ", ";
            print_expr(os, *t.indices[k]);
          }
          os << "]";
        }
      }
      os << " = ";
      for (size_t i = 0; i < s.values.size(); i++) {
        if (i) os << ", ";
        print_expr(os, *s.values[i]);
      }
      os << "\n";
      return;
    }
    case Stmt::Kind::If: {
      os << ind << "if ";
      print_expr(os, *s.cond);
      os << "\n";
      for (auto& st : s.then_body) print_stmt(os, *st, depth + 1);
      if (!s.else_body.empty()) {
        os << ind << "else\n";
        for (auto& st : s.else_body) print_stmt(os, *st, depth + 1);
      }
      os << ind << "end\n";
      return;
    }
    case Stmt::Kind::For: {
      os << ind << "for " << s.loop_var << " in ";
      print_expr(os, *s.range_lo);
      os << ":";
      print_expr(os, *s.range_hi);
      os << "\n";
      for (auto& st : s.for_body) print_stmt(os, *st, depth + 1);
      os << ind << "end\n";
      return;
    }
    case Stmt::Kind::Return:
      os << ind << "return";
      if (s.ret) {
        os << " ";
        print_expr(os, *s.ret);
      }
      os << "\n";
      return;
  }
}

}  // namespace

std::string print_ast(const Ast& ast) {
  std::ostringstream os;
  for (auto& f : ast.functions) {
    os << "function " << f.name << "(";
    for (size_t i = 0; i < f.params.size(); i++) {
      if (i) os << ", ";
      os << f.params[i].name << "::";
      print_texpr(os, f.params[i].texpr);
    }
    os << ")";
    if (!f.where_params.empty()) {
      os << " where {";
      for (size_t i = 0; i < f.where_params.size(); i++) {
        if (i) os << ", ";
        os << f.where_params[i];
      }
      os << "}";
    }
    os << "\n";
    for (auto& s : f.body) print_stmt(os, *s, 1);
    os << "end\n";
  }
  return os.str();
}

std::string render_diag(const Diagnostic& d, const std::vector<std::string>& paths) {
  std::string sev = d.sev == Severity::Error    ? "error"
                    : d.sev == Severity::Warning ? "warning"
                                                 : "note";
  std::string out;
  if (d.span.begin.line > 0) {
    std::string path = "<input>";
    if (d.span.begin.file >= 0 && d.span.begin.file < (int)paths.size())
      path = paths[d.span.begin.file];
    out = path + ":" + std::to_string(d.span.begin.line) + ":" +
          std::to_string(d.span.begin.col) + ": " + sev + ": ";
  } else {
    out = sev + ": ";
  }
  if (!d.stage.empty()) out += "[" + d.stage + "] ";
  out += d.message;
  return out;
}

}  // namespace hjl
