#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hjlc/diag.hpp"
#include "hjlc/types.hpp"

namespace hjl {

// Surface type expression; arguments of Fixed{...}/MMatrix{...} are names or
// integer literals and get resolved during monomorphization.
struct TypeExpr {
  enum class Kind : uint8_t { Named, Fixed, Matrix };
  Kind kind = Kind::Named;
  std::string name;  // Named: "Int32", "Bool", or a where-parameter
  struct Arg {
    bool is_int = false;
    int64_t value = 0;
    std::string name;
  };
  std::vector<Arg> args;  // Fixed{T,N}: 2; MMatrix{R,C,T}: 3
  SrcSpan span;
  std::optional<Type> resolved;  // filled by monomorphize
};

enum class BinOp : uint8_t { Add, Sub, Mul, Shl, Shr, Lt, Gt, Le, Ge, Eq, Ne };
bool is_cmp(BinOp op);

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
  enum class Kind : uint8_t {
    IntLit,     // int_val
    FloatLit,   // float_val
    BoolLit,    // int_val 0/1
    Var,        // name
    Binary,     // op, args[0..1]
    Neg,        // args[0]
    Ternary,    // args[0..2]
    Call,       // name, args (user function call)
    Convert,    // texpr(args[0]) — type constructor / conversion
    Construct,  // texpr(undef) — MMatrix construction
    Intrinsic,  // name in {one, zero, length, atan}, args / targ
    Index,      // args[0] = base, args[1..] = indices
    Transpose,  // args[0]
    MatrixLit,  // args row-major, lit_rows x lit_cols
  };
  Kind kind;
  SrcSpan span;
  int64_t int_val = 0;
  double float_val = 0;
  std::string name;
  BinOp op = BinOp::Add;
  std::vector<ExprPtr> args;
  std::optional<TypeExpr> texpr;  // Convert/Construct/Intrinsic(one/zero)
  int lit_rows = 0, lit_cols = 0;
  Type type;  // filled by type checking (Kind::None until then)
};

ExprPtr make_expr(Expr::Kind k, SrcSpan span);

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct LValue {
  // Either a plain variable (opt. type annotation) or an element target A[i]/A[i,j].
  std::string name;
  std::optional<TypeExpr> annot;
  std::vector<ExprPtr> indices;  // non-empty => element assignment
  SrcSpan span;
};

struct Stmt {
  enum class Kind : uint8_t { Assign, If, For, Return };
  Kind kind;
  SrcSpan span;
  // Assign (parallel assignment: all values evaluated before any binding)
  std::vector<LValue> targets;
  std::vector<ExprPtr> values;
  // If
  ExprPtr cond;
  std::vector<StmtPtr> then_body;
  std::vector<StmtPtr> else_body;  // elseif chains are nested Ifs in else_body
  // For
  std::string loop_var;
  ExprPtr range_lo, range_hi;
  std::vector<StmtPtr> for_body;
  // Return
  ExprPtr ret;  // may be null (void return)
};

struct Param {
  std::string name;
  TypeExpr texpr;
  SrcSpan span;
};

struct Function {
  std::string name;
  std::vector<Param> params;
  std::vector<std::string> where_params;
  std::vector<StmtPtr> body;
  SrcSpan span;
  Type ret_type;  // filled by type checking
};

struct Ast {
  std::vector<Function> functions;
  Function* find(const std::string& name);
};

// An instantiation binding: type name or integer constant.
struct Binding {
  bool is_type = false;
  ScalarType type{};
  int64_t value = 0;
};
using Instantiation = std::vector<std::pair<std::string, Binding>>;

struct SourceFile {
  std::string path;
  std::string text;
};

struct SourceProgram {
  std::vector<SourceFile> files;
  std::string entry;
  Instantiation instantiation;
};

}  // namespace hjl
