#include <cmath>
#include <map>
#include <optional>
#include <set>

#include "hjlc/frontend.hpp"

namespace hjl {

namespace {

struct Bindings {
  std::map<std::string, Binding> map;
  const Binding* find(const std::string& n) const {
    auto it = map.find(n);
    return it == map.end() ? nullptr : &it->second;
  }
};

bool builtin_scalar(const std::string& name, ScalarType& out) {
  if (name == "Bool") { out = ScalarType::boolean(); return true; }
  static const std::pair<const char*, ScalarType> table[] = {
      {"Int8", ScalarType::sint(8)},    {"Int16", ScalarType::sint(16)},
      {"Int32", ScalarType::sint(32)},  {"Int64", ScalarType::sint(64)},
      {"UInt8", ScalarType::uint_(8)},  {"UInt16", ScalarType::uint_(16)},
      {"UInt32", ScalarType::uint_(32)},{"UInt64", ScalarType::uint_(64)},
  };
  for (auto& [n, t] : table)
    if (name == n) { out = t; return true; }
  return false;
}

// Shared by monomorphization (call-site resolution) and the stability checker.
class FnChecker;

class Sema {
 public:
  Sema(Ast& ast, DiagList& diags) : ast_(ast), diags_(diags) {}

  bool monomorphize_entry(const std::string& entry, const Instantiation& inst);
  bool check_all(const std::string& entry);

  Ast& ast_;
  DiagList& diags_;
  std::vector<Function> out_;
  std::map<std::string, std::string> done_;        // mangled key -> emitted name
  std::vector<std::string> active_;                // instantiation stack (cycle check)
  std::map<std::string, Type> checked_;            // fn name -> return type

  std::string instantiate(const std::string& name, const Bindings& b, SrcSpan at,
                          bool is_entry);
  bool resolve_type_expr(TypeExpr& te, const Bindings& b,
                         const std::map<std::string, int64_t>& consts);
  friend class FnChecker;
};

std::string mangle(const std::string& name, const Function& fn, const Bindings& b) {
  if (fn.where_params.empty()) return name;
  std::string m = name;
  for (auto& p : fn.where_params) {
    const Binding* bd = b.find(p);
    m += "$";
    if (bd) m += bd->is_type ? scalar_name(bd->type) : std::to_string(bd->value);
  }
  return m;
}

bool const_eval(const Expr& e, const std::map<std::string, int64_t>& consts, int64_t& out) {
  switch (e.kind) {
    case Expr::Kind::IntLit:
      out = e.int_val;
      return true;
    case Expr::Kind::Var: {
      auto it = consts.find(e.name);
      if (it == consts.end()) return false;
      out = it->second;
      return true;
    }
    case Expr::Kind::Binary: {
      int64_t a, b;
      if (!const_eval(*e.args[0], consts, a) || !const_eval(*e.args[1], consts, b))
        return false;
      switch (e.op) {
        case BinOp::Add: out = a + b; return true;
        case BinOp::Sub: out = a - b; return true;
        case BinOp::Mul: out = a * b; return true;
        default: return false;
      }
    }
    case Expr::Kind::Neg: {
      int64_t a;
      if (!const_eval(*e.args[0], consts, a)) return false;
      out = -a;
      return true;
    }
    default:
      return false;
  }
}

bool Sema::resolve_type_expr(TypeExpr& te, const Bindings& b,
                             const std::map<std::string, int64_t>& consts) {
  auto arg_int = [&](const TypeExpr::Arg& a, int64_t& out) {
    if (a.is_int) { out = a.value; return true; }
    if (const Binding* bd = b.find(a.name)) {
      if (bd->is_type) return false;
      out = bd->value;
      return true;
    }
    auto it = consts.find(a.name);
    if (it != consts.end()) { out = it->second; return true; }
    return false;
  };
  auto arg_scalar = [&](const TypeExpr::Arg& a, ScalarType& out) {
    if (a.is_int) return false;
    if (builtin_scalar(a.name, out)) return true;
    if (const Binding* bd = b.find(a.name)) {
      if (!bd->is_type) return false;
      out = bd->type;
      return true;
    }
    return false;
  };

  switch (te.kind) {
    case TypeExpr::Kind::Named: {
      ScalarType st;
      if (builtin_scalar(te.name, st)) {
        te.resolved = Type::scalar_t(st);
        return true;
      }
      if (const Binding* bd = b.find(te.name)) {
        if (!bd->is_type) {
          diags_.error(te.span, "'" + te.name + "' is a size parameter, not a type");
          return false;
        }
        te.resolved = Type::scalar_t(bd->type);
        return true;
      }
      diags_.error(te.span, "unbound type parameter '" + te.name + "'");
      return false;
    }
    case TypeExpr::Kind::Fixed: {
      if (te.args.size() != 2) {
        diags_.error(te.span, "Fixed takes two parameters");
        return false;
      }
      ScalarType storage;
      int64_t frac;
      if (!arg_scalar(te.args[0], storage) || storage.kind != ScalarType::Kind::SInt) {
        diags_.error(te.span, "Fixed storage type must be a signed integer type");
        return false;
      }
      if (!arg_int(te.args[1], frac)) {
        diags_.error(te.span, "unbound fractional-bits parameter in Fixed");
        return false;
      }
      ScalarType fx = ScalarType::fixed(storage.width, (int)frac);
      if (!valid_scalar(fx)) {
        diags_.error(te.span, "invalid Fixed parameters (need 0 <= frac <= width)");
        return false;
      }
      te.resolved = Type::scalar_t(fx);
      return true;
    }
    case TypeExpr::Kind::Matrix: {
      if (te.args.size() != 3) {
        diags_.error(te.span, "MMatrix takes three parameters {rows, cols, elem}");
        return false;
      }
      int64_t r, c;
      ScalarType elem;
      if (!arg_int(te.args[0], r) || !arg_int(te.args[1], c)) {
        diags_.error(te.span, "unbound matrix dimension parameter");
        return false;
      }
      if (!arg_scalar(te.args[2], elem)) {
        diags_.error(te.span, "unbound matrix element type");
        return false;
      }
      if (r < 1 || c < 1) {
        diags_.error(te.span, "matrix dimensions must be >= 1");
        return false;
      }
      te.resolved = Type::matrix((int)r, (int)c, elem, /*row_major=*/false);
      return true;
    }
  }
  return false;
}

ExprPtr clone_expr(const Expr& e) {
  auto c = make_expr(e.kind, e.span);
  c->int_val = e.int_val;
  c->float_val = e.float_val;
  c->name = e.name;
  c->op = e.op;
  c->texpr = e.texpr;
  c->lit_rows = e.lit_rows;
  c->lit_cols = e.lit_cols;
  c->type = e.type;
  for (auto& a : e.args) c->args.push_back(clone_expr(*a));
  return c;
}

StmtPtr clone_stmt(const Stmt& s) {
  auto c = std::make_unique<Stmt>();
  c->kind = s.kind;
  c->span = s.span;
  for (auto& t : s.targets) {
    LValue lv;
    lv.name = t.name;
    lv.annot = t.annot;
    lv.span = t.span;
    for (auto& i : t.indices) lv.indices.push_back(clone_expr(*i));
    c->targets.push_back(std::move(lv));
  }
  for (auto& v : s.values) c->values.push_back(clone_expr(*v));
  if (s.cond) c->cond = clone_expr(*s.cond);
  for (auto& t : s.then_body) c->then_body.push_back(clone_stmt(*t));
  for (auto& t : s.else_body) c->else_body.push_back(clone_stmt(*t));
  c->loop_var = s.loop_var;
  if (s.range_lo) c->range_lo = clone_expr(*s.range_lo);
  if (s.range_hi) c->range_hi = clone_expr(*s.range_hi);
  for (auto& t : s.for_body) c->for_body.push_back(clone_stmt(*t));
  if (s.ret) c->ret = clone_expr(*s.ret);
  return c;
}

// Monomorphization rewriter for one function instance: substitutes bound type
// and size parameters, resolves type expressions, and resolves call targets
// (which recursively instantiates callees).
class InstanceRewriter {
 public:
  InstanceRewriter(Sema& sema, Function& fn, Bindings b)
      : sema_(sema), fn_(fn), bind_(std::move(b)) {
    for (auto& [k, v] : bind_.map)
      if (!v.is_type) consts_[k] = v.value;
  }

  bool run() {
    for (auto& p : fn_.params) {
      if (!sema_.resolve_type_expr(p.texpr, bind_, consts_)) return false;
      if (p.texpr.resolved) vars_[p.name] = *p.texpr.resolved;
    }
    if (!walk(fn_.body, /*toplevel=*/true)) return false;
    fn_.where_params.clear();
    return true;
  }

 private:
  Sema& sema_;
  Function& fn_;
  Bindings bind_;
  std::map<std::string, int64_t> consts_;
  std::map<std::string, Type> vars_;  // best-effort types for call resolution

  bool walk(std::vector<StmtPtr>& body, bool toplevel) {
    for (auto& s : body) {
      switch (s->kind) {
        case Stmt::Kind::Assign: {
          for (auto& v : s->values)
            if (!rewrite(v)) return false;
          for (size_t i = 0; i < s->targets.size(); i++) {
            auto& t = s->targets[i];
            for (auto& ix : t.indices)
              if (!rewrite(ix)) return false;
            if (t.annot && !sema_.resolve_type_expr(*t.annot, bind_, consts_)) return false;
            if (t.indices.empty()) {
              if (toplevel) {
                int64_t cv;
                if (const_eval(*s->values[i], consts_, cv)) consts_[t.name] = cv;
              }
              Type ty = infer(*s->values[i]);
              if (t.annot && t.annot->resolved) ty = *t.annot->resolved;
              if (ty.kind != Type::Kind::None) vars_[t.name] = ty;
            }
          }
          break;
        }
        case Stmt::Kind::If:
          if (!rewrite(s->cond)) return false;
          if (!walk(s->then_body, false)) return false;
          if (!walk(s->else_body, false)) return false;
          break;
        case Stmt::Kind::For: {
          if (!rewrite(s->range_lo) || !rewrite(s->range_hi)) return false;
          Type lt = infer(*s->range_lo);
          if (lt.kind == Type::Kind::None) lt = infer(*s->range_hi);
          if (lt.kind == Type::Kind::None) lt = Type::scalar_t(ScalarType::sint(32));
          vars_[s->loop_var] = lt;
          if (!walk(s->for_body, false)) return false;
          break;
        }
        case Stmt::Kind::Return:
          if (s->ret && !rewrite(s->ret)) return false;
          break;
      }
    }
    return true;
  }

  bool rewrite(ExprPtr& e) {
    // Substitute size parameters used as values.
    if (e->kind == Expr::Kind::Var) {
      if (const Binding* bd = bind_.find(e->name)) {
        if (!bd->is_type) {
          auto lit = make_expr(Expr::Kind::IntLit, e->span);
          lit->int_val = bd->value;
          e = std::move(lit);
          return true;
        }
        sema_.diags_.error(e->span, "type parameter '" + e->name + "' used as a value");
        return false;
      }
      return true;
    }
    // A call whose callee names a bound type parameter is a conversion: T(x).
    if (e->kind == Expr::Kind::Call) {
      if (const Binding* bd = bind_.find(e->name)) {
        if (bd->is_type && e->args.size() == 1) {
          auto cv = make_expr(Expr::Kind::Convert, e->span);
          TypeExpr te;
          te.kind = TypeExpr::Kind::Named;
          te.name = e->name;
          te.span = e->span;
          te.resolved = Type::scalar_t(bd->type);
          cv->texpr = std::move(te);
          cv->args.push_back(std::move(e->args[0]));
          e = std::move(cv);
          return rewrite(e->args[0]);
        }
      }
    }
    for (auto& a : e->args)
      if (!rewrite(a)) return false;
    if (e->texpr && !sema_.resolve_type_expr(*e->texpr, bind_, consts_)) return false;
    if (e->kind == Expr::Kind::Call) return resolve_call(*e);
    return true;
  }

  // Unify a callee parameter type expression against a concrete argument type.
  bool unify(const TypeExpr& pt, const Function& callee, const Type& arg, Bindings& out,
             SrcSpan at) {
    auto is_param = [&](const std::string& n) {
      for (auto& w : callee.where_params)
        if (w == n) return true;
      return false;
    };
    auto bind_type = [&](const std::string& n, ScalarType st) {
      auto it = out.map.find(n);
      if (it != out.map.end())
        return it->second.is_type && it->second.type == st;
      Binding b;
      b.is_type = true;
      b.type = st;
      out.map[n] = b;
      return true;
    };
    auto bind_int = [&](const std::string& n, int64_t v) {
      auto it = out.map.find(n);
      if (it != out.map.end()) return !it->second.is_type && it->second.value == v;
      Binding b;
      b.value = v;
      out.map[n] = b;
      return true;
    };
    auto match_scalar_arg = [&](const TypeExpr::Arg& a, ScalarType st) {
      if (a.is_int) return false;
      if (is_param(a.name)) return bind_type(a.name, st);
      ScalarType builtin;
      return builtin_scalar(a.name, builtin) && builtin == st;
    };
    auto match_int_arg = [&](const TypeExpr::Arg& a, int64_t v) {
      if (a.is_int) return a.value == v;
      if (is_param(a.name)) return bind_int(a.name, v);
      return false;
    };
    switch (pt.kind) {
      case TypeExpr::Kind::Named: {
        if (arg.kind != Type::Kind::Scalar) return false;
        if (is_param(pt.name)) return bind_type(pt.name, arg.scalar);
        ScalarType st;
        return builtin_scalar(pt.name, st) && st == arg.scalar;
      }
      case TypeExpr::Kind::Fixed: {
        if (arg.kind != Type::Kind::Scalar || arg.scalar.kind != ScalarType::Kind::Fixed)
          return false;
        return match_scalar_arg(pt.args[0], ScalarType::sint(arg.scalar.width)) &&
               match_int_arg(pt.args[1], arg.scalar.frac);
      }
      case TypeExpr::Kind::Matrix: {
        if (arg.kind != Type::Kind::Matrix) return false;
        return match_int_arg(pt.args[0], arg.rows) && match_int_arg(pt.args[1], arg.cols) &&
               match_scalar_arg(pt.args[2], arg.scalar);
      }
    }
    return false;
  }

  bool resolve_call(Expr& e) {
    Function* callee = sema_.ast_.find(e.name);
    if (!callee) {
      // Either already-instantiated (present in output) or unknown.
      for (auto& f : sema_.out_)
        if (f.name == e.name) return true;
      sema_.diags_.error(e.span, "call to unknown function '" + e.name + "'");
      return false;
    }
    Bindings cb;
    if (callee->params.size() != e.args.size()) {
      sema_.diags_.error(e.span, "call to '" + e.name + "' with " +
                                     std::to_string(e.args.size()) + " arguments, expected " +
                                     std::to_string(callee->params.size()));
      return false;
    }
    for (size_t i = 0; i < e.args.size(); i++) {
      Type at = infer(*e.args[i]);
      if (at.kind == Type::Kind::None) {
        sema_.diags_.error(e.args[i]->span,
                           "cannot infer argument type for call to '" + e.name + "'");
        return false;
      }
      if (!unify(callee->params[i].texpr, *callee, at, cb, e.span)) {
        sema_.diags_.error(e.span, "no matching concrete method for '" + e.name +
                                       "' (argument " + std::to_string(i + 1) + " has type " +
                                       type_name(at) + ")");
        return false;
      }
    }
    for (auto& w : callee->where_params) {
      if (!cb.find(w)) {
        sema_.diags_.error(e.span, "cannot infer type parameter '" + w + "' for call to '" +
                                       e.name + "'");
        return false;
      }
    }
    std::string inst = sema_.instantiate(e.name, cb, e.span, /*is_entry=*/false);
    if (inst.empty()) return false;
    e.name = inst;
    return true;
  }

  // Local best-effort inference, just strong enough to type call arguments.
  Type infer(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::IntLit: return Type::scalar_t(ScalarType::sint(32));
      case Expr::Kind::BoolLit: return Type::scalar_t(ScalarType::boolean());
      case Expr::Kind::FloatLit: return Type::real();
      case Expr::Kind::Var: {
        auto it = vars_.find(e.name);
        return it == vars_.end() ? Type::none() : it->second;
      }
      case Expr::Kind::Binary: {
        if (is_cmp(e.op)) return Type::scalar_t(ScalarType::boolean());
        Type a = infer(*e.args[0]);
        if (e.op == BinOp::Mul && a.kind == Type::Kind::Matrix) {
          Type b = infer(*e.args[1]);
          if (b.kind == Type::Kind::Matrix)
            return Type::matrix(a.rows, b.cols, a.scalar, false);
        }
        if (a.kind != Type::Kind::None && !(e.args[0]->kind == Expr::Kind::IntLit)) return a;
        Type b = infer(*e.args[1]);
        return b.kind != Type::Kind::None ? b : a;
      }
      case Expr::Kind::Neg: return infer(*e.args[0]);
      case Expr::Kind::Ternary: {
        Type a = infer(*e.args[1]);
        return a.kind != Type::Kind::None ? a : infer(*e.args[2]);
      }
      case Expr::Kind::Convert:
      case Expr::Kind::Construct:
        return e.texpr && e.texpr->resolved ? *e.texpr->resolved : Type::none();
      case Expr::Kind::Intrinsic:
        if (e.name == "one" || e.name == "zero")
          return e.texpr && e.texpr->resolved ? *e.texpr->resolved : Type::none();
        if (e.name == "length") return Type::scalar_t(ScalarType::sint(32));
        return Type::real();
      case Expr::Kind::Index: {
        Type b = infer(*e.args[0]);
        return b.kind == Type::Kind::Matrix ? Type::scalar_t(b.scalar) : Type::none();
      }
      case Expr::Kind::Transpose: {
        Type b = infer(*e.args[0]);
        return b.kind == Type::Kind::Matrix
                   ? Type::matrix(b.cols, b.rows, b.scalar, b.row_major)
                   : Type::none();
      }
      case Expr::Kind::MatrixLit: {
        Type el;
        for (auto& a : e.args) {
          el = infer(*a);
          if (el.kind == Type::Kind::Scalar) break;
        }
        if (el.kind != Type::Kind::Scalar) el = Type::scalar_t(ScalarType::sint(32));
        return Type::matrix(e.lit_rows, e.lit_cols, el.scalar, false);
      }
      case Expr::Kind::Call: {
        for (auto& f : sema_.out_)
          if (f.name == e.name && f.ret_type.kind != Type::Kind::None) return f.ret_type;
        return Type::none();
      }
    }
    return Type::none();
  }
};

std::string Sema::instantiate(const std::string& name, const Bindings& b, SrcSpan at,
                              bool is_entry) {
  Function* proto = ast_.find(name);
  if (!proto) {
    diags_.error(at, "unknown function '" + name + "'");
    return "";
  }
  std::string key = mangle(name, *proto, b);
  auto dit = done_.find(key);
  if (dit != done_.end()) return dit->second;
  for (auto& a : active_) {
    if (a == key) {
      std::string cycle;
      bool hit = false;
      for (auto& s : active_) {
        if (s == key) hit = true;
        if (hit) cycle += s + " -> ";
      }
      cycle += key;
      diags_.error(at, "recursion is not supported: " + cycle);
      return "";
    }
  }
  active_.push_back(key);

  Function inst;
  inst.name = is_entry ? name : key;
  inst.span = proto->span;
  inst.where_params = proto->where_params;
  for (auto& p : proto->params) inst.params.push_back({p.name, p.texpr, p.span});
  for (auto& s : proto->body) inst.body.push_back(clone_stmt(*s));

  InstanceRewriter rw(*this, inst, b);
  bool ok = rw.run();
  active_.pop_back();
  if (!ok) return "";
  done_[key] = inst.name;
  out_.push_back(std::move(inst));
  return done_[key];
}

bool Sema::monomorphize_entry(const std::string& entry, const Instantiation& inst) {
  Function* fn = ast_.find(entry);
  if (!fn) {
    diags_.error("entry function '" + entry + "' is not defined");
    return false;
  }
  Bindings b;
  for (auto& [k, v] : inst) b.map[k] = v;
  for (auto& w : fn->where_params) {
    if (!b.find(w)) {
      diags_.error(fn->span, "unbound type parameter '" + w + "' for entry '" + entry +
                                 "' (add it to the instantiation params)");
      return false;
    }
  }
  if (instantiate(entry, b, fn->span, /*is_entry=*/true).empty()) return false;
  // Entry first, then callees in instantiation order.
  std::vector<Function> ordered;
  for (auto& f : out_)
    if (f.name == entry) ordered.push_back(std::move(f));
  for (auto& f : out_)
    if (!f.name.empty() && f.name != entry) ordered.push_back(std::move(f));
  ast_.functions = std::move(ordered);
  return true;
}

// ---------------------------------------------------------------------------
// Type stability checking
// ---------------------------------------------------------------------------

struct VarInfo {
  Type type;
  bool definite = true;
  SrcSpan def_span;
};
using Env = std::map<std::string, VarInfo>;

class FnChecker {
 public:
  FnChecker(Sema& sema, Ast& ast, DiagList& diags) : sema_(sema), ast_(ast), diags_(diags) {}

  bool check_function(Function& fn) {
    auto it = sema_.checked_.find(fn.name);
    if (it != sema_.checked_.end()) return true;
    Env env;
    for (auto& p : fn.params) {
      if (!p.texpr.resolved) {
        diags_.error(p.span, "parameter '" + p.name + "' has unresolved type (monomorphize first)");
        return false;
      }
      env[p.name] = {*p.texpr.resolved, true, p.span};
    }
    fn.ret_type = Type::none();
    for (size_t i = 0; i < fn.body.size(); i++) {
      bool last = i + 1 == fn.body.size();
      Stmt& s = *fn.body[i];
      if (s.kind == Stmt::Kind::Return && !last) {
        diags_.error(s.span, "'return' is only supported as the final statement");
        return false;
      }
      if (!check_stmt(s, env, fn, /*allow_return=*/last)) return false;
    }
    sema_.checked_[fn.name] = fn.ret_type;
    return true;
  }

 private:
  Sema& sema_;
  Ast& ast_;
  DiagList& diags_;

  bool check_stmt(Stmt& s, Env& env, Function& fn, bool allow_return) {
    switch (s.kind) {
      case Stmt::Kind::Return: {
        if (!allow_return) {
          diags_.error(s.span, "'return' is only supported as the final statement");
          return false;
        }
        if (s.ret) {
          Type t = infer(*s.ret, env, std::nullopt);
          if (t.kind == Type::Kind::None) return false;
          if (t.kind == Type::Kind::Real) {
            diags_.error(s.ret->span, "cannot return a compile-time constant without a type");
            return false;
          }
          fn.ret_type = t;
        }
        return true;
      }
      case Stmt::Kind::Assign:
        return check_assign(s, env);
      case Stmt::Kind::If: {
        Type ct = infer(*s.cond, env, Type::scalar_t(ScalarType::boolean()));
        if (ct.kind == Type::Kind::None) return false;
        if (!(ct.is_scalar() && ct.scalar.kind == ScalarType::Kind::Bool)) {
          diags_.error(s.cond->span, "if condition must be Bool, got " + type_name(ct));
          return false;
        }
        Env then_env = env, else_env = env;
        for (auto& st : s.then_body)
          if (!check_stmt(*st, then_env, fn, false)) return false;
        for (auto& st : s.else_body)
          if (!check_stmt(*st, else_env, fn, false)) return false;
        return join(env, then_env, else_env, s.span);
      }
      case Stmt::Kind::For: {
        Type lo = infer_pair(s.range_lo, s.range_hi, env);
        if (lo.kind == Type::Kind::None) return false;
        if (!(lo.is_scalar() && lo.scalar.kind == ScalarType::Kind::SInt)) {
          diags_.error(s.range_lo->span,
                       "loop range bounds must be signed integers, got " + type_name(lo));
          return false;
        }
        Env body_env = env;
        bool shadowed = env.count(s.loop_var) > 0;
        VarInfo shadow_save;
        if (shadowed) shadow_save = env[s.loop_var];
        body_env[s.loop_var] = {lo, true, s.span};
        loop_vars_.push_back(s.loop_var);
        for (auto& st : s.for_body)
          if (!check_stmt(*st, body_env, fn, false)) return false;
        loop_vars_.pop_back();
        body_env.erase(s.loop_var);
        if (shadowed) body_env[s.loop_var] = shadow_save;
        // Body may run zero times: join with the pre-loop environment.
        return join(env, env, body_env, s.span);
      }
    }
    return false;
  }

  bool join(Env& out, const Env& a, const Env& b, SrcSpan at) {
    Env result;
    std::set<std::string> names;
    for (auto& [k, v] : a) names.insert(k);
    for (auto& [k, v] : b) names.insert(k);
    for (auto& n : names) {
      auto ia = a.find(n), ib = b.find(n);
      if (ia != a.end() && ib != b.end()) {
        if (ia->second.type != ib->second.type) {
          diags_.error(at, "variable '" + n + "' is not type-stable: " +
                               type_name(ia->second.type) + " on one path, " +
                               type_name(ib->second.type) + " on another");
          return false;
        }
        result[n] = {ia->second.type, ia->second.definite && ib->second.definite,
                     ia->second.def_span};
      } else {
        const VarInfo& v = ia != a.end() ? ia->second : ib->second;
        result[n] = {v.type, false, v.def_span};
      }
    }
    out = std::move(result);
    return true;
  }

  bool check_assign(Stmt& s, Env& env) {
    // Parallel assignment: all values inferred before any binding commits.
    std::vector<Type> tys(s.values.size());
    for (size_t i = 0; i < s.values.size(); i++) {
      auto& t = s.targets[i];
      std::optional<Type> want;
      if (t.annot && t.annot->resolved) {
        want = *t.annot->resolved;
      } else if (t.indices.empty()) {
        auto it = env.find(t.name);
        if (it != env.end()) want = it->second.type;
      } else {
        auto it = env.find(t.name);
        if (it != env.end() && it->second.type.kind == Type::Kind::Matrix)
          want = Type::scalar_t(it->second.type.scalar);
      }
      tys[i] = infer(*s.values[i], env, want);
      if (tys[i].kind == Type::Kind::None) return false;
      if (tys[i].kind == Type::Kind::Real) {
        diags_.error(s.values[i]->span,
                     "compile-time constant must be converted to a concrete type "
                     "(wrap it in a type constructor)");
        return false;
      }
    }
    for (size_t i = 0; i < s.targets.size(); i++) {
      auto& t = s.targets[i];
      for (auto& lv : loop_vars_) {
        if (t.name == lv && t.indices.empty()) {
          diags_.error(t.span, "cannot assign to loop variable '" + t.name + "'");
          return false;
        }
      }
      if (!t.indices.empty()) {
        auto it = env.find(t.name);
        if (it == env.end()) {
          diags_.error(t.span, "variable '" + t.name + "' used before definition");
          return false;
        }
        if (!it->second.definite) {
          diags_.error(t.span, "variable '" + t.name +
                                   "' may be used before definition (assigned on only "
                                   "some control-flow paths)");
          return false;
        }
        Type bt = it->second.type;
        if (bt.kind != Type::Kind::Matrix) {
          diags_.error(t.span, "cannot index-assign non-matrix '" + t.name + "'");
          return false;
        }
        if (!check_indices(t.indices, bt, env, t.span)) return false;
        if (!(tys[i].is_scalar() && tys[i].scalar == bt.scalar)) {
          diags_.error(s.values[i]->span, "element assignment to '" + t.name + "' of type " +
                                              scalar_name(bt.scalar) + " from incompatible " +
                                              type_name(tys[i]));
          return false;
        }
        continue;
      }
      if (t.annot && t.annot->resolved && *t.annot->resolved != tys[i]) {
        diags_.error(t.span, "annotated type " + type_name(*t.annot->resolved) +
                                 " does not match value type " + type_name(tys[i]));
        return false;
      }
      auto it = env.find(t.name);
      if (it != env.end()) {
        if (it->second.type != tys[i]) {
          diags_.error(t.span, "variable '" + t.name + "' is not type-stable: previously " +
                                   type_name(it->second.type) + ", reassigned as " +
                                   type_name(tys[i]));
          return false;
        }
        it->second.definite = true;
      } else {
        env[t.name] = {tys[i], true, t.span};
      }
    }
    return true;
  }

  bool check_indices(std::vector<ExprPtr>& idx, const Type& mat, Env& env, SrcSpan at) {
    if (idx.size() == 1) {
      if (mat.rows != 1 && mat.cols != 1) {
        diags_.error(at, "linear indexing is only supported on vectors (matrix is " +
                             std::to_string(mat.rows) + "x" + std::to_string(mat.cols) + ")");
        return false;
      }
    } else if (idx.size() != 2) {
      diags_.error(at, "matrices take one or two indices");
      return false;
    }
    for (auto& i : idx) {
      Type it = infer(*i, env, Type::scalar_t(ScalarType::sint(32)));
      if (it.kind == Type::Kind::None) return false;
      if (!(it.is_scalar() && it.scalar.kind == ScalarType::Kind::SInt)) {
        diags_.error(i->span, "index must be a signed integer, got " + type_name(it));
        return false;
      }
    }
    return true;
  }

  // Infers two range bounds, letting a literal adopt the other side's type.
  Type infer_pair(ExprPtr& a, ExprPtr& b, Env& env) {
    bool alit = a->kind == Expr::Kind::IntLit;
    bool blit = b->kind == Expr::Kind::IntLit;
    Type ta, tb;
    if (alit && !blit) {
      tb = infer(*b, env, std::nullopt);
      if (tb.kind == Type::Kind::None) return tb;
      ta = infer(*a, env, tb);
    } else {
      ta = infer(*a, env, std::nullopt);
      if (ta.kind == Type::Kind::None) return ta;
      tb = infer(*b, env, ta);
    }
    if (tb.kind == Type::Kind::None) return tb;
    if (ta != tb) {
      diags_.error(a->span, "loop bounds have different types: " + type_name(ta) + " and " +
                                type_name(tb));
      return Type::none();
    }
    return ta;
  }

  Type fail(const Expr& e, const std::string& msg) {
    diags_.error(e.span, msg);
    return Type::none();
  }

  Type set(Expr& e, Type t) {
    e.type = t;
    return t;
  }

  Type infer(Expr& e, Env& env, std::optional<Type> want);

  std::vector<std::string> loop_vars_;
};

Type FnChecker::infer(Expr& e, Env& env, std::optional<Type> want) {
  switch (e.kind) {
    case Expr::Kind::IntLit: {
      Type t = Type::scalar_t(ScalarType::sint(32));
      if (want && want->is_scalar() && want->scalar.kind != ScalarType::Kind::Bool)
        t = *want;
      return set(e, t);
    }
    case Expr::Kind::FloatLit:
      return set(e, Type::real());
    case Expr::Kind::BoolLit:
      return set(e, Type::scalar_t(ScalarType::boolean()));
    case Expr::Kind::Var: {
      auto it = env.find(e.name);
      if (it == env.end())
        return fail(e, "variable '" + e.name + "' used before definition");
      if (!it->second.definite)
        return fail(e, "variable '" + e.name +
                           "' may be used before definition (assigned on only some "
                           "control-flow paths)");
      return set(e, it->second.type);
    }
    case Expr::Kind::Binary: {
      Expr& l = *e.args[0];
      Expr& r = *e.args[1];
      if (e.op == BinOp::Shl || e.op == BinOp::Shr) {
        Type lt = infer(l, env, want);
        if (lt.kind == Type::Kind::None) return lt;
        Type rt = infer(r, env, Type::scalar_t(ScalarType::sint(32)));
        if (rt.kind == Type::Kind::None) return rt;
        if (!lt.is_scalar() || lt.scalar.kind == ScalarType::Kind::Bool)
          return fail(e, "shift operand must be an integer or fixed-point scalar");
        if (!(rt.is_scalar() && rt.scalar.kind == ScalarType::Kind::SInt))
          return fail(r, "shift amount must be a signed integer, got " + type_name(rt));
        return set(e, lt);
      }
      // Literal operands adopt the other side's type.
      Type lt, rt;
      bool llit = l.kind == Expr::Kind::IntLit;
      bool rlit = r.kind == Expr::Kind::IntLit;
      if (llit && !rlit) {
        rt = infer(r, env, is_cmp(e.op) ? std::nullopt : want);
        if (rt.kind == Type::Kind::None) return rt;
        lt = infer(l, env, rt);
      } else {
        lt = infer(l, env, is_cmp(e.op) ? std::nullopt : want);
        if (lt.kind == Type::Kind::None) return lt;
        rt = infer(r, env, lt);
      }
      if (rt.kind == Type::Kind::None) return rt;
      if (lt.kind == Type::Kind::Matrix && rt.kind == Type::Kind::Matrix &&
          e.op == BinOp::Mul) {
        if (lt.cols != rt.rows)
          return fail(e, "matrix multiply dimension mismatch: " + type_name(lt) + " * " +
                             type_name(rt));
        if (!(lt.scalar == rt.scalar))
          return fail(e, "matrix multiply element types differ");
        return set(e, Type::matrix(lt.rows, rt.cols, lt.scalar, lt.row_major));
      }
      if (lt != rt)
        return fail(e, "operands have different types: " + type_name(lt) + " and " +
                           type_name(rt) + " (insert an explicit conversion)");
      if (is_cmp(e.op)) {
        if (!lt.is_scalar()) return fail(e, "comparison needs scalar operands");
        if (lt.scalar.kind == ScalarType::Kind::Bool && e.op != BinOp::Eq &&
            e.op != BinOp::Ne)
          return fail(e, "Bool supports only == and !=");
        return set(e, Type::scalar_t(ScalarType::boolean()));
      }
      if (!lt.is_scalar() || lt.scalar.kind == ScalarType::Kind::Bool)
        return fail(e, "arithmetic needs integer or fixed-point operands, got " +
                           type_name(lt));
      return set(e, lt);
    }
    case Expr::Kind::Neg: {
      Type t = infer(*e.args[0], env, want);
      if (t.kind == Type::Kind::None) return t;
      if (!t.is_scalar() || !t.scalar.is_signed())
        return fail(e, "unary minus needs a signed operand, got " + type_name(t));
      return set(e, t);
    }
    case Expr::Kind::Ternary: {
      Type ct = infer(*e.args[0], env, Type::scalar_t(ScalarType::boolean()));
      if (ct.kind == Type::Kind::None) return ct;
      if (!(ct.is_scalar() && ct.scalar.kind == ScalarType::Kind::Bool))
        return fail(*e.args[0], "conditional test must be Bool, got " + type_name(ct));
      Expr& a = *e.args[1];
      Expr& b = *e.args[2];
      Type ta, tb;
      if (a.kind == Expr::Kind::IntLit && b.kind != Expr::Kind::IntLit) {
        tb = infer(b, env, want);
        if (tb.kind == Type::Kind::None) return tb;
        ta = infer(a, env, tb);
      } else {
        ta = infer(a, env, want);
        if (ta.kind == Type::Kind::None) return ta;
        tb = infer(b, env, ta);
      }
      if (tb.kind == Type::Kind::None) return tb;
      if (ta != tb)
        return fail(e, "conditional arms have different types: " + type_name(ta) + " and " +
                           type_name(tb));
      return set(e, ta);
    }
    case Expr::Kind::Call: {
      Function* callee = ast_.find(e.name);
      if (!callee) return fail(e, "call to unknown function '" + e.name + "'");
      if (!callee->where_params.empty())
        return fail(e, "call to '" + e.name + "' was not monomorphized");
      if (!check_function(*callee)) return Type::none();
      if (callee->params.size() != e.args.size())
        return fail(e, "call arity mismatch for '" + e.name + "'");
      for (size_t i = 0; i < e.args.size(); i++) {
        Type pt = *callee->params[i].texpr.resolved;
        Type at = infer(*e.args[i], env, pt);
        if (at.kind == Type::Kind::None) return at;
        if (at != pt)
          return fail(*e.args[i], "argument " + std::to_string(i + 1) + " of '" + e.name +
                                      "' has type " + type_name(at) + ", expected " +
                                      type_name(pt));
      }
      if (callee->ret_type.kind == Type::Kind::None)
        return fail(e, "function '" + e.name + "' returns no value");
      return set(e, callee->ret_type);
    }
    case Expr::Kind::Convert: {
      if (!e.texpr || !e.texpr->resolved)
        return fail(e, "unresolved conversion target type");
      Type to = *e.texpr->resolved;
      if (!to.is_scalar() || to.scalar.kind == ScalarType::Kind::Bool)
        return fail(e, "conversion target must be a numeric scalar type");
      Type from = infer(*e.args[0], env, std::nullopt);
      if (from.kind == Type::Kind::None) return from;
      if (!(from.is_scalar() || from.kind == Type::Kind::Real))
        return fail(e, "cannot convert " + type_name(from) + " to " + type_name(to));
      if (from.is_scalar() && from.scalar.kind == ScalarType::Kind::Bool)
        return fail(e, "cannot convert Bool to " + type_name(to));
      return set(e, to);
    }
    case Expr::Kind::Construct: {
      if (!e.texpr || !e.texpr->resolved || e.texpr->resolved->kind != Type::Kind::Matrix)
        return fail(e, "undef construction needs an MMatrix type");
      return set(e, *e.texpr->resolved);
    }
    case Expr::Kind::Intrinsic: {
      if (e.name == "one" || e.name == "zero") {
        if (!e.texpr || !e.texpr->resolved)
          return fail(e, "unresolved type argument for " + e.name + "()");
        Type t = *e.texpr->resolved;
        if (!t.is_scalar() || t.scalar.kind == ScalarType::Kind::Bool)
          return fail(e, e.name + "() needs a numeric scalar type");
        return set(e, t);
      }
      if (e.name == "length") {
        Type bt = infer(*e.args[0], env, std::nullopt);
        if (bt.kind == Type::Kind::None) return bt;
        if (bt.kind != Type::Kind::Matrix)
          return fail(e, "length() needs a matrix argument");
        e.int_val = (int64_t)bt.rows * bt.cols;
        return set(e, Type::scalar_t(ScalarType::sint(32)));
      }
      if (e.name == "atan") {
        Expr& a = *e.args[0];
        if (a.kind != Expr::Kind::IntLit && a.kind != Expr::Kind::FloatLit)
          return fail(e, "atan() is only supported on compile-time constants");
        double v = a.kind == Expr::Kind::IntLit ? (double)a.int_val : a.float_val;
        e.float_val = std::atan(v);
        a.type = Type::real();
        return set(e, Type::real());
      }
      return fail(e, "unknown intrinsic '" + e.name + "'");
    }
    case Expr::Kind::Index: {
      Type bt = infer(*e.args[0], env, std::nullopt);
      if (bt.kind == Type::Kind::None) return bt;
      if (bt.kind != Type::Kind::Matrix)
        return fail(e, "cannot index " + type_name(bt));
      std::vector<ExprPtr> idx;
      for (size_t i = 1; i < e.args.size(); i++) idx.push_back(std::move(e.args[i]));
      bool ok = check_indices(idx, bt, env, e.span);
      for (size_t i = 1; i < e.args.size(); i++) e.args[i] = std::move(idx[i - 1]);
      if (!ok) return Type::none();
      return set(e, Type::scalar_t(bt.scalar));
    }
    case Expr::Kind::Transpose: {
      Type bt = infer(*e.args[0], env, std::nullopt);
      if (bt.kind == Type::Kind::None) return bt;
      if (bt.kind != Type::Kind::Matrix)
        return fail(e, "transpose needs a matrix, got " + type_name(bt));
      return set(e, Type::matrix(bt.cols, bt.rows, bt.scalar, bt.row_major));
    }
    case Expr::Kind::MatrixLit: {
      ScalarType elem{};
      bool have = false;
      // First pass: find a non-literal element to anchor the element type.
      for (auto& a : e.args) {
        if (a->kind != Expr::Kind::IntLit && a->kind != Expr::Kind::FloatLit) {
          Type t = infer(*a, env, std::nullopt);
          if (t.kind == Type::Kind::None) return t;
          if (!t.is_scalar())
            return fail(*a, "matrix elements must be scalars, got " + type_name(t));
          elem = t.scalar;
          have = true;
          break;
        }
      }
      if (!have) elem = ScalarType::sint(32);
      for (auto& a : e.args) {
        if (a->type.kind != Type::Kind::None && a->type.is_scalar()) {
          if (!(a->type.scalar == elem))
            return fail(*a, "matrix element type mismatch");
          continue;
        }
        Type t = infer(*a, env, Type::scalar_t(elem));
        if (t.kind == Type::Kind::None) return t;
        if (!(t.is_scalar() && t.scalar == elem))
          return fail(*a, "matrix element type mismatch: " + type_name(t) + " vs " +
                              scalar_name(elem));
      }
      return set(e, Type::matrix(e.lit_rows, e.lit_cols, elem, /*row_major=*/false));
    }
  }
  return Type::none();
}

bool Sema::check_all(const std::string& entry) {
  FnChecker checker(*this, ast_, diags_);
  Function* fn = ast_.find(entry);
  if (!fn) {
    diags_.error("entry function '" + entry + "' is not defined");
    return false;
  }
  if (!checker.check_function(*fn)) return false;
  for (auto& f : ast_.functions)
    if (!checker.check_function(f)) return false;
  return true;
}

}  // namespace

bool monomorphize(Ast& ast, const std::string& entry, const Instantiation& inst,
                  DiagList& diags) {
  diags.set_stage("frontend");
  Sema sema(ast, diags);
  return sema.monomorphize_entry(entry, inst);
}

bool check_type_stability(Ast& ast, const std::string& entry, DiagList& diags) {
  diags.set_stage("frontend");
  Sema sema(ast, diags);
  return sema.check_all(entry);
}

}  // namespace hjl
