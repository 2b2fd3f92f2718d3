#include <map>
#include <set>

#include "hjlc/build.hpp"

namespace hjl {

using namespace ir;

namespace {

class FnBuilder {
 public:
  FnBuilder(const Ast& ast, const Function& src, DiagList& diags)
      : ast_(ast), src_(src), diags_(diags) {}

  bool run(IrFunction& out) {
    fn_ = &out;
    fn_->name = src_.name;
    fn_->ret = src_.ret_type;
    fn_->body.blocks.push_back({});
    block_stack_.push_back(&fn_->body.blocks[0]);
    for (auto& p : src_.params) {
      ValueId v = fn_->new_value(*p.texpr.resolved, p.name);
      fn_->params.push_back(v);
      fn_->body.blocks[0].args.push_back(v);
      slots_[p.name] = v;
      params_.insert(p.name);
    }
    for (auto& s : src_.body)
      if (!stmt(*s)) return false;
    if (src_.body.empty() || src_.body.back()->kind != Stmt::Kind::Return) {
      Op ret;
      ret.kind = OpKind::FuncReturn;
      emit(std::move(ret));
    }
    return true;
  }

 private:
  const Ast& ast_;
  const Function& src_;
  DiagList& diags_;
  IrFunction* fn_ = nullptr;
  std::map<std::string, ValueId> slots_;
  std::set<std::string> params_;
  std::vector<Block*> block_stack_;

  Block& cur() { return *block_stack_.back(); }
  void emit(Op op) { cur().ops.push_back(std::move(op)); }

  bool internal(SrcSpan sp, const std::string& what) {
    diags_.error(sp, "internal: no translation for " + what);
    return false;
  }

  ValueId emit_const(Type t, int64_t semantic, SrcSpan sp, ValueId dst = kNoValue) {
    Op op;
    op.kind = OpKind::ArithConst;
    op.span = sp;
    int64_t raw = semantic;
    if (t.scalar.kind == ScalarType::Kind::Fixed)
      raw = eval_shl(t.scalar, semantic, t.scalar.frac);
    else
      raw = wrap_to(t.scalar, semantic);
    op.attrs.ival = raw;
    ValueId res = dst != kNoValue ? dst : fn_->new_value(t);
    op.results.push_back(res);
    emit(std::move(op));
    return res;
  }

  // Translates an expression; when dst is given, the final op writes it
  // (pre-SSA slot assignment).
  ValueId expr(const Expr& e, ValueId dst = kNoValue) {
    auto fresh = [&](Type t) { return dst != kNoValue ? dst : fn_->new_value(t); };
    switch (e.kind) {
      case Expr::Kind::IntLit:
      case Expr::Kind::BoolLit:
        return emit_const(e.type, e.int_val, e.span, dst);
      case Expr::Kind::FloatLit:
        internal(e.span, "raw real literal");
        return kNoValue;
      case Expr::Kind::Var: {
        auto it = slots_.find(e.name);
        if (it == slots_.end()) {
          internal(e.span, "unknown variable " + e.name);
          return kNoValue;
        }
        if (dst == kNoValue) return it->second;
        // Copy into destination slot (same-type cast).
        Op op;
        op.kind = OpKind::ArithCast;
        op.span = e.span;
        op.operands.push_back(it->second);
        op.results.push_back(dst);
        emit(std::move(op));
        return dst;
      }
      case Expr::Kind::Binary: {
        if (e.type.is_matrix() && e.op == BinOp::Mul) {
          ValueId a = expr(*e.args[0]);
          ValueId b = expr(*e.args[1]);
          if (a == kNoValue || b == kNoValue) return kNoValue;
          Op op;
          op.kind = OpKind::TensorMatmul;
          op.span = e.span;
          op.operands = {a, b};
          ValueId res = fresh(e.type);
          op.results.push_back(res);
          emit(std::move(op));
          return res;
        }
        ValueId a = expr(*e.args[0]);
        ValueId b = expr(*e.args[1]);
        if (a == kNoValue || b == kNoValue) return kNoValue;
        Op op;
        op.span = e.span;
        op.operands = {a, b};
        switch (e.op) {
          case BinOp::Add: op.kind = OpKind::ArithAdd; break;
          case BinOp::Sub: op.kind = OpKind::ArithSub; break;
          case BinOp::Mul: op.kind = OpKind::ArithMul; break;
          case BinOp::Shl: op.kind = OpKind::ArithShl; break;
          case BinOp::Shr: op.kind = OpKind::ArithShr; break;
          default: {
            op.kind = OpKind::ArithCmp;
            switch (e.op) {
              case BinOp::Lt: op.attrs.pred = CmpPred::Lt; break;
              case BinOp::Gt: op.attrs.pred = CmpPred::Gt; break;
              case BinOp::Le: op.attrs.pred = CmpPred::Le; break;
              case BinOp::Ge: op.attrs.pred = CmpPred::Ge; break;
              case BinOp::Eq: op.attrs.pred = CmpPred::Eq; break;
              case BinOp::Ne: op.attrs.pred = CmpPred::Ne; break;
              default: break;
            }
            break;
          }
        }
        ValueId res = fresh(e.type);
        op.results.push_back(res);
        emit(std::move(op));
        return res;
      }
      case Expr::Kind::Neg: {
        ValueId zero = emit_const(e.type, 0, e.span);
        ValueId a = expr(*e.args[0]);
        if (a == kNoValue) return kNoValue;
        Op op;
        op.kind = OpKind::ArithSub;
        op.span = e.span;
        op.operands = {zero, a};
        ValueId res = fresh(e.type);
        op.results.push_back(res);
        emit(std::move(op));
        return res;
      }
      case Expr::Kind::Ternary: {
        ValueId c = expr(*e.args[0]);
        ValueId a = expr(*e.args[1]);
        ValueId b = expr(*e.args[2]);
        if (c == kNoValue || a == kNoValue || b == kNoValue) return kNoValue;
        Op op;
        op.kind = OpKind::ArithSelect;
        op.span = e.span;
        op.operands = {c, a, b};
        ValueId res = fresh(e.type);
        op.results.push_back(res);
        emit(std::move(op));
        return res;
      }
      case Expr::Kind::Convert: {
        const Expr& arg = *e.args[0];
        // Compile-time reals fold to constants; math intrinsics stay pending
        // until map_math_ops.
        if (arg.type.kind == Type::Kind::Real) {
          Op op;
          op.kind = OpKind::ArithConst;
          op.span = e.span;
          if (arg.kind == Expr::Kind::FloatLit) {
            op.attrs.ival = quantize_real(e.type.scalar, arg.float_val);
          } else if (arg.kind == Expr::Kind::Intrinsic && arg.name == "atan") {
            const Expr& ma = *arg.args[0];
            op.attrs.pending_math = true;
            op.attrs.math_fn = "atan";
            op.attrs.math_arg = ma.kind == Expr::Kind::IntLit ? (double)ma.int_val
                                                              : ma.float_val;
          } else {
            internal(e.span, "real-valued expression");
            return kNoValue;
          }
          ValueId res = fresh(e.type);
          op.results.push_back(res);
          emit(std::move(op));
          return res;
        }
        ValueId a = expr(arg);
        if (a == kNoValue) return kNoValue;
        Op op;
        bool fixed = arg.type.scalar.kind == ScalarType::Kind::Fixed ||
                     e.type.scalar.kind == ScalarType::Kind::Fixed;
        op.kind = fixed ? OpKind::ArithFixedRescale : OpKind::ArithCast;
        if (arg.type == e.type) op.kind = OpKind::ArithCast;  // plain copy
        op.span = e.span;
        op.operands = {a};
        ValueId res = fresh(e.type);
        op.results.push_back(res);
        emit(std::move(op));
        return res;
      }
      case Expr::Kind::Construct: {
        Op op;
        op.kind = OpKind::TensorEmpty;
        op.span = e.span;
        ValueId res = fresh(e.type);
        op.results.push_back(res);
        emit(std::move(op));
        return res;
      }
      case Expr::Kind::Intrinsic: {
        if (e.name == "one") return emit_const(e.type, 1, e.span, dst);
        if (e.name == "zero") return emit_const(e.type, 0, e.span, dst);
        if (e.name == "length") return emit_const(e.type, e.int_val, e.span, dst);
        internal(e.span, "intrinsic " + e.name);
        return kNoValue;
      }
      case Expr::Kind::Index: {
        ValueId base = expr(*e.args[0]);
        if (base == kNoValue) return kNoValue;
        Op op;
        op.kind = OpKind::TensorExtract;
        op.span = e.span;
        op.operands.push_back(base);
        for (size_t i = 1; i < e.args.size(); i++) {
          ValueId idx = expr(*e.args[i]);
          if (idx == kNoValue) return kNoValue;
          op.operands.push_back(idx);
        }
        ValueId res = fresh(e.type);
        op.results.push_back(res);
        emit(std::move(op));
        return res;
      }
      case Expr::Kind::Transpose: {
        ValueId a = expr(*e.args[0]);
        if (a == kNoValue) return kNoValue;
        Op op;
        op.kind = OpKind::TensorTranspose;
        op.span = e.span;
        op.operands = {a};
        ValueId res = fresh(e.type);
        op.results.push_back(res);
        emit(std::move(op));
        return res;
      }
      case Expr::Kind::MatrixLit: {
        Op op;
        op.kind = OpKind::TensorFromElements;
        op.span = e.span;
        // Surface layout is column-major: operands column by column.
        std::vector<ValueId> elems(e.args.size(), kNoValue);
        for (size_t i = 0; i < e.args.size(); i++) {
          elems[i] = expr(*e.args[i]);  // row-major AST order
          if (elems[i] == kNoValue) return kNoValue;
        }
        for (int c = 0; c < e.lit_cols; c++)
          for (int r = 0; r < e.lit_rows; r++)
            op.operands.push_back(elems[r * e.lit_cols + c]);
        ValueId res = fresh(e.type);
        op.results.push_back(res);
        emit(std::move(op));
        return res;
      }
      case Expr::Kind::Call: {
        Op op;
        op.kind = OpKind::FuncCall;
        op.span = e.span;
        op.attrs.callee = e.name;
        for (auto& a : e.args) {
          ValueId v = expr(*a);
          if (v == kNoValue) return kNoValue;
          op.operands.push_back(v);
        }
        ValueId res = kNoValue;
        if (e.type.kind != Type::Kind::None) {
          res = fresh(e.type);
          op.results.push_back(res);
        }
        emit(std::move(op));
        return res;
      }
    }
    return kNoValue;
  }

  ValueId slot_for(const std::string& name, Type t) {
    auto it = slots_.find(name);
    if (it != slots_.end()) return it->second;
    ValueId v = fn_->new_value(t, name);
    slots_[name] = v;
    return v;
  }

  bool stmt(const Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::Assign: {
        if (s.targets.size() == 1) {
          auto& t = s.targets[0];
          const Expr& v = *s.values[0];
          if (!t.indices.empty()) {
            // Element mutation: a new SSA tensor value chained onto the slot.
            ValueId base = slots_[t.name];
            ValueId val = expr(v);
            if (val == kNoValue) return false;
            Op op;
            op.kind = OpKind::TensorInsert;
            op.span = s.span;
            op.operands = {val, base};
            for (auto& ix : t.indices) {
              ValueId idx = expr(*ix);
              if (idx == kNoValue) return false;
              op.operands.push_back(idx);
            }
            op.results.push_back(base);  // pre-SSA slot chain
            emit(std::move(op));
            return true;
          }
          ValueId dst = slot_for(t.name, v.type);
          return expr(v, dst) != kNoValue;
        }
        // Parallel assignment: evaluate everything into temps first.
        std::vector<ValueId> temps;
        for (auto& v : s.values) {
          ValueId raw;
          if (v->kind == Expr::Kind::Var) {
            ValueId tmp = fn_->new_value(v->type);
            raw = expr(*v, tmp);
          } else {
            raw = expr(*v);
          }
          if (raw == kNoValue) return false;
          temps.push_back(raw);
        }
        for (size_t i = 0; i < s.targets.size(); i++) {
          ValueId dst = slot_for(s.targets[i].name, s.values[i]->type);
          Op op;
          op.kind = OpKind::ArithCast;
          op.span = s.span;
          op.operands = {temps[i]};
          op.results.push_back(dst);
          emit(std::move(op));
        }
        return true;
      }
      case Stmt::Kind::If: {
        ValueId c = expr(*s.cond);
        if (c == kNoValue) return false;
        Op op;
        op.kind = OpKind::ScfIf;
        op.span = s.span;
        op.operands = {c};
        op.regions.resize(2);
        op.regions[0].blocks.push_back({});
        op.regions[1].blocks.push_back({});
        size_t pos = cur().ops.size();
        emit(std::move(op));
        Op& placed = cur().ops[pos];
        for (int r = 0; r < 2; r++) {
          block_stack_.push_back(&placed.regions[r].blocks[0]);
          auto& body = r == 0 ? s.then_body : s.else_body;
          for (auto& st : body)
            if (!stmt(*st)) return false;
          Op y;
          y.kind = OpKind::ScfYield;
          y.span = s.span;
          block_stack_.back()->ops.push_back(std::move(y));
          block_stack_.pop_back();
        }
        return true;
      }
      case Stmt::Kind::For: {
        ValueId lb = expr(*s.range_lo);
        ValueId ub = expr(*s.range_hi);
        if (lb == kNoValue || ub == kNoValue) return false;
        Op op;
        op.kind = OpKind::ScfFor;
        op.span = s.span;
        op.operands = {lb, ub};
        op.regions.resize(1);
        op.regions[0].blocks.push_back({});
        ValueId iv = fn_->new_value(s.range_lo->type, s.loop_var);
        op.regions[0].blocks[0].args.push_back(iv);
        size_t pos = cur().ops.size();
        emit(std::move(op));
        Op& placed = cur().ops[pos];
        bool shadowed = slots_.count(s.loop_var) > 0;
        ValueId saved = shadowed ? slots_[s.loop_var] : kNoValue;
        slots_[s.loop_var] = iv;
        block_stack_.push_back(&placed.regions[0].blocks[0]);
        for (auto& st : s.for_body)
          if (!stmt(*st)) return false;
        Op y;
        y.kind = OpKind::ScfYield;
        y.span = s.span;
        block_stack_.back()->ops.push_back(std::move(y));
        block_stack_.pop_back();
        if (shadowed)
          slots_[s.loop_var] = saved;
        else
          slots_.erase(s.loop_var);
        return true;
      }
      case Stmt::Kind::Return: {
        Op op;
        op.kind = OpKind::FuncReturn;
        op.span = s.span;
        if (s.ret) {
          ValueId v = expr(*s.ret);
          if (v == kNoValue) return false;
          op.operands.push_back(v);
        }
        emit(std::move(op));
        return true;
      }
    }
    return false;
  }
};

// Inlines every func.call in f bottom-up. Callees are taken from `ready`
// (already fully inlined).
class Inliner {
 public:
  Inliner(std::map<std::string, IrFunction>& ready, DiagList& diags)
      : ready_(ready), diags_(diags) {}

  bool inline_all(IrFunction& f) {
    return process_region(f, f.body);
  }

 private:
  std::map<std::string, IrFunction>& ready_;
  DiagList& diags_;

  bool process_region(IrFunction& f, Region& r) {
    for (auto& b : r.blocks) {
      for (size_t oi = 0; oi < b.ops.size();) {
        Op& op = b.ops[oi];
        for (auto& nested : op.regions)
          if (!process_region(f, nested)) return false;
        if (op.kind != OpKind::FuncCall) {
          oi++;
          continue;
        }
        auto it = ready_.find(op.attrs.callee);
        if (it == ready_.end()) {
          diags_.error(op.span, "internal: call to unknown function " + op.attrs.callee);
          return false;
        }
        if (!splice(f, b, oi, it->second)) return false;
        // Re-process at the same index: spliced ops are already call-free.
      }
    }
    return true;
  }

  bool splice(IrFunction& f, Block& b, size_t call_idx, const IrFunction& callee) {
    Op call = std::move(b.ops[call_idx]);
    std::map<ValueId, ValueId> remap;
    for (size_t i = 0; i < callee.params.size(); i++)
      remap[callee.params[i]] = call.operands[i];
    std::vector<Op> inlined;
    const Block& cb = callee.body.blocks[0];
    for (auto& cop : cb.ops) {
      if (cop.kind == OpKind::FuncReturn) {
        if (!call.results.empty()) {
          Op mv;
          mv.kind = OpKind::ArithCast;
          mv.span = call.span;
          mv.operands.push_back(mapped(f, callee, remap, cop.operands[0]));
          mv.results.push_back(call.results[0]);
          inlined.push_back(std::move(mv));
        }
        break;  // return is the final statement by frontend rule
      }
      inlined.push_back(clone_op(f, callee, remap, cop));
    }
    b.ops.erase(b.ops.begin() + call_idx);
    b.ops.insert(b.ops.begin() + call_idx, std::make_move_iterator(inlined.begin()),
                 std::make_move_iterator(inlined.end()));
    return true;
  }

  ValueId mapped(IrFunction& f, const IrFunction& callee, std::map<ValueId, ValueId>& remap,
                 ValueId v) {
    auto it = remap.find(v);
    if (it != remap.end()) return it->second;
    ValueId nv = f.new_value(callee.type_of(v), callee.vnames[v]);
    remap[v] = nv;
    return nv;
  }

  Op clone_op(IrFunction& f, const IrFunction& callee, std::map<ValueId, ValueId>& remap,
              const Op& src) {
    Op op;
    op.kind = src.kind;
    op.attrs = src.attrs;
    op.span = src.span;
    op.succs = src.succs;
    for (ValueId v : src.operands) op.operands.push_back(mapped(f, callee, remap, v));
    for (ValueId v : src.results) op.results.push_back(mapped(f, callee, remap, v));
    for (auto& sa : src.succ_args) {
      op.succ_args.emplace_back();
      for (ValueId v : sa) op.succ_args.back().push_back(mapped(f, callee, remap, v));
    }
    for (auto& reg : src.regions) {
      op.regions.emplace_back();
      for (auto& blk : reg.blocks) {
        Block nb;
        nb.id = blk.id;
        for (ValueId a : blk.args) nb.args.push_back(mapped(f, callee, remap, a));
        for (auto& o : blk.ops) nb.ops.push_back(clone_op(f, callee, remap, o));
        op.regions.back().blocks.push_back(std::move(nb));
      }
    }
    return op;
  }
};

}  // namespace

bool build_hir(const Ast& ast, const std::string& entry, IrModule& out, DiagList& diags) {
  diags.set_stage("hir");
  out = IrModule{};
  out.entry = entry;

  // Build every function, entry last so callees are ready for inlining.
  std::map<std::string, IrFunction> built;
  std::vector<std::string> order;
  for (auto& f : ast.functions) {
    IrFunction irf;
    FnBuilder b(ast, f, diags);
    if (!b.run(irf)) return false;
    order.push_back(f.name);
    built[f.name] = std::move(irf);
  }
  // Inline bottom-up; the call graph is acyclic (frontend guarantee), so a
  // simple fixpoint over the instantiation order suffices.
  Inliner inl(built, diags);
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if (!inl.inline_all(built[*it])) return false;
  auto eit = built.find(entry);
  if (eit == built.end()) {
    diags.error("internal: entry function missing after build");
    return false;
  }
  out.funcs.push_back(std::move(eit->second));
  return true;
}

}  // namespace hjl
