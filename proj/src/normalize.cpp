#include <cmath>
#include <map>
#include <set>

#include "hjlc/passes.hpp"

namespace hjl::passes {

using namespace ir;

namespace {

// Map from value to its unique defining op; values with multiple definitions
// (pre-SSA slots) are excluded.
std::map<ValueId, const Op*> single_defs(const IrFunction& f) {
  std::map<ValueId, int> count;
  std::map<ValueId, const Op*> def;
  walk_ops(f.body, [&](const Op& op) {
    for (ValueId r : op.results) {
      count[r]++;
      def[r] = &op;
    }
  });
  std::map<ValueId, const Op*> out;
  for (auto& [v, d] : def)
    if (count[v] == 1) out[v] = d;
  return out;
}

// Linear add/sub chain: sum of signed terms plus a constant.
struct LinChain {
  std::vector<std::pair<ValueId, int>> terms;  // (value, +1/-1)
  int64_t constant = 0;
};

void collect_chain(const std::map<ValueId, const Op*>& defs, ValueId v, int sign,
                   LinChain& out) {
  auto it = defs.find(v);
  if (it != defs.end()) {
    const Op& op = *it->second;
    if (op.kind == OpKind::ArithConst && !op.attrs.pending_math) {
      out.constant += sign * op.attrs.ival;
      return;
    }
    if (op.kind == OpKind::ArithAdd) {
      collect_chain(defs, op.operands[0], sign, out);
      collect_chain(defs, op.operands[1], sign, out);
      return;
    }
    if (op.kind == OpKind::ArithSub) {
      collect_chain(defs, op.operands[0], sign, out);
      collect_chain(defs, op.operands[1], -sign, out);
      return;
    }
  }
  out.terms.push_back({v, sign});
}

// Rebuilds `v + extra` as a folded linear combination, inserting new ops into
// b.ops before position `at`. Returns the replacement value and advances `at`
// past the inserted ops.
ValueId rebuild_linear(IrFunction& f, const std::map<ValueId, const Op*>& defs, Block& b,
                       size_t& at, ValueId v, int64_t extra, SrcSpan span) {
  LinChain ch;
  collect_chain(defs, v, 1, ch);
  ch.constant += extra;
  const Type& t = f.type_of(v);
  if (ch.terms.empty()) {
    Op c;
    c.kind = OpKind::ArithConst;
    c.attrs.ival = wrap_to(t.scalar, ch.constant);
    c.span = span;
    ValueId res = f.new_value(t);
    c.results.push_back(res);
    b.ops.insert(b.ops.begin() + at, std::move(c));
    at++;
    return res;
  }
  // Positive terms first keeps the rebuilt tree addition-rooted.
  std::vector<std::pair<ValueId, int>> ordered;
  for (auto& tm : ch.terms)
    if (tm.second > 0) ordered.push_back(tm);
  for (auto& tm : ch.terms)
    if (tm.second < 0) ordered.push_back(tm);
  ValueId acc = kNoValue;
  auto emit_bin = [&](OpKind k, ValueId a, ValueId c2) {
    Op op;
    op.kind = k;
    op.operands = {a, c2};
    op.span = span;
    ValueId res = f.new_value(t);
    op.results.push_back(res);
    b.ops.insert(b.ops.begin() + at, std::move(op));
    at++;
    return res;
  };
  if (ordered[0].second > 0) {
    acc = ordered[0].first;
  } else {
    // All terms negative: start from constant 0.
    Op c;
    c.kind = OpKind::ArithConst;
    c.attrs.ival = 0;
    c.span = span;
    acc = f.new_value(t);
    c.results.push_back(acc);
    b.ops.insert(b.ops.begin() + at, std::move(c));
    at++;
    acc = emit_bin(OpKind::ArithSub, acc, ordered[0].first);
  }
  for (size_t i = 1; i < ordered.size(); i++)
    acc = emit_bin(ordered[i].second > 0 ? OpKind::ArithAdd : OpKind::ArithSub, acc,
                   ordered[i].first);
  if (ch.constant != 0) {
    Op c;
    c.kind = OpKind::ArithConst;
    c.attrs.ival = wrap_to(t.scalar, ch.constant);
    c.span = span;
    ValueId cv = f.new_value(t);
    c.results.push_back(cv);
    b.ops.insert(b.ops.begin() + at, std::move(c));
    at++;
    acc = emit_bin(OpKind::ArithAdd, acc, cv);
  }
  return acc;
}

void replace_uses_in_region(Region& r, ValueId from, ValueId to, const Op* skip) {
  for (auto& b : r.blocks) {
    for (auto& op : b.ops) {
      if (&op == skip) continue;
      for (auto& o : op.operands)
        if (o == from) o = to;
      for (auto& sa : op.succ_args)
        for (auto& o : sa)
          if (o == from) o = to;
      for (auto& nested : op.regions) replace_uses_in_region(nested, from, to, skip);
    }
  }
}

class IndexBasePass {
 public:
  IndexBasePass(IrModule& m, DiagList& diags) : m_(m), diags_(diags) {}

  bool run() {
    if (m_.stage.zero_based) return true;
    bool ok = true;
    for (auto& f : m_.funcs) {
      f_ = &f;
      ok = process_region(f.body) && ok;
    }
    if (ok) m_.stage.zero_based = true;
    return ok;
  }

 private:
  IrModule& m_;
  DiagList& diags_;
  IrFunction* f_ = nullptr;

  bool process_region(Region& r) {
    bool ok = true;
    for (auto& b : r.blocks) {
      for (size_t oi = 0; oi < b.ops.size(); oi++) {
        OpKind k = b.ops[oi].kind;
        // Counters convert before their body is visited so that index chains
        // inside the region see the 0-based substitution.
        if (k == OpKind::ScfFor && !b.ops[oi].attrs.half_open) convert_loop(b, oi);
        for (auto& nested : b.ops[oi].regions)
          ok = process_region(nested) && ok;
        if (k == OpKind::TensorExtract) {
          ok = shift_indices(b, oi, 1) && ok;
        } else if (k == OpKind::TensorInsert) {
          ok = shift_indices(b, oi, 2) && ok;
        }
      }
    }
    return ok;
  }

  void convert_loop(Block& b, size_t& oi) {
    auto defs = single_defs(*f_);
    // lb' = lb - 1, folded; ub unchanged; [lb-1, ub) iterates the same count.
    ValueId lb = b.ops[oi].operands[0];
    SrcSpan span = b.ops[oi].span;
    size_t at = oi;
    ValueId lb0 = rebuild_linear(*f_, defs, b, at, lb, -1, span);
    oi = at;
    Op& op = b.ops[oi];
    op.operands[0] = lb0;
    op.attrs.half_open = true;
    // The counter is now 0-based: every existing use of iv becomes iv + 1.
    Block& body = op.regions[0].blocks[0];
    ValueId iv = body.args[0];
    const Type& t = f_->type_of(iv);
    Op c1;
    c1.kind = OpKind::ArithConst;
    c1.attrs.ival = 1;
    c1.span = span;
    ValueId one = f_->new_value(t);
    c1.results.push_back(one);
    Op add;
    add.kind = OpKind::ArithAdd;
    add.span = span;
    ValueId iv1 = f_->new_value(t);
    add.operands = {iv, one};
    add.results.push_back(iv1);
    replace_uses_in_region(op.regions[0], iv, iv1, nullptr);
    body.ops.insert(body.ops.begin(), std::move(add));
    body.ops.insert(body.ops.begin(), std::move(c1));
  }

  bool shift_indices(Block& b, size_t& oi, size_t first_index) {
    auto defs = single_defs(*f_);
    bool ok = true;
    size_t n = b.ops[oi].operands.size();
    for (size_t k = first_index; k < n; k++) {
      size_t at = oi;
      ValueId idx = b.ops[oi].operands[k];
      ValueId folded = rebuild_linear(*f_, defs, b, at, idx, -1, b.ops[oi].span);
      oi = at;
      Op& op = b.ops[oi];
      op.operands[k] = folded;
      // Constant indices are bounds-checked immediately.
      auto defs2 = single_defs(*f_);
      auto it = defs2.find(folded);
      if (it != defs2.end() && it->second->kind == OpKind::ArithConst) {
        int64_t v = it->second->attrs.ival;
        const Type& mt =
            f_->type_of(op.operands[op.kind == OpKind::TensorExtract ? 0 : 1]);
        size_t nidx = n - first_index;
        int64_t bound;
        if (nidx == 1) {
          bound = mt.elems();
        } else {
          bound = (k == first_index) ? mt.rows : mt.cols;
        }
        if (v < 0 || v >= bound) {
          diags_.error(op.span, "index out of bounds after 0-based conversion: " +
                                    std::to_string(v) + " not in [0, " +
                                    std::to_string(bound) + ")");
          ok = false;
        }
      }
    }
    return ok;
  }
};

// ---------------------------------------------------------------------------

class LegalizeSsa {
 public:
  LegalizeSsa(IrFunction& src) : src_(src) {}

  IrFunction run() {
    IrFunction out;
    out.name = src_.name;
    out.ret = src_.ret;
    out.param_space = src_.param_space;
    out.body.blocks.push_back({});
    for (ValueId p : src_.params) {
      ValueId np = out.new_value(src_.type_of(p), src_.vnames[p]);
      out.params.push_back(np);
      out.body.blocks[0].args.push_back(np);
      env_[p] = np;
    }
    out_ = &out;
    rewrite_block(src_.body.blocks[0], out.body.blocks[0]);
    return out;
  }

 private:
  IrFunction& src_;
  IrFunction* out_ = nullptr;
  std::map<ValueId, ValueId> env_;

  ValueId lookup(ValueId v) {
    auto it = env_.find(v);
    return it == env_.end() ? kNoValue : it->second;
  }

  // Values (re)defined as op results anywhere in this region.
  static void assigned_in(const Region& r, std::set<ValueId>& out) {
    walk_ops(r, [&](const Op& op) {
      for (ValueId res : op.results) out.insert(res);
    });
  }
  static void used_in(const Region& r, std::set<ValueId>& out) {
    walk_ops(r, [&](const Op& op) {
      for (ValueId v : op.operands) out.insert(v);
    });
  }

  void rewrite_block(const Block& src, Block& dst) {
    for (auto& op : src.ops) {
      switch (op.kind) {
        case OpKind::ScfIf:
          rewrite_if(op, dst);
          break;
        case OpKind::ScfFor:
          rewrite_for(op, dst);
          break;
        case OpKind::ScfYield:
          break;  // rebuilt by the parent
        default: {
          Op nop;
          nop.kind = op.kind;
          nop.attrs = op.attrs;
          nop.span = op.span;
          for (ValueId v : op.operands) nop.operands.push_back(lookup(v));
          for (ValueId res : op.results) {
            ValueId nv = out_->new_value(src_.type_of(res), src_.vnames[res]);
            nop.results.push_back(nv);
            env_[res] = nv;
          }
          dst.ops.push_back(std::move(nop));
          break;
        }
      }
    }
  }

  void rewrite_if(const Op& op, Block& dst) {
    std::set<ValueId> a_then, a_else;
    assigned_in(op.regions[0], a_then);
    assigned_in(op.regions[1], a_else);
    std::vector<ValueId> yields;  // old slot ids, deterministic order
    for (ValueId v : a_then) {
      if (env_.count(v) || a_else.count(v)) yields.push_back(v);
    }
    for (ValueId v : a_else) {
      if ((env_.count(v)) && !a_then.count(v)) yields.push_back(v);
    }
    std::sort(yields.begin(), yields.end());
    yields.erase(std::unique(yields.begin(), yields.end()), yields.end());

    Op nop;
    nop.kind = OpKind::ScfIf;
    nop.span = op.span;
    nop.operands.push_back(lookup(op.operands[0]));
    nop.regions.resize(2);
    nop.regions[0].blocks.push_back({});
    nop.regions[1].blocks.push_back({});
    auto outer_env = env_;
    for (int r = 0; r < 2; r++) {
      env_ = outer_env;
      rewrite_block(op.regions[r].blocks[0], nop.regions[r].blocks[0]);
      Op y;
      y.kind = OpKind::ScfYield;
      y.span = op.span;
      for (ValueId s : yields) y.operands.push_back(lookup(s));
      nop.regions[r].blocks[0].ops.push_back(std::move(y));
    }
    env_ = outer_env;
    for (ValueId s : yields) {
      ValueId nv = out_->new_value(src_.type_of(s), src_.vnames[s]);
      nop.results.push_back(nv);
      env_[s] = nv;
    }
    dst.ops.push_back(std::move(nop));
  }

  void rewrite_for(const Op& op, Block& dst) {
    const Block& body = op.regions[0].blocks[0];
    std::set<ValueId> assigned, used;
    assigned_in(op.regions[0], assigned);
    used_in(op.regions[0], used);
    // Carried: re-assigned slots that exist before the loop, plus matrix
    // values threaded through the region for isolation (yielded unchanged).
    std::vector<ValueId> carried;
    for (ValueId v : assigned)
      if (env_.count(v)) carried.push_back(v);
    for (ValueId v : used) {
      if (assigned.count(v) || !env_.count(v)) continue;
      if (src_.type_of(v).is_matrix()) carried.push_back(v);
    }
    std::sort(carried.begin(), carried.end());
    carried.erase(std::unique(carried.begin(), carried.end()), carried.end());

    Op nop;
    nop.kind = OpKind::ScfFor;
    nop.span = op.span;
    nop.attrs = op.attrs;
    nop.operands.push_back(lookup(op.operands[0]));
    nop.operands.push_back(lookup(op.operands[1]));
    nop.regions.resize(1);
    nop.regions[0].blocks.push_back({});
    Block& nbody = nop.regions[0].blocks[0];

    auto outer_env = env_;
    ValueId iv = body.args[0];
    ValueId niv = out_->new_value(src_.type_of(iv), src_.vnames[iv]);
    nbody.args.push_back(niv);
    env_[iv] = niv;
    for (ValueId s : carried) {
      nop.operands.push_back(outer_env.at(s));
      ValueId arg = out_->new_value(src_.type_of(s), src_.vnames[s]);
      nbody.args.push_back(arg);
      env_[s] = arg;
    }
    rewrite_block(body, nbody);
    Op y;
    y.kind = OpKind::ScfYield;
    y.span = op.span;
    for (ValueId s : carried) y.operands.push_back(lookup(s));
    nbody.ops.push_back(std::move(y));

    env_ = outer_env;
    for (ValueId s : carried) {
      ValueId nv = out_->new_value(src_.type_of(s), src_.vnames[s]);
      nop.results.push_back(nv);
      env_[s] = nv;
    }
    dst.ops.push_back(std::move(nop));
  }
};

}  // namespace

bool index_base_to_zero(IrModule& m, DiagList& diags) {
  diags.set_stage("normalize");
  return IndexBasePass(m, diags).run();
}

bool layout_to_row_major(IrModule& m, DiagList& diags) {
  diags.set_stage("normalize");
  if (m.stage.row_major) return true;
  for (auto& f : m.funcs) {
    walk_ops(f.body, [&](Op& op) {
      if (op.kind != OpKind::TensorFromElements) return;
      const Type& t = f.type_of(op.results[0]);
      if (t.row_major) return;
      std::vector<ValueId> reordered(op.operands.size());
      for (int c = 0; c < t.cols; c++)
        for (int r = 0; r < t.rows; r++)
          reordered[(size_t)r * t.cols + c] = op.operands[(size_t)c * t.rows + r];
      op.operands = std::move(reordered);
    });
    for (auto& t : f.vtypes)
      if (t.is_matrix()) t.row_major = true;
    if (f.ret.is_matrix()) f.ret.row_major = true;
  }
  m.stage.row_major = true;
  return true;
}

bool legalize_ssa(IrModule& m, DiagList& diags) {
  diags.set_stage("normalize");
  if (m.stage.ssa) return true;
  for (auto& f : m.funcs) {
    LegalizeSsa pass(f);
    f = pass.run();
  }
  m.stage.ssa = true;
  return true;
}

bool map_math_ops(IrModule& m, DiagList& diags) {
  diags.set_stage("normalize");
  bool ok = true;
  for (auto& f : m.funcs) {
    walk_ops(f.body, [&](Op& op) {
      if (op.kind != OpKind::ArithConst || !op.attrs.pending_math) return;
      if (op.attrs.math_fn != "atan") {
        diags.error(op.span, "non-constant math intrinsic '" + op.attrs.math_fn +
                                 "' cannot be mapped to hardware");
        ok = false;
        return;
      }
      const ScalarType& t = f.type_of(op.results[0]).scalar;
      op.attrs.ival = quantize_real(t, std::atan(op.attrs.math_arg));
      op.attrs.pending_math = false;
      op.attrs.math_fn.clear();
      op.attrs.math_arg = 0;
    });
  }
  if (ok) m.stage.math_folded = true;
  return ok;
}

}  // namespace hjl::passes
