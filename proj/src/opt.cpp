#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <tuple>

#include "cfg_utils.hpp"
#include "hjlc/passes.hpp"

namespace hjl::passes {

using namespace ir;

namespace {

std::map<ValueId, int> def_counts(const IrFunction& f) {
  std::map<ValueId, int> count;
  for (auto& b : f.body.blocks)
    for (ValueId a : b.args) count[a]++;
  walk_ops(f.body, [&](const Op& op) {
    for (ValueId r : op.results) count[r]++;
  });
  // Region block args.
  std::function<void(const Region&)> rec = [&](const Region& r) {
    for (auto& b : r.blocks)
      for (auto& op : b.ops)
        for (auto& nested : op.regions) {
          for (auto& nb : nested.blocks)
            for (ValueId a : nb.args) count[a]++;
          rec(nested);
        }
  };
  rec(f.body);
  return count;
}

int replace_uses(Region& r, ValueId from, ValueId to) {
  int n = 0;
  for (auto& b : r.blocks) {
    for (auto& op : b.ops) {
      for (auto& o : op.operands)
        if (o == from) {
          o = to;
          n++;
        }
      for (auto& sa : op.succ_args)
        for (auto& o : sa)
          if (o == from) {
            o = to;
            n++;
          }
      for (auto& nested : op.regions) n += replace_uses(nested, from, to);
    }
  }
  return n;
}

// ---------------------------------------------------------------------------
// canonicalize (normal): constant folding, algebraic identities, select
// rewrites, constant-table hoisting. Never merges or reorders blocks.
// ---------------------------------------------------------------------------

class Canonicalize {
 public:
  Canonicalize(IrModule& m, IrFunction& f) : m_(m), f_(f) {}

  bool sweep() {
    defc_ = def_counts(f_);
    consts_.clear();
    walk_ops(f_.body, [&](const Op& op) {
      if (op.kind == OpKind::ArithConst && !op.attrs.pending_math &&
          defc_[op.results[0]] == 1)
        consts_[op.results[0]] = op.attrs.ival;
    });
    changed_ = false;
    process_region(f_.body);
    return changed_;
  }

 private:
  IrModule& m_;
  IrFunction& f_;
  std::map<ValueId, int> defc_;
  std::map<ValueId, int64_t> consts_;
  bool changed_ = false;

  bool cval(ValueId v, int64_t& out) {
    auto it = consts_.find(v);
    if (it == consts_.end()) return false;
    out = it->second;
    return true;
  }
  bool single(ValueId v) { return defc_[v] == 1; }
  const ScalarType& sc(ValueId v) { return f_.type_of(v).scalar; }

  void to_const(Op& op, int64_t v) {
    ValueId res = op.results[0];
    op = Op{};
    op.kind = OpKind::ArithConst;
    op.attrs.ival = wrap_to(f_.type_of(res).scalar, v);
    op.results = {res};
    if (single(res)) consts_[res] = op.attrs.ival;
    changed_ = true;
  }
  // Forward a computation to an existing value: single-def results get RAUW'd
  // (the dead op is cse_dce's to collect); slots become same-type copies.
  void to_value(Op& op, ValueId v) {
    ValueId res = op.results[0];
    if (op.kind == OpKind::ArithCast && op.operands.size() == 1 && op.operands[0] == v)
      return;  // already a plain copy of v
    if (single(res) && m_.stage.ssa) {
      replace_uses(f_.body, res, v);
      Op copy;
      copy.kind = OpKind::ArithCast;
      copy.operands = {v};
      copy.results = {res};
      copy.span = op.span;
      op = std::move(copy);
    } else {
      Op copy;
      copy.kind = OpKind::ArithCast;
      copy.operands = {v};
      copy.results = {res};
      copy.span = op.span;
      op = std::move(copy);
    }
    changed_ = true;
  }

  void process_region(Region& r) {
    for (auto& b : r.blocks) {
      for (size_t oi = 0; oi < b.ops.size(); oi++) {
        Op& op = b.ops[oi];
        for (auto& nested : op.regions) process_region(nested);
        rewrite(b, oi);
      }
    }
  }

  // Is v a select between +1 and -1 (semantic one) of its type?
  bool is_pm_one_select(ValueId v, ValueId& cond, bool& plus_first) {
    if (!single(v)) return false;
    const Op* def = find_def(v);
    if (!def || def->kind != OpKind::ArithSelect) return false;
    int64_t a, bval;
    if (!cval(def->operands[1], a) || !cval(def->operands[2], bval)) return false;
    const ScalarType& t = sc(v);
    int64_t one = t.kind == ScalarType::Kind::Fixed ? (int64_t)1 << t.frac : 1;
    int64_t pos = wrap_to(t, one), neg = wrap_to(t, -one);
    if (a == pos && bval == neg) {
      cond = def->operands[0];
      plus_first = true;
      return true;
    }
    if (a == neg && bval == pos) {
      cond = def->operands[0];
      plus_first = false;
      return true;
    }
    return false;
  }

  const Op* find_def(ValueId v) {
    const Op* found = nullptr;
    walk_ops(f_.body, [&](const Op& op) {
      for (ValueId r : op.results)
        if (r == v) found = &op;
    });
    return found;
  }

  void rewrite(Block& b, size_t& oi) {
    Op& op = b.ops[oi];
    if (!op.regions.empty()) return;
    int64_t ca, cb;
    switch (op.kind) {
      case OpKind::ArithAdd: {
        bool la = cval(op.operands[0], ca), lb = cval(op.operands[1], cb);
        if (la && lb) return to_const(op, eval_add(sc(op.results[0]), ca, cb));
        if (lb && cb == 0) return to_value(op, op.operands[0]);
        if (la && ca == 0) return to_value(op, op.operands[1]);
        break;
      }
      case OpKind::ArithSub: {
        bool la = cval(op.operands[0], ca), lb = cval(op.operands[1], cb);
        if (la && lb) return to_const(op, eval_sub(sc(op.results[0]), ca, cb));
        if (lb && cb == 0) return to_value(op, op.operands[0]);
        break;
      }
      case OpKind::ArithMul: {
        bool la = cval(op.operands[0], ca), lb = cval(op.operands[1], cb);
        const ScalarType& t = sc(op.results[0]);
        int64_t one = t.kind == ScalarType::Kind::Fixed ? (int64_t)1 << t.frac : 1;
        if (la && lb) return to_const(op, eval_mul(t, ca, cb));
        if ((lb && cb == 0) || (la && ca == 0)) return to_const(op, 0);
        if (lb && cb == one) return to_value(op, op.operands[0]);
        if (la && ca == one) return to_value(op, op.operands[1]);
        if (lb && cb == wrap_to(t, -one)) return to_negate(b, oi, op.operands[0]);
        if (la && ca == wrap_to(t, -one)) return to_negate(b, oi, op.operands[1]);
        // x * select(c, 1, -1)  ==>  select(c, x, -x): drops a multiplier
        // from the recurrence path.
        for (int side = 0; side < 2; side++) {
          ValueId cond;
          bool plus_first;
          if (is_pm_one_select(op.operands[side], cond, plus_first)) {
            ValueId x = op.operands[1 - side];
            to_select_negate(b, oi, x, cond, plus_first);
            return;
          }
        }
        break;
      }
      case OpKind::ArithShl:
      case OpKind::ArithShr: {
        bool la = cval(op.operands[0], ca), lb = cval(op.operands[1], cb);
        const ScalarType& t = sc(op.results[0]);
        if (la && lb)
          return to_const(op, op.kind == OpKind::ArithShl ? eval_shl(t, ca, cb)
                                                          : eval_shr(t, ca, cb));
        if (lb && cb == 0) return to_value(op, op.operands[0]);
        break;
      }
      case OpKind::ArithCmp: {
        if (cval(op.operands[0], ca) && cval(op.operands[1], cb)) {
          const ScalarType& t = sc(op.operands[0]);
          bool usign = t.kind == ScalarType::Kind::UInt;
          uint64_t ua = (uint64_t)ca, ub = (uint64_t)cb;
          bool res = false;
          switch (op.attrs.pred) {
            case CmpPred::Lt: res = usign ? ua < ub : ca < cb; break;
            case CmpPred::Gt: res = usign ? ua > ub : ca > cb; break;
            case CmpPred::Le: res = usign ? ua <= ub : ca <= cb; break;
            case CmpPred::Ge: res = usign ? ua >= ub : ca >= cb; break;
            case CmpPred::Eq: res = ca == cb; break;
            case CmpPred::Ne: res = ca != cb; break;
          }
          return to_const(op, res ? 1 : 0);
        }
        break;
      }
      case OpKind::ArithSelect: {
        if (cval(op.operands[0], ca))
          return to_value(op, ca ? op.operands[1] : op.operands[2]);
        if (op.operands[1] == op.operands[2]) return to_value(op, op.operands[1]);
        break;
      }
      case OpKind::ArithCast:
      case OpKind::ArithFixedRescale: {
        const Type& from = f_.type_of(op.operands[0]);
        const Type& to = f_.type_of(op.results[0]);
        if (from == to && from.is_scalar() && op.operands[0] != op.results[0] &&
            m_.stage.ssa && single(op.results[0])) {
          // Same-type copy: forward uses directly; the dead copy is swept by
          // cse_dce.
          if (replace_uses(f_.body, op.results[0], op.operands[0]) > 0) changed_ = true;
          return;
        }
        if (from.is_scalar() && to.is_scalar() && cval(op.operands[0], ca))
          return to_const(op, eval_cast(to.scalar, from.scalar, ca));
        break;
      }
      case OpKind::TensorFromElements: {
        if (m_.stage.bufferized || op.attrs.const_table) break;
        bool all_const = true;
        std::vector<int64_t> data;
        for (ValueId v : op.operands) {
          int64_t cv;
          if (!cval(v, cv)) {
            all_const = false;
            break;
          }
          data.push_back(cv);
        }
        if (!all_const || data.empty()) break;
        // Constant aggregate: hoist into a module-level read-only table.
        GlobalBuf g;
        g.name = "tab" + std::to_string(m_.globals.size());
        g.elem = f_.type_of(op.results[0]).scalar;
        g.size = (int64_t)data.size();
        g.data = std::move(data);
        m_.globals.push_back(std::move(g));
        op.attrs.const_table = true;
        op.attrs.global = m_.globals.back().name;
        changed_ = true;
        break;
      }
      case OpKind::CfgCondBr: {
        if (!cval(op.operands[0], ca)) break;
        if (op.succs[0] == op.succs[1]) break;  // structure rule: keep the diamond
        int keep = ca ? 0 : 1;
        Op br;
        br.kind = OpKind::CfgBr;
        br.span = op.span;
        br.succs = {op.succs[keep]};
        br.succ_args = {op.succ_args[keep]};
        op = std::move(br);
        changed_ = true;
        break;
      }
      default:
        break;
    }
  }

  void to_negate(Block& b, size_t& oi, ValueId x) {
    ValueId res = b.ops[oi].results[0];
    Type t = f_.type_of(res);
    Op zero;
    zero.kind = OpKind::ArithConst;
    zero.attrs.ival = 0;
    ValueId z = f_.new_value(t);
    zero.results = {z};
    Op sub;
    sub.kind = OpKind::ArithSub;
    sub.operands = {z, x};
    sub.results = {res};
    sub.span = b.ops[oi].span;
    b.ops[oi] = std::move(sub);
    b.ops.insert(b.ops.begin() + oi, std::move(zero));
    oi++;
    changed_ = true;
  }

  void to_select_negate(Block& b, size_t& oi, ValueId x, ValueId cond, bool plus_first) {
    ValueId res = b.ops[oi].results[0];
    Type t = f_.type_of(res);
    SrcSpan span = b.ops[oi].span;
    Op zero;
    zero.kind = OpKind::ArithConst;
    zero.attrs.ival = 0;
    ValueId z = f_.new_value(t);
    zero.results = {z};
    Op sub;
    sub.kind = OpKind::ArithSub;
    sub.operands = {z, x};
    ValueId neg = f_.new_value(t);
    sub.results = {neg};
    sub.span = span;
    Op sel;
    sel.kind = OpKind::ArithSelect;
    sel.operands = plus_first ? std::vector<ValueId>{cond, x, neg}
                              : std::vector<ValueId>{cond, neg, x};
    sel.results = {res};
    sel.span = span;
    b.ops[oi] = std::move(sel);
    b.ops.insert(b.ops.begin() + oi, std::move(sub));
    b.ops.insert(b.ops.begin() + oi, std::move(zero));
    oi += 2;
    changed_ = true;
  }
};

// ---------------------------------------------------------------------------
// cse_dce: block-local value numbering of pure ops (loads never cross stores
// to the same buffer), unreachable-block removal, dead pure ops removed.
// ---------------------------------------------------------------------------

bool op_pure(const Op& op) {
  switch (op.kind) {
    case OpKind::ArithConst:
    case OpKind::ArithAdd:
    case OpKind::ArithSub:
    case OpKind::ArithMul:
    case OpKind::ArithShl:
    case OpKind::ArithShr:
    case OpKind::ArithCmp:
    case OpKind::ArithSelect:
    case OpKind::ArithCast:
    case OpKind::ArithFixedRescale:
    case OpKind::TensorEmpty:
    case OpKind::TensorFromElements:
    case OpKind::TensorExtract:
    case OpKind::TensorInsert:
    case OpKind::TensorTranspose:
      return true;
    case OpKind::TensorMatmul:
      return !op.results.empty();  // buffer form writes memory
    case OpKind::BufLoad:
      return true;  // removable when unused; never hoisted or merged across stores
    default:
      return false;
  }
}

class CseDce {
 public:
  CseDce(IrModule& m, IrFunction& f) : m_(m), f_(f) {}

  bool run() {
    bool changed = false;
    if (m_.stage.cfg) changed |= drop_unreachable();
    changed |= cse();
    while (dce()) changed = true;
    return changed;
  }

 private:
  IrModule& m_;
  IrFunction& f_;

  bool drop_unreachable() {
    CfgInfo info = analyze_cfg(f_.body);
    std::vector<Block> kept;
    bool changed = false;
    for (size_t i = 0; i < f_.body.blocks.size(); i++) {
      if (info.reachable[i])
        kept.push_back(std::move(f_.body.blocks[i]));
      else
        changed = true;
    }
    if (changed) f_.body.blocks = std::move(kept);
    return changed;
  }

  struct Key {
    OpKind kind;
    std::vector<ValueId> operands;
    int64_t a0, a1;
    Type rt;
    bool operator<(const Key& o) const {
      return std::tie(kind, operands, a0, a1, rt.kind, rt.scalar.kind, rt.scalar.width,
                      rt.scalar.frac, rt.rows, rt.cols, rt.size) <
             std::tie(o.kind, o.operands, o.a0, o.a1, o.rt.kind, o.rt.scalar.kind,
                      o.rt.scalar.width, o.rt.scalar.frac, o.rt.rows, o.rt.cols, o.rt.size);
    }
  };

  bool cse() {
    auto defc = def_counts(f_);
    bool changed = false;
    std::function<void(Region&)> rec = [&](Region& r) {
      for (auto& b : r.blocks) {
        std::map<Key, ValueId> table;
        std::map<ValueId, int> mem_version;  // buffer value -> store counter
        for (auto& op : b.ops) {
          for (auto& nested : op.regions) rec(nested);
          // Region ops invalidate loads (their bodies may store).
          if (!op.regions.empty()) {
            mem_version.clear();
            continue;
          }
          if (op.kind == OpKind::BufStore || op.kind == OpKind::BufCopy ||
              (op.kind == OpKind::TensorMatmul && op.results.empty()) ||
              (op.kind == OpKind::TensorTranspose && op.results.empty()) ||
              op.kind == OpKind::FuncCall) {
            ValueId written = kNoValue;
            if (op.kind == OpKind::BufStore) written = op.operands[0];
            if (op.kind == OpKind::BufCopy) written = op.operands[1];
            if (op.kind == OpKind::TensorMatmul && op.results.empty())
              written = op.operands[2];
            if (op.kind == OpKind::TensorTranspose && op.results.empty())
              written = op.operands[1];
            if (written != kNoValue)
              mem_version[written]++;
            else
              mem_version.clear();
            continue;
          }
          if (!op_pure(op) || op.results.size() != 1) continue;
          if (defc[op.results[0]] != 1 || !m_.stage.ssa) continue;
          Key key;
          key.kind = op.kind;
          key.operands = op.operands;
          key.a0 = op.kind == OpKind::ArithConst ? op.attrs.ival
                   : op.kind == OpKind::ArithCmp ? (int64_t)op.attrs.pred
                                                 : 0;
          key.a1 = op.attrs.pending_math ? 1 : 0;
          if (op.attrs.pending_math) continue;  // folded later; don't merge
          if (op.kind == OpKind::BufLoad) key.a1 = 1000 + mem_version[op.operands[0]];
          key.rt = f_.type_of(op.results[0]);
          auto it = table.find(key);
          if (it != table.end()) {
            replace_uses(f_.body, op.results[0], it->second);
            changed = true;  // now dead; dce sweeps it
          } else {
            table[key] = op.results[0];
          }
        }
      }
    };
    rec(f_.body);
    return changed;
  }

  bool dce() {
    auto defc = def_counts(f_);
    std::map<ValueId, int> uses;
    walk_ops(f_.body, [&](const Op& op) {
      for (ValueId v : op.operands) uses[v]++;
      for (auto& sa : op.succ_args)
        for (ValueId v : sa) uses[v]++;
    });
    bool changed = false;
    std::function<void(Region&)> rec = [&](Region& r) {
      for (auto& b : r.blocks) {
        for (size_t oi = 0; oi < b.ops.size();) {
          Op& op = b.ops[oi];
          for (auto& nested : op.regions) rec(nested);
          bool removable = op_pure(op) && !op.results.empty();
          for (ValueId res : op.results)
            removable = removable && uses[res] == 0 && defc[res] == 1;
          if (removable && m_.stage.ssa) {
            b.ops.erase(b.ops.begin() + oi);
            changed = true;
            continue;
          }
          // Side-effect-free region ops with unused results.
          if ((op.kind == OpKind::ScfFor || op.kind == OpKind::ScfIf) && m_.stage.ssa) {
            bool unused = true;
            for (ValueId res : op.results) unused = unused && uses[res] == 0;
            bool effects = false;
            for (auto& nested : op.regions)
              walk_ops(nested, [&](const Op& o) {
                if (!op_pure(o) && o.kind != OpKind::ScfYield) effects = true;
              });
            if (unused && !effects) {
              b.ops.erase(b.ops.begin() + oi);
              changed = true;
              continue;
            }
          }
          oi++;
        }
      }
    };
    rec(f_.body);
    return changed;
  }
};

// ---------------------------------------------------------------------------
// delete_unused_memory: per-buffer effect analysis over the structured form.
// Rewrites run to fixpoint; every rewrite strictly removes a copy, a buffer,
// or both.
// ---------------------------------------------------------------------------

struct Access {
  int pos;         // pre-order op index
  Op* op;
  Block* block;
  size_t op_index;
  bool write;
  int depth;
};

struct BufInfo {
  ValueId id = kNoValue;
  bool external = false;
  bool rom = false;
  bool is_param = false;
  Op* alloc = nullptr;
  Block* alloc_block = nullptr;
  std::vector<Access> reads, writes;
};

class DeleteUnusedMemory {
 public:
  explicit DeleteUnusedMemory(IrFunction& f) : f_(f) {}

  bool run() {
    bool any = false;
    for (int guard = 0; guard < 1000; guard++) {
      if (!step()) return any;
      any = true;
    }
    return any;
  }

 private:
  IrFunction& f_;
  std::map<ValueId, BufInfo> bufs_;
  int pos_ = 0;

  void scan() {
    bufs_.clear();
    pos_ = 0;
    for (size_t i = 0; i < f_.params.size(); i++) {
      if (!f_.type_of(f_.params[i]).is_buffer()) continue;
      BufInfo bi;
      bi.id = f_.params[i];
      bi.is_param = true;
      bi.external =
          i < f_.param_space.size() && f_.param_space[i] == BufSpace::External;
      bufs_[bi.id] = bi;
    }
    scan_region(f_.body, 0);
  }

  void touch(ValueId buf, Op& op, Block& b, size_t oi, bool write, int depth) {
    auto it = bufs_.find(buf);
    if (it == bufs_.end()) return;
    Access a{pos_, &op, &b, oi, write, depth};
    (write ? it->second.writes : it->second.reads).push_back(a);
  }

  void scan_region(Region& r, int depth) {
    for (auto& b : r.blocks) {
      for (size_t oi = 0; oi < b.ops.size(); oi++) {
        Op& op = b.ops[oi];
        pos_++;
        switch (op.kind) {
          case OpKind::BufAlloc: {
            BufInfo bi;
            bi.id = op.results[0];
            bi.rom = op.attrs.space == BufSpace::Rom;
            bi.alloc = &op;
            bi.alloc_block = &b;
            bufs_[bi.id] = bi;
            break;
          }
          case OpKind::BufLoad:
            touch(op.operands[0], op, b, oi, false, depth);
            break;
          case OpKind::BufStore:
            touch(op.operands[0], op, b, oi, true, depth);
            break;
          case OpKind::BufCopy:
            touch(op.operands[0], op, b, oi, false, depth);
            touch(op.operands[1], op, b, oi, true, depth);
            break;
          case OpKind::TensorMatmul:
            if (op.results.empty()) {
              touch(op.operands[0], op, b, oi, false, depth);
              touch(op.operands[1], op, b, oi, false, depth);
              touch(op.operands[2], op, b, oi, true, depth);
            }
            break;
          case OpKind::TensorTranspose:
            if (op.results.empty()) {
              touch(op.operands[0], op, b, oi, false, depth);
              touch(op.operands[1], op, b, oi, true, depth);
            }
            break;
          default:
            break;
        }
        for (auto& nested : op.regions) scan_region(nested, depth + 1);
      }
    }
  }

  bool erase_op(Op* op) {
    bool erased = false;
    std::function<void(Region&)> rec = [&](Region& r) {
      for (auto& b : r.blocks) {
        for (size_t oi = 0; oi < b.ops.size(); oi++) {
          if (&b.ops[oi] == op) {
            b.ops.erase(b.ops.begin() + oi);
            erased = true;
            return;
          }
          for (auto& nested : b.ops[oi].regions) {
            rec(nested);
            if (erased) return;
          }
        }
      }
    };
    rec(f_.body);
    return erased;
  }

  // One rewrite per step; rescan afterwards.
  bool step() {
    scan();
    // R1: self-copies.
    for (auto& [id, bi] : bufs_) {
      for (auto& w : bi.writes) {
        if (w.op->kind == OpKind::BufCopy && w.op->operands[0] == w.op->operands[1])
          return erase_op(w.op);
      }
    }
    // R4: never-read local buffers lose their writes and allocation.
    for (auto& [id, bi] : bufs_) {
      if (bi.external || bi.is_param) continue;
      if (!bi.reads.empty()) continue;
      if (bi.writes.empty() && !bi.alloc) continue;
      for (auto& w : bi.writes) {
        // A copy into a dead buffer disappears entirely.
        erase_op(w.op);
        return true;
      }
      if (bi.alloc) return erase_op(bi.alloc);
    }
    // R5: copy chains collapse: copy(P->Q); copy(Q->R) with Q only used by the
    // pair and P stable in between.
    for (auto& [id, bi] : bufs_) {
      if (bi.external || bi.is_param || bi.rom) continue;
      if (bi.writes.size() != 1 || bi.reads.size() != 1) continue;
      Access& w = bi.writes[0];
      Access& rd = bi.reads[0];
      if (w.op->kind != OpKind::BufCopy || rd.op->kind != OpKind::BufCopy) continue;
      if (w.pos >= rd.pos) continue;
      ValueId p = w.op->operands[0];
      auto pit = bufs_.find(p);
      if (pit == bufs_.end()) continue;
      bool stable = true;
      for (auto& pw : pit->second.writes)
        if (pw.pos >= w.pos) stable = false;
      if (!stable) continue;
      rd.op->operands[0] = p;  // copy(P -> R)
      erase_op(w.op);
      if (bi.alloc) erase_op(bi.alloc);
      return true;
    }
    // R2: round trips: copy(X->Y) ... copy(Y->X) in one block with X untouched
    // between; Y's accesses confined to the window.
    for (auto& [id, bi] : bufs_) {
      if (bi.external || bi.is_param || bi.rom || !bi.alloc) continue;
      Access* cin = nullptr;
      Access* cout = nullptr;
      for (auto& w : bi.writes)
        if (w.op->kind == OpKind::BufCopy && (!cin || w.pos < cin->pos)) cin = &w;
      for (auto& rdd : bi.reads)
        if (rdd.op->kind == OpKind::BufCopy && (!cout || rdd.pos > cout->pos)) cout = &rdd;
      if (!cin || !cout || cin->op == cout->op) continue;
      if (cin->block != cout->block) continue;
      ValueId x = cin->op->operands[0];
      if (cout->op->operands[1] != x) continue;
      auto xit = bufs_.find(x);
      if (xit == bufs_.end()) continue;
      bool x_quiet = true;
      for (auto& a : xit->second.reads)
        if (a.pos > cin->pos && a.pos < cout->pos) x_quiet = false;
      for (auto& a : xit->second.writes)
        if (a.pos > cin->pos && a.pos < cout->pos) x_quiet = false;
      bool y_confined = true;
      for (auto& a : bi.reads)
        if (a.op != cout->op && (a.pos <= cin->pos || a.pos >= cout->pos))
          y_confined = false;
      for (auto& a : bi.writes)
        if (a.op != cin->op && (a.pos <= cin->pos || a.pos >= cout->pos))
          y_confined = false;
      if (!x_quiet || !y_confined) continue;
      Op* in_op = cin->op;
      Op* out_op = cout->op;
      replace_uses(f_.body, id, x);
      erase_op(in_op);
      erase_op(out_op);
      if (bi.alloc) erase_op(bi.alloc);
      return true;
    }
    // R3: load forwarding: copy(A->B) with B written once, all B reads after
    // the copy, and A stable after the copy.
    for (auto& [id, bi] : bufs_) {
      if (bi.external || bi.is_param || bi.rom || !bi.alloc) continue;
      if (bi.writes.size() != 1) continue;
      Access& c = bi.writes[0];
      if (c.op->kind != OpKind::BufCopy) continue;
      ValueId a = c.op->operands[0];
      auto ait = bufs_.find(a);
      if (ait == bufs_.end()) continue;
      bool reads_after = true;
      for (auto& rdd : bi.reads)
        if (rdd.pos <= c.pos) reads_after = false;
      bool a_stable = true;
      for (auto& w : ait->second.writes)
        if (w.pos >= c.pos) a_stable = false;
      if (!reads_after || !a_stable) continue;
      replace_uses(f_.body, id, a);
      erase_op(c.op);
      erase_op(bi.alloc);
      return true;
    }
    // R6: a local buffer whose only read is the final copy into an external
    // out-buffer sinks into it.
    for (auto& [id, bi] : bufs_) {
      if (bi.external || bi.is_param || bi.rom || !bi.alloc) continue;
      if (bi.reads.size() != 1) continue;
      Access& c = bi.reads[0];
      if (c.op->kind != OpKind::BufCopy) continue;
      ValueId dst = c.op->operands[1];
      auto dit = bufs_.find(dst);
      if (dit == bufs_.end() || !dit->second.external) continue;
      // dst only written by this copy, never read internally.
      if (!dit->second.reads.empty() || dit->second.writes.size() != 1) continue;
      bool writes_before = true;
      for (auto& w : bi.writes)
        if (w.pos >= c.pos) writes_before = false;
      if (!writes_before) continue;
      Op* copy_op = c.op;
      replace_uses(f_.body, id, dst);
      erase_op(copy_op);
      erase_op(bi.alloc);
      return true;
    }
    return false;
  }
};

// ---------------------------------------------------------------------------
// insert_merge_blocks: blocks with more than two predecessor edges get a
// balanced tree of pass-through merge blocks, inserted only where needed.
// ---------------------------------------------------------------------------

class InsertMergeBlocks {
 public:
  explicit InsertMergeBlocks(IrFunction& f) : f_(f) {}

  bool run() {
    bool changed = false;
    // Snapshot target ids first: new merge blocks never need processing.
    std::vector<int> targets;
    for (auto& b : f_.body.blocks) targets.push_back(b.id);
    for (int id : targets) changed |= process(id);
    return changed;
  }

 private:
  IrFunction& f_;

  struct Edge {
    int block_id;
    int succ_slot;
  };

  Block* by_id(int id) {
    for (auto& b : f_.body.blocks)
      if (b.id == id) return &b;
    return nullptr;
  }

  bool process(int target_id) {
    std::vector<Edge> edges;
    for (auto& b : f_.body.blocks) {
      if (b.ops.empty()) continue;
      Op& t = b.ops.back();
      for (size_t s = 0; s < t.succs.size(); s++)
        if (t.succs[s] == target_id) edges.push_back({b.id, (int)s});
    }
    if (edges.size() <= 2) return false;
    Block* target = by_id(target_id);
    std::vector<Type> arg_types;
    for (ValueId a : target->args) arg_types.push_back(f_.type_of(a));
    // Pair up edges level by level until at most two remain.
    std::vector<Edge> level = edges;
    while (level.size() > 2) {
      std::vector<Edge> next;
      for (size_t i = 0; i + 1 < level.size(); i += 2) {
        int mid = make_merge(target_id, arg_types);
        redirect(level[i], mid);
        redirect(level[i + 1], mid);
        next.push_back({mid, 0});
      }
      if (level.size() % 2 == 1) next.push_back(level.back());
      level = std::move(next);
    }
    return true;
  }

  int make_merge(int target_id, const std::vector<Type>& arg_types) {
    Block m;
    m.id = (int)f_.body.blocks.size();
    std::vector<ValueId> args;
    for (auto& t : arg_types) args.push_back(f_.new_value(t));
    m.args = args;
    Op br;
    br.kind = OpKind::CfgBr;
    br.succs = {target_id};
    br.succ_args = {args};
    m.ops.push_back(std::move(br));
    f_.body.blocks.push_back(std::move(m));
    return f_.body.blocks.back().id;
  }

  void redirect(const Edge& e, int to) {
    Block* b = by_id(e.block_id);
    b->ops.back().succs[e.succ_slot] = to;
  }
};

}  // namespace

bool canonicalize(IrModule& m, DiagList& diags) {
  diags.set_stage("opt");
  for (auto& f : m.funcs) {
    Canonicalize pass(m, f);
    for (int sweep = 0; sweep < 10; sweep++) {
      if (!pass.sweep()) break;
    }
  }
  return true;
}

bool cse_dce(IrModule& m, DiagList& diags) {
  diags.set_stage("opt");
  for (auto& f : m.funcs) {
    CseDce pass(m, f);
    pass.run();
  }
  return true;
}

bool delete_unused_memory(IrModule& m, DiagList& diags) {
  diags.set_stage("opt");
  if (!m.stage.bufferized) return true;  // nothing to do pre-bufferization
  for (auto& f : m.funcs) {
    DeleteUnusedMemory pass(f);
    pass.run();
  }
  return true;
}

bool insert_merge_blocks(IrModule& m, DiagList& diags) {
  diags.set_stage("opt");
  if (!m.stage.cfg) {
    diags.error("insert_merge_blocks requires CFG form");
    return false;
  }
  for (auto& f : m.funcs) {
    InsertMergeBlocks pass(f);
    pass.run();
  }
  m.stage.merged = true;
  return true;
}

}  // namespace hjl::passes
