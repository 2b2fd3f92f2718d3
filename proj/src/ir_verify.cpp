#include <algorithm>
#include <set>

#include "cfg_utils.hpp"
#include "hjlc/ir.hpp"

namespace hjl::ir {

CfgInfo analyze_cfg(const Region& r) {
  CfgInfo info;
  int n = (int)r.blocks.size();
  for (int i = 0; i < n; i++) info.index[r.blocks[i].id] = i;
  info.preds.resize(n);
  info.succs.resize(n);
  info.reachable.assign(n, false);
  info.idom.assign(n, -1);
  for (int i = 0; i < n; i++) {
    for (int s : successors(r.blocks[i])) {
      auto it = info.index.find(s);
      if (it == info.index.end()) continue;
      info.succs[i].push_back(s);
      info.preds[it->second].push_back(r.blocks[i].id);
    }
  }
  if (n == 0) return info;
  std::vector<int> work{0};
  info.reachable[0] = true;
  while (!work.empty()) {
    int b = work.back();
    work.pop_back();
    for (int s : info.succs[b]) {
      int si = info.index[s];
      if (!info.reachable[si]) {
        info.reachable[si] = true;
        work.push_back(si);
      }
    }
  }
  // Reverse postorder, then iterative dominator computation.
  std::vector<int> rpo;
  std::vector<char> state(n, 0);
  std::vector<int> stack{0};
  while (!stack.empty()) {
    int b = stack.back();
    if (state[b] == 0) {
      state[b] = 1;
      for (auto it = info.succs[b].rbegin(); it != info.succs[b].rend(); ++it) {
        int si = info.index[*it];
        if (state[si] == 0) stack.push_back(si);
      }
    } else {
      stack.pop_back();
      if (state[b] == 1) {
        state[b] = 2;
        rpo.push_back(b);
      }
    }
  }
  std::reverse(rpo.begin(), rpo.end());
  std::vector<int> rpo_pos(n, -1);
  for (int i = 0; i < (int)rpo.size(); i++) rpo_pos[rpo[i]] = i;
  auto intersect = [&](int a, int b) {
    while (a != b) {
      while (rpo_pos[a] > rpo_pos[b]) a = info.idom[a];
      while (rpo_pos[b] > rpo_pos[a]) b = info.idom[b];
    }
    return a;
  };
  info.idom[0] = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int b : rpo) {
      if (b == 0) continue;
      int new_idom = -1;
      for (int pid : info.preds[b]) {
        int p = info.index[pid];
        if (info.idom[p] == -1) continue;
        new_idom = new_idom == -1 ? p : intersect(p, new_idom);
      }
      if (new_idom != -1 && info.idom[b] != new_idom) {
        info.idom[b] = new_idom;
        changed = true;
      }
    }
  }
  info.idom[0] = -1;
  return info;
}

namespace {

class Verifier {
 public:
  Verifier(const IrModule& m) : m_(m) {}

  std::vector<Violation> run() {
    for (auto& f : m_.funcs) check_function(f);
    if (!m_.entry.empty() && !m_.find(m_.entry))
      add("module", "entry function @" + m_.entry + " not found");
    return std::move(out_);
  }

 private:
  const IrModule& m_;
  const IrFunction* f_ = nullptr;
  std::vector<Violation> out_;
  std::vector<int> def_count_;

  void add(std::string where, std::string what) {
    out_.push_back({std::move(where), std::move(what)});
  }
  std::string at(const Block& b, size_t oi, const Op& op) {
    return "func @" + f_->name + " ^" + std::to_string(b.id) + " op#" + std::to_string(oi) +
           " (" + op_name(op.kind) + ")";
  }

  bool valid_value(ValueId v) const { return v >= 0 && v < (ValueId)f_->vtypes.size(); }
  const Type& ty(ValueId v) const { return f_->vtypes[v]; }

  bool is_scalar_kind(ValueId v, ScalarType::Kind k) const {
    return valid_value(v) && ty(v).is_scalar() && ty(v).scalar.kind == k;
  }
  bool is_signed_int(ValueId v) const { return is_scalar_kind(v, ScalarType::Kind::SInt); }
  bool is_bool(ValueId v) const { return is_scalar_kind(v, ScalarType::Kind::Bool); }

  void check_function(const IrFunction& f) {
    f_ = &f;
    def_count_.assign(f.vtypes.size(), 0);
    if (f.body.blocks.empty()) {
      add("func @" + f.name, "function has no blocks");
      return;
    }
    if (f.body.blocks[0].args != f.params)
      add("func @" + f.name, "entry block arguments do not match function parameters");

    count_defs(f.body);
    if (m_.stage.ssa) {
      for (size_t v = 0; v < def_count_.size(); v++) {
        if (def_count_[v] > 1)
          add("func @" + f.name, "value %" + std::to_string(v) + " defined " +
                                     std::to_string(def_count_[v]) +
                                     " times (SSA violation)");
      }
    }

    if (m_.stage.cfg) {
      check_cfg_function(f);
    } else {
      std::set<ValueId> defined(f.params.begin(), f.params.end());
      check_structured_region(f.body, defined, /*in_scf=*/false);
    }
    walk_all_blocks(f.body, [&](const Block& b) {
      for (size_t oi = 0; oi < b.ops.size(); oi++) check_op(b, oi, b.ops[oi]);
    });
  }

  template <typename F>
  void walk_all_blocks(const Region& r, F&& fn) {
    for (auto& b : r.blocks) {
      fn(b);
      for (auto& op : b.ops)
        for (auto& nested : op.regions) walk_all_blocks(nested, fn);
    }
  }

  void count_defs(const Region& r) {
    bool entry = &r == &f_->body;
    for (size_t bi = 0; bi < r.blocks.size(); bi++) {
      auto& b = r.blocks[bi];
      // The function's entry block args are the params; count them once.
      if (!(entry && bi == 0)) {
        for (ValueId a : b.args)
          if (valid_value(a)) def_count_[a]++;
      } else {
        for (ValueId a : b.args)
          if (valid_value(a)) def_count_[a] = std::max(def_count_[a], 1);
      }
      for (auto& op : b.ops) {
        for (ValueId res : op.results)
          if (valid_value(res)) def_count_[res]++;
        for (auto& nested : op.regions) count_defs(nested);
      }
    }
  }

  // Structured form: lexical def-before-use. Pre-SSA slot definitions escape
  // their regions; SSA definitions are region-scoped.
  void check_structured_region(const Region& r, std::set<ValueId>& defined, bool in_scf) {
    if (r.blocks.size() != 1) {
      add("func @" + f_->name, "structured region must have exactly one block");
      return;
    }
    const Block& b = r.blocks[0];
    for (ValueId a : b.args) defined.insert(a);
    for (size_t oi = 0; oi < b.ops.size(); oi++) {
      const Op& op = b.ops[oi];
      auto check_use = [&](ValueId v) {
        if (!valid_value(v)) {
          add(at(b, oi, op), "invalid operand id");
          return;
        }
        if (!defined.count(v))
          add(at(b, oi, op), "use of %" + std::to_string(v) + " before definition");
      };
      for (ValueId v : op.operands) check_use(v);
      for (auto& nested : op.regions) {
        if (m_.stage.ssa) {
          std::set<ValueId> inner = defined;
          check_structured_region(nested, inner, true);
        } else {
          check_structured_region(nested, defined, true);
        }
      }
      for (ValueId res : op.results) defined.insert(res);
      bool is_last = oi + 1 == b.ops.size();
      if (op.kind == OpKind::ScfYield && (!in_scf || !is_last))
        add(at(b, oi, op), "scf.yield must be the final op of an scf region");
      if (op.kind == OpKind::FuncReturn && (in_scf || !is_last))
        add(at(b, oi, op), "func.return must be the final op of the function body");
    }
    if (b.ops.empty()) {
      add("func @" + f_->name, "structured block has no terminator");
      return;
    }
    const Op& last = b.ops.back();
    if (in_scf && last.kind != OpKind::ScfYield)
      add(at(b, b.ops.size() - 1, last), "scf region must end with scf.yield");
    if (!in_scf && last.kind != OpKind::FuncReturn)
      add(at(b, b.ops.size() - 1, last), "function body must end with func.return");
  }

  void check_cfg_function(const IrFunction& f) {
    const Region& r = f.body;
    std::set<int> ids;
    for (auto& b : r.blocks) {
      if (!ids.insert(b.id).second)
        add("func @" + f.name, "duplicate block id ^" + std::to_string(b.id));
    }
    CfgInfo info = analyze_cfg(r);
    for (auto& b : r.blocks) {
      if (b.ops.empty()) {
        add("func @" + f.name, "^" + std::to_string(b.id) + " is empty");
        continue;
      }
      for (size_t oi = 0; oi < b.ops.size(); oi++) {
        const Op& op = b.ops[oi];
        bool term = op.kind == OpKind::CfgBr || op.kind == OpKind::CfgCondBr ||
                    op.kind == OpKind::FuncReturn;
        bool last = oi + 1 == b.ops.size();
        if (term != last)
          add(at(b, oi, op),
              term ? "terminator before the end of the block" : "missing terminator");
        if (!op.regions.empty())
          add(at(b, oi, op), "structured regions are illegal in CFG form");
      }
      for (int s : successors(b)) {
        if (!info.index.count(s))
          add("func @" + f.name,
              "^" + std::to_string(b.id) + " branches to unknown ^" + std::to_string(s));
      }
    }
    std::map<ValueId, std::pair<int, int>> defs;  // value -> (block id, op index)
    for (auto& b : r.blocks) {
      for (ValueId a : b.args) defs[a] = {b.id, -1};
      for (size_t oi = 0; oi < b.ops.size(); oi++)
        for (ValueId res : b.ops[oi].results) defs[res] = {b.id, (int)oi};
    }
    for (auto& b : r.blocks) {
      if (!info.index.count(b.id) || !info.reachable[info.index[b.id]]) continue;
      for (size_t oi = 0; oi < b.ops.size(); oi++) {
        const Op& op = b.ops[oi];
        auto check_use = [&](ValueId v) {
          if (!valid_value(v)) {
            add(at(b, oi, op), "invalid operand id");
            return;
          }
          auto it = defs.find(v);
          if (it == defs.end()) {
            add(at(b, oi, op), "use of undefined value %" + std::to_string(v));
            return;
          }
          auto [db, doi] = it->second;
          if (db == b.id) {
            if (doi >= (int)oi)
              add(at(b, oi, op),
                  "use of %" + std::to_string(v) + " before its definition in the block");
          } else if (!info.dominates(db, b.id)) {
            add(at(b, oi, op), "use of %" + std::to_string(v) +
                                   " not dominated by its definition (^" +
                                   std::to_string(db) + " does not dominate ^" +
                                   std::to_string(b.id) + ")");
          }
        };
        for (ValueId v : op.operands) check_use(v);
        for (auto& args : op.succ_args)
          for (ValueId v : args) check_use(v);
      }
      const Op& t = b.ops.back();
      if (t.kind == OpKind::CfgBr || t.kind == OpKind::CfgCondBr) {
        for (size_t s = 0; s < t.succs.size(); s++) {
          auto it = info.index.find(t.succs[s]);
          if (it == info.index.end()) continue;
          const Block& target = r.blocks[it->second];
          if (s >= t.succ_args.size() || t.succ_args[s].size() != target.args.size()) {
            add(at(b, b.ops.size() - 1, t),
                "branch argument arity mismatch to ^" + std::to_string(target.id));
            continue;
          }
          for (size_t k = 0; k < target.args.size(); k++) {
            if (valid_value(t.succ_args[s][k]) && valid_value(target.args[k]) &&
                !(ty(t.succ_args[s][k]) == ty(target.args[k])))
              add(at(b, b.ops.size() - 1, t),
                  "branch argument type mismatch to ^" + std::to_string(target.id));
          }
        }
      }
    }
    if (m_.stage.merged) {
      for (size_t i = 0; i < r.blocks.size(); i++) {
        if (info.preds[i].size() > 2)
          add("func @" + f.name, "^" + std::to_string(r.blocks[i].id) + " has " +
                                     std::to_string(info.preds[i].size()) +
                                     " predecessors (>2 after merge insertion)");
      }
    }
  }

  void check_op(const Block& b, size_t oi, const Op& op) {
    const StageFlags& st = m_.stage;
    Layer layer = layer_of(op.kind);
    if (layer == Layer::Buffer && !st.bufferized)
      add(at(b, oi, op), "buffer op before bufferization stage");
    if (layer == Layer::Cfg && !st.cfg)
      add(at(b, oi, op), "cfg op before CFG lowering stage");
    if (layer == Layer::Scf && st.cfg) add(at(b, oi, op), "scf op at post-CFG stage");
    if (st.bufferized) {
      switch (op.kind) {
        case OpKind::TensorEmpty:
        case OpKind::TensorFromElements:
        case OpKind::TensorExtract:
        case OpKind::TensorInsert:
          add(at(b, oi, op), "value-semantic tensor op at post-bufferization stage");
          break;
        case OpKind::TensorMatmul:
        case OpKind::TensorTranspose:
          if (!op.results.empty())
            add(at(b, oi, op), "value-form tensor op at post-bufferization stage");
          if (st.mat_lowered) add(at(b, oi, op), "tensor op at post-matrix-lowering stage");
          break;
        default:
          break;
      }
    }
    if (st.math_folded && op.kind == OpKind::ArithConst && op.attrs.pending_math)
      add(at(b, oi, op), "pending math constant after map_math_ops stage");

    auto want = [&](bool cond, const char* what) {
      if (!cond) add(at(b, oi, op), what);
    };
    auto same_scalar = [&](ValueId a, ValueId c) {
      return valid_value(a) && valid_value(c) && ty(a).is_scalar() && ty(a) == ty(c);
    };
    for (ValueId v : op.operands)
      if (!valid_value(v)) return;
    for (ValueId v : op.results)
      if (!valid_value(v)) return;

    switch (op.kind) {
      case OpKind::ArithAdd:
      case OpKind::ArithSub:
      case OpKind::ArithMul:
        want(op.operands.size() == 2 && op.results.size() == 1,
             "needs 2 operands, 1 result");
        if (op.operands.size() == 2 && op.results.size() == 1) {
          want(same_scalar(op.operands[0], op.results[0]) &&
                   same_scalar(op.operands[1], op.results[0]),
               "operand/result types must agree");
          want(!is_bool(op.results[0]), "arithmetic on bool");
        }
        break;
      case OpKind::ArithShl:
      case OpKind::ArithShr:
        want(op.operands.size() == 2 && op.results.size() == 1,
             "needs 2 operands, 1 result");
        if (op.operands.size() == 2 && op.results.size() == 1) {
          want(same_scalar(op.operands[0], op.results[0]),
               "shift value/result type mismatch");
          want(is_signed_int(op.operands[1]), "shift amount must be a signed integer");
        }
        break;
      case OpKind::ArithCmp:
        want(op.operands.size() == 2 && op.results.size() == 1,
             "needs 2 operands, 1 result");
        if (op.operands.size() == 2 && op.results.size() == 1) {
          want(ty(op.operands[0]).is_scalar() && ty(op.operands[0]) == ty(op.operands[1]),
               "comparison operands must have one scalar type");
          want(is_bool(op.results[0]), "comparison result must be bool");
        }
        break;
      case OpKind::ArithSelect:
        want(op.operands.size() == 3 && op.results.size() == 1,
             "needs 3 operands, 1 result");
        if (op.operands.size() == 3 && op.results.size() == 1) {
          want(is_bool(op.operands[0]), "select condition must be bool");
          want(same_scalar(op.operands[1], op.results[0]) &&
                   same_scalar(op.operands[2], op.results[0]),
               "select arm/result types must agree");
        }
        break;
      case OpKind::ArithCast:
      case OpKind::ArithFixedRescale:
        want(op.operands.size() == 1 && op.results.size() == 1, "needs 1 operand, 1 result");
        if (op.operands.size() == 1 && op.results.size() == 1)
          want(ty(op.operands[0]).is_scalar() && ty(op.results[0]).is_scalar(),
               "cast needs scalar types");
        break;
      case OpKind::ArithConst:
        want(op.results.size() == 1 && ty(op.results[0]).is_scalar(),
             "const needs one scalar result");
        break;
      case OpKind::TensorEmpty:
        want(op.results.size() == 1 && ty(op.results[0]).is_matrix(),
             "tensor.empty needs a matrix result");
        break;
      case OpKind::TensorFromElements: {
        want(op.results.size() == 1 && ty(op.results[0]).is_matrix(),
             "needs a matrix result");
        if (op.results.size() == 1 && ty(op.results[0]).is_matrix()) {
          const Type& t = ty(op.results[0]);
          want((int64_t)op.operands.size() == t.elems(), "element count mismatch");
          for (ValueId v : op.operands)
            want(ty(v).is_scalar() && ty(v).scalar == t.scalar, "element type mismatch");
        }
        break;
      }
      case OpKind::TensorExtract: {
        want(op.results.size() == 1 && op.operands.size() >= 2 && op.operands.size() <= 3,
             "extract needs base + 1 or 2 indices");
        if (op.operands.size() >= 2 && op.results.size() == 1) {
          want(ty(op.operands[0]).is_matrix(), "extract base must be a matrix");
          for (size_t k = 1; k < op.operands.size(); k++)
            want(is_signed_int(op.operands[k]), "indices must be signed integers");
          if (ty(op.operands[0]).is_matrix())
            want(ty(op.results[0]).is_scalar() &&
                     ty(op.results[0]).scalar == ty(op.operands[0]).scalar,
                 "extract result must be the element type");
        }
        break;
      }
      case OpKind::TensorInsert: {
        want(op.results.size() == 1 && op.operands.size() >= 3 && op.operands.size() <= 4,
             "insert needs value + base + indices");
        if (op.operands.size() >= 3 && op.results.size() == 1) {
          want(ty(op.operands[1]).is_matrix() && ty(op.results[0]) == ty(op.operands[1]),
               "insert base/result types must agree");
          if (ty(op.operands[1]).is_matrix())
            want(ty(op.operands[0]).is_scalar() &&
                     ty(op.operands[0]).scalar == ty(op.operands[1]).scalar,
                 "insert value must be the element type");
          for (size_t k = 2; k < op.operands.size(); k++)
            want(is_signed_int(op.operands[k]), "indices must be signed integers");
        }
        break;
      }
      case OpKind::TensorMatmul: {
        if (!op.results.empty()) {
          want(op.operands.size() == 2, "value matmul needs 2 operands");
          if (op.operands.size() == 2 && ty(op.operands[0]).is_matrix() &&
              ty(op.operands[1]).is_matrix() && ty(op.results[0]).is_matrix()) {
            const Type &a = ty(op.operands[0]), &bb = ty(op.operands[1]),
                       &r2 = ty(op.results[0]);
            want(a.cols == bb.rows && r2.rows == a.rows && r2.cols == bb.cols,
                 "matmul dimension mismatch");
            want(a.scalar == bb.scalar && a.scalar == r2.scalar,
                 "matmul element type mismatch");
          } else {
            want(false, "value matmul needs matrix operands/result");
          }
        } else {
          want(op.operands.size() == 3, "buffer matmul needs A, B, out");
          for (ValueId v : op.operands)
            want(ty(v).is_buffer(), "buffer matmul operands must be buffers");
          want(op.attrs.m > 0 && op.attrs.k > 0 && op.attrs.n > 0, "matmul dims unset");
        }
        break;
      }
      case OpKind::TensorTranspose: {
        if (!op.results.empty()) {
          want(op.operands.size() == 1, "transpose needs 1 operand");
          if (op.operands.size() == 1 && ty(op.operands[0]).is_matrix() &&
              ty(op.results[0]).is_matrix()) {
            const Type &a = ty(op.operands[0]), &r2 = ty(op.results[0]);
            want(a.rows == r2.cols && a.cols == r2.rows && a.scalar == r2.scalar,
                 "transpose type mismatch");
          } else {
            want(false, "transpose needs matrix operand/result");
          }
        } else {
          want(op.operands.size() == 2, "buffer transpose needs src, dst");
          for (ValueId v : op.operands)
            want(ty(v).is_buffer(), "buffer transpose operands must be buffers");
        }
        break;
      }
      case OpKind::ScfFor: {
        want(op.regions.size() == 1 && op.regions[0].blocks.size() == 1,
             "scf.for needs one single-block region");
        if (op.regions.size() == 1 && op.regions[0].blocks.size() == 1) {
          const Block& body = op.regions[0].blocks[0];
          want(op.operands.size() >= 2, "scf.for needs bounds");
          want(body.args.size() == op.operands.size() - 1,
               "scf.for region args must be induction var + carried values");
          if (op.operands.size() >= 2)
            want(is_signed_int(op.operands[0]) && ty(op.operands[0]) == ty(op.operands[1]),
                 "scf.for bounds must be one signed integer type");
          if (!body.ops.empty() && body.ops.back().kind == OpKind::ScfYield) {
            const Op& y = body.ops.back();
            want(y.operands.size() == op.results.size(),
                 "scf.yield arity must match scf.for results");
            for (size_t k = 0; k < std::min(y.operands.size(), op.results.size()); k++)
              want(ty(y.operands[k]) == ty(op.results[k]),
                   "scf.yield type must match scf.for result");
          }
          for (size_t k = 2; k < op.operands.size(); k++) {
            if (body.args.size() > k - 1)
              want(ty(op.operands[k]) == ty(body.args[k - 1]), "carried init type mismatch");
          }
        }
        break;
      }
      case OpKind::ScfIf: {
        want(op.regions.size() == 2, "scf.if needs then and else regions");
        want(op.operands.size() == 1 && is_bool(op.operands[0]),
             "scf.if condition must be bool");
        for (auto& reg : op.regions) {
          if (reg.blocks.size() == 1 && !reg.blocks[0].ops.empty() &&
              reg.blocks[0].ops.back().kind == OpKind::ScfYield) {
            const Op& y = reg.blocks[0].ops.back();
            want(y.operands.size() == op.results.size(),
                 "scf.yield arity must match scf.if results");
            for (size_t k = 0; k < std::min(y.operands.size(), op.results.size()); k++)
              want(ty(y.operands[k]) == ty(op.results[k]),
                   "scf.yield type must match scf.if result");
          }
        }
        break;
      }
      case OpKind::ScfYield:
        break;
      case OpKind::BufAlloc: {
        want(op.results.size() == 1 && ty(op.results[0]).is_buffer(),
             "alloc needs a buffer result");
        if (op.attrs.space == BufSpace::Rom) {
          const GlobalBuf* g = m_.global(op.attrs.global);
          want(g != nullptr, "rom alloc references an unknown global");
          if (g && op.results.size() == 1 && ty(op.results[0]).is_buffer())
            want(g->size == ty(op.results[0]).size && g->elem == ty(op.results[0]).scalar,
                 "rom alloc type mismatch with global");
        }
        want(op.attrs.space != BufSpace::External,
             "external buffers appear only as function arguments");
        break;
      }
      case OpKind::BufLoad:
        want(op.operands.size() == 2 && op.results.size() == 1, "load needs buf + index");
        if (op.operands.size() == 2 && op.results.size() == 1) {
          want(ty(op.operands[0]).is_buffer(), "load base must be a buffer");
          want(is_signed_int(op.operands[1]), "load index must be a signed integer");
          if (ty(op.operands[0]).is_buffer())
            want(ty(op.results[0]).is_scalar() &&
                     ty(op.results[0]).scalar == ty(op.operands[0]).scalar,
                 "load result must be the element type");
        }
        break;
      case OpKind::BufStore:
        want(op.operands.size() == 3 && op.results.empty(),
             "store needs buf + index + value");
        if (op.operands.size() == 3) {
          want(ty(op.operands[0]).is_buffer(), "store base must be a buffer");
          want(is_signed_int(op.operands[1]), "store index must be a signed integer");
          if (ty(op.operands[0]).is_buffer())
            want(ty(op.operands[2]).is_scalar() &&
                     ty(op.operands[2]).scalar == ty(op.operands[0]).scalar,
                 "store value must be the element type");
        }
        break;
      case OpKind::BufCopy:
        want(op.operands.size() == 2 && op.results.empty(), "copy needs src + dst");
        if (op.operands.size() == 2) {
          want(ty(op.operands[0]).is_buffer() && ty(op.operands[1]).is_buffer(),
               "copy operands must be buffers");
          if (ty(op.operands[0]).is_buffer() && ty(op.operands[1]).is_buffer())
            want(ty(op.operands[0]).size == ty(op.operands[1]).size &&
                     ty(op.operands[0]).scalar == ty(op.operands[1]).scalar,
                 "copy operand shape mismatch");
        }
        break;
      case OpKind::BufDealloc:
        want(op.operands.size() == 1 && ty(op.operands[0]).is_buffer(),
             "dealloc needs a buffer");
        break;
      case OpKind::CfgBr:
        want(op.succs.size() == 1, "br needs one successor");
        break;
      case OpKind::CfgCondBr:
        want(op.succs.size() == 2 && op.operands.size() == 1,
             "cond_br needs cond + 2 successors");
        if (op.operands.size() == 1) want(is_bool(op.operands[0]), "cond must be bool");
        break;
      case OpKind::FuncCall: {
        const IrFunction* callee = m_.find(op.attrs.callee);
        want(callee != nullptr, "call to unknown function");
        if (callee) {
          want(op.operands.size() == callee->params.size(), "call arity mismatch");
          for (size_t k = 0; k < std::min(op.operands.size(), callee->params.size()); k++)
            want(ty(op.operands[k]) == callee->type_of(callee->params[k]),
                 "call argument type mismatch");
        }
        break;
      }
      case OpKind::FuncReturn: {
        if (f_->ret.is_none())
          want(op.operands.empty(), "void function returns a value");
        else
          want(op.operands.size() == 1 && ty(op.operands[0]) == f_->ret,
               "return type mismatch");
        break;
      }
    }
  }
};

}  // namespace

std::vector<Violation> verify(const IrModule& m) { return Verifier(m).run(); }

}  // namespace hjl::ir
