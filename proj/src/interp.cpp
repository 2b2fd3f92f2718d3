#include <cmath>
#include <map>

#include "hjlc/interp.hpp"

namespace hjl {

using namespace ir;

namespace {

struct TensorVal {
  int rows = 0, cols = 0;
  std::vector<int64_t> elems;  // always row-major internally
};

struct Cell {
  int64_t scalar = 0;
  TensorVal tensor;
  int buffer = -1;  // index into buffer table when the value is a buffer
};

struct Trap {
  std::string msg;
  SrcSpan loc;
};

class Interp {
 public:
  Interp(const IrModule& m) : m_(m) {}

  InterpResult run(const std::vector<InputValue>& args) {
    InterpResult res;
    const IrFunction* f = m_.find(m_.entry);
    if (!f) {
      res.error = "entry function not found";
      return res;
    }
    try {
      std::vector<Cell> outputs_cells;
      Cell ret = call(*f, args);
      if (!f->ret.is_none()) {
        if (f->ret.is_scalar()) {
          res.outputs.push_back(ret.scalar);
        } else if (f->ret.is_matrix()) {
          for (auto v : ret.tensor.elems) res.outputs.push_back(v);
        }
      }
      // External out-buffers (by-ref outputs) appear after the return value.
      for (size_t i = 0; i < f->params.size(); i++) {
        if (i < f->param_space.size() && f->param_space[i] == BufSpace::External) {
          for (auto v : arg_buffers_[i]) res.outputs.push_back(v);
        }
      }
      res.ok = true;
    } catch (const Trap& t) {
      res.error = t.msg;
      res.error_loc = t.loc;
    }
    return res;
  }

 private:
  const IrModule& m_;
  std::vector<std::vector<int64_t>> buffers_;
  std::vector<bool> buffer_rom_;
  std::map<size_t, std::vector<int64_t>> arg_buffers_;  // external arg results

  [[noreturn]] void trap(const Op& op, const std::string& msg) {
    throw Trap{msg, op.span};
  }

  Cell call(const IrFunction& f, const std::vector<InputValue>& args) {
    if (args.size() != f.params.size())
      throw Trap{"argument count mismatch: got " + std::to_string(args.size()) +
                     ", entry takes " + std::to_string(f.params.size()),
                 {}};
    std::vector<Cell> env(f.vtypes.size());
    for (size_t i = 0; i < f.params.size(); i++) {
      const Type& pt = f.type_of(f.params[i]);
      Cell& c = env[f.params[i]];
      if (pt.is_scalar()) {
        if (!args[i].is_scalar) throw Trap{"argument " + std::to_string(i) + " must be scalar", {}};
        c.scalar = wrap_to(pt.scalar, args[i].scalar);
      } else if (pt.is_matrix()) {
        if ((int64_t)args[i].elems.size() != pt.elems())
          throw Trap{"argument " + std::to_string(i) + " element count mismatch", {}};
        c.tensor.rows = pt.rows;
        c.tensor.cols = pt.cols;
        c.tensor.elems = args[i].elems;
        for (auto& v : c.tensor.elems) v = wrap_to(pt.scalar, v);
      } else if (pt.is_buffer()) {
        if ((int64_t)args[i].elems.size() != pt.size)
          throw Trap{"argument " + std::to_string(i) + " element count mismatch", {}};
        c.buffer = (int)buffers_.size();
        buffers_.push_back(args[i].elems);
        for (auto& v : buffers_.back()) v = wrap_to(pt.scalar, v);
        buffer_rom_.push_back(false);
      }
    }
    Cell ret = exec_region(f, f.body, env, /*cfg=*/m_.stage.cfg);
    // Snapshot external buffers for the caller.
    for (size_t i = 0; i < f.params.size(); i++) {
      if (i < f.param_space.size() && f.param_space[i] == BufSpace::External)
        arg_buffers_[i] = buffers_[env[f.params[i]].buffer];
    }
    return ret;
  }

  // Executes a region; returns the func.return value cell (or empty).
  Cell exec_region(const IrFunction& f, const Region& r, std::vector<Cell>& env, bool cfg) {
    if (!cfg) {
      const Block& b = r.blocks[0];
      for (auto& op : b.ops) {
        if (op.kind == OpKind::FuncReturn)
          return op.operands.empty() ? Cell{} : env[op.operands[0]];
        exec_op(f, op, env);
      }
      return {};
    }
    // CFG execution.
    std::map<int, const Block*> by_id;
    for (auto& b : r.blocks) by_id[b.id] = &b;
    const Block* cur = &r.blocks[0];
    int64_t steps = 0;
    while (true) {
      if (++steps > 100000000) throw Trap{"interpreter step budget exceeded", {}};
      for (auto& op : cur->ops) {
        if (op.kind == OpKind::FuncReturn)
          return op.operands.empty() ? Cell{} : env[op.operands[0]];
        if (op.kind == OpKind::CfgBr || op.kind == OpKind::CfgCondBr) {
          int side = 0;
          if (op.kind == OpKind::CfgCondBr) side = env[op.operands[0]].scalar ? 0 : 1;
          const Block* target = by_id.at(op.succs[side]);
          std::vector<Cell> vals;
          for (ValueId v : op.succ_args[side]) vals.push_back(env[v]);
          for (size_t k = 0; k < target->args.size(); k++)
            env[target->args[k]] = std::move(vals[k]);
          cur = target;
          break;
        }
        exec_op(f, op, env);
      }
    }
  }

  int64_t sc(std::vector<Cell>& env, ValueId v) { return env[v].scalar; }

  // Index arithmetic honors the stage's base (1-based pre-normalization).
  int64_t flat_index(const Op& op, const Type& t, std::vector<Cell>& env, size_t first,
                     size_t count) {
    int64_t base = m_.stage.zero_based ? 0 : 1;
    if (count == 1) {
      int64_t i = sc(env, op.operands[first]) - base;
      if (i < 0 || i >= t.elems())
        trap(op, "index out of bounds: " + std::to_string(i + base) + " on " + type_name(t));
      return i;  // vectors lay out identically in either element order
    }
    int64_t r = sc(env, op.operands[first]) - base;
    int64_t c = sc(env, op.operands[first + 1]) - base;
    if (r < 0 || r >= t.rows || c < 0 || c >= t.cols)
      trap(op, "index out of bounds: (" + std::to_string(r + base) + ", " +
                   std::to_string(c + base) + ") on " + type_name(t));
    return r * t.cols + c;
  }

  void exec_op(const IrFunction& f, const Op& op, std::vector<Cell>& env) {
    auto res_type = [&](int i = 0) -> const Type& { return f.type_of(op.results[i]); };
    switch (op.kind) {
      case OpKind::ArithConst: {
        int64_t v;
        const ScalarType& t = res_type().scalar;
        if (op.attrs.pending_math) {
          double x = op.attrs.math_fn == "atan" ? std::atan(op.attrs.math_arg)
                                                : op.attrs.math_arg;
          v = quantize_real(t, x);
        } else {
          v = wrap_to(t, op.attrs.ival);
        }
        env[op.results[0]].scalar = v;
        return;
      }
      case OpKind::ArithAdd:
        env[op.results[0]].scalar =
            eval_add(res_type().scalar, sc(env, op.operands[0]), sc(env, op.operands[1]));
        return;
      case OpKind::ArithSub:
        env[op.results[0]].scalar =
            eval_sub(res_type().scalar, sc(env, op.operands[0]), sc(env, op.operands[1]));
        return;
      case OpKind::ArithMul:
        env[op.results[0]].scalar =
            eval_mul(res_type().scalar, sc(env, op.operands[0]), sc(env, op.operands[1]));
        return;
      case OpKind::ArithShl:
        env[op.results[0]].scalar =
            eval_shl(res_type().scalar, sc(env, op.operands[0]), sc(env, op.operands[1]));
        return;
      case OpKind::ArithShr:
        env[op.results[0]].scalar =
            eval_shr(res_type().scalar, sc(env, op.operands[0]), sc(env, op.operands[1]));
        return;
      case OpKind::ArithCmp: {
        const Type& t = f.type_of(op.operands[0]);
        int64_t a = sc(env, op.operands[0]), b = sc(env, op.operands[1]);
        bool r = false;
        bool usign = t.scalar.kind == ScalarType::Kind::UInt;
        auto ua = (uint64_t)a, ub = (uint64_t)b;
        switch (op.attrs.pred) {
          case CmpPred::Lt: r = usign ? ua < ub : a < b; break;
          case CmpPred::Gt: r = usign ? ua > ub : a > b; break;
          case CmpPred::Le: r = usign ? ua <= ub : a <= b; break;
          case CmpPred::Ge: r = usign ? ua >= ub : a >= b; break;
          case CmpPred::Eq: r = a == b; break;
          case CmpPred::Ne: r = a != b; break;
        }
        env[op.results[0]].scalar = r ? 1 : 0;
        return;
      }
      case OpKind::ArithSelect:
        env[op.results[0]] =
            env[op.operands[0]].scalar ? env[op.operands[1]] : env[op.operands[2]];
        return;
      case OpKind::ArithCast:
      case OpKind::ArithFixedRescale: {
        const Type& from = f.type_of(op.operands[0]);
        const Type& to = res_type();
        if (from.is_scalar() && to.is_scalar()) {
          env[op.results[0]].scalar =
              eval_cast(to.scalar, from.scalar, sc(env, op.operands[0]));
        } else {
          env[op.results[0]] = env[op.operands[0]];  // same-type slot copy
        }
        return;
      }
      case OpKind::TensorEmpty: {
        const Type& t = res_type();
        TensorVal tv;
        tv.rows = t.rows;
        tv.cols = t.cols;
        tv.elems.assign((size_t)t.elems(), 0);
        env[op.results[0]].tensor = std::move(tv);
        return;
      }
      case OpKind::TensorFromElements: {
        const Type& t = res_type();
        TensorVal tv;
        tv.rows = t.rows;
        tv.cols = t.cols;
        tv.elems.assign((size_t)t.elems(), 0);
        // Operand order follows the type's element order.
        for (int64_t i = 0; i < t.elems(); i++) {
          int64_t v = sc(env, op.operands[i]);
          if (t.row_major) {
            tv.elems[i] = v;
          } else {
            int64_t r = i % t.rows, c = i / t.rows;
            tv.elems[r * t.cols + c] = v;
          }
        }
        env[op.results[0]].tensor = std::move(tv);
        return;
      }
      case OpKind::TensorExtract: {
        const Type& t = f.type_of(op.operands[0]);
        TensorVal& tv = env[op.operands[0]].tensor;
        int64_t idx = flat_index(op, t, env, 1, op.operands.size() - 1);
        env[op.results[0]].scalar = tv.elems[idx];
        return;
      }
      case OpKind::TensorInsert: {
        const Type& t = f.type_of(op.operands[1]);
        TensorVal tv = env[op.operands[1]].tensor;  // value semantics
        int64_t idx = flat_index(op, t, env, 2, op.operands.size() - 2);
        tv.elems[idx] = sc(env, op.operands[0]);
        env[op.results[0]].tensor = std::move(tv);
        return;
      }
      case OpKind::TensorMatmul: {
        if (!op.results.empty()) {
          const Type& ta = f.type_of(op.operands[0]);
          const Type& tb = f.type_of(op.operands[1]);
          const ScalarType& et = res_type().scalar;
          TensorVal& A = env[op.operands[0]].tensor;
          TensorVal& B = env[op.operands[1]].tensor;
          TensorVal R;
          R.rows = ta.rows;
          R.cols = tb.cols;
          R.elems.assign((size_t)ta.rows * tb.cols, 0);
          for (int i = 0; i < ta.rows; i++)
            for (int j = 0; j < tb.cols; j++) {
              int64_t acc = 0;
              for (int kk = 0; kk < ta.cols; kk++) {
                int64_t p = eval_mul(et, A.elems[i * ta.cols + kk], B.elems[kk * tb.cols + j]);
                acc = eval_add(et, acc, p);
              }
              R.elems[i * tb.cols + j] = acc;
            }
          env[op.results[0]].tensor = std::move(R);
          return;
        }
        // Buffer form; the lhs may be consumed transposed.
        auto& A = buffers_[env[op.operands[0]].buffer];
        auto& B = buffers_[env[op.operands[1]].buffer];
        int ob = env[op.operands[2]].buffer;
        if (buffer_rom_[ob]) trap(op, "write to read-only buffer");
        auto& O = buffers_[ob];
        const ScalarType& et = f.type_of(op.operands[2]).scalar;
        int64_t m = op.attrs.m, k = op.attrs.k, n = op.attrs.n;
        for (int64_t i = 0; i < m; i++)
          for (int64_t j = 0; j < n; j++) {
            int64_t acc = 0;
            for (int64_t kk = 0; kk < k; kk++) {
              // transpose_lhs: A holds a (k x m) row-major matrix read as (m x k).
              int64_t a = op.attrs.transpose_lhs ? A[kk * m + i] : A[i * k + kk];
              acc = eval_add(et, acc, eval_mul(et, a, B[kk * n + j]));
            }
            O[i * n + j] = acc;
          }
        return;
      }
      case OpKind::TensorTranspose: {
        if (!op.results.empty()) {
          const Type& ta = f.type_of(op.operands[0]);
          TensorVal& A = env[op.operands[0]].tensor;
          TensorVal R;
          R.rows = ta.cols;
          R.cols = ta.rows;
          R.elems.assign(A.elems.size(), 0);
          for (int r = 0; r < ta.rows; r++)
            for (int c = 0; c < ta.cols; c++) R.elems[c * ta.rows + r] = A.elems[r * ta.cols + c];
          env[op.results[0]].tensor = std::move(R);
          return;
        }
        auto& A = buffers_[env[op.operands[0]].buffer];
        int ob = env[op.operands[1]].buffer;
        if (buffer_rom_[ob]) trap(op, "write to read-only buffer");
        auto& O = buffers_[ob];
        int64_t rows = op.attrs.rows, cols = op.attrs.cols;
        for (int64_t r = 0; r < rows; r++)
          for (int64_t c = 0; c < cols; c++) O[c * rows + r] = A[r * cols + c];
        return;
      }
      case OpKind::ScfFor: {
        int64_t lb = sc(env, op.operands[0]);
        int64_t ub = sc(env, op.operands[1]);
        const Block& body = op.regions[0].blocks[0];
        size_t carried = op.operands.size() - 2;
        for (size_t k = 0; k < carried; k++)
          env[body.args[k + 1]] = env[op.operands[k + 2]];
        int64_t end = op.attrs.half_open ? ub : ub + 1;
        for (int64_t iv = lb; iv < end; iv++) {
          env[body.args[0]].scalar = iv;
          for (auto& bop : body.ops) {
            if (bop.kind == OpKind::ScfYield) {
              // Yields feed the next iteration's carried args.
              std::vector<Cell> vals;
              for (ValueId v : bop.operands) vals.push_back(env[v]);
              for (size_t k = 0; k < vals.size() && k < carried; k++)
                env[body.args[k + 1]] = vals[k];
              for (size_t k = 0; k < op.results.size() && k < vals.size(); k++)
                env[op.results[k]] = std::move(vals[k]);
              break;
            }
            exec_op(f, bop, env);
          }
        }
        // Zero-trip loops pass the inits straight through.
        if (lb >= end) {
          for (size_t k = 0; k < op.results.size() && k < carried; k++)
            env[op.results[k]] = env[op.operands[k + 2]];
        }
        return;
      }
      case OpKind::ScfIf: {
        const Region& reg = env[op.operands[0]].scalar ? op.regions[0] : op.regions[1];
        const Block& b = reg.blocks[0];
        for (auto& bop : b.ops) {
          if (bop.kind == OpKind::ScfYield) {
            for (size_t k = 0; k < op.results.size() && k < bop.operands.size(); k++)
              env[op.results[k]] = env[bop.operands[k]];
            break;
          }
          exec_op(f, bop, env);
        }
        return;
      }
      case OpKind::ScfYield:
        return;  // handled by the enclosing op
      case OpKind::BufAlloc: {
        const Type& t = res_type();
        int id = (int)buffers_.size();
        if (op.attrs.space == BufSpace::Rom) {
          const GlobalBuf* g = m_.global(op.attrs.global);
          if (!g) trap(op, "unknown global " + op.attrs.global);
          buffers_.push_back(g->data);
          buffer_rom_.push_back(true);
        } else {
          buffers_.emplace_back((size_t)t.size, 0);
          buffer_rom_.push_back(false);
        }
        env[op.results[0]].buffer = id;
        return;
      }
      case OpKind::BufLoad: {
        const Type& t = f.type_of(op.operands[0]);
        auto& buf = buffers_[env[op.operands[0]].buffer];
        int64_t idx = sc(env, op.operands[1]);
        if (idx < 0 || idx >= t.size)
          trap(op, "buffer index out of bounds: " + std::to_string(idx));
        env[op.results[0]].scalar = buf[idx];
        return;
      }
      case OpKind::BufStore: {
        const Type& t = f.type_of(op.operands[0]);
        int bid = env[op.operands[0]].buffer;
        if (buffer_rom_[bid]) trap(op, "write to read-only buffer");
        auto& buf = buffers_[bid];
        int64_t idx = sc(env, op.operands[1]);
        if (idx < 0 || idx >= t.size)
          trap(op, "buffer index out of bounds: " + std::to_string(idx));
        buf[idx] = sc(env, op.operands[2]);
        return;
      }
      case OpKind::BufCopy: {
        auto& src = buffers_[env[op.operands[0]].buffer];
        int db = env[op.operands[1]].buffer;
        if (buffer_rom_[db]) trap(op, "write to read-only buffer");
        buffers_[db] = src;
        return;
      }
      case OpKind::BufDealloc:
        return;
      case OpKind::FuncCall: {
        const IrFunction* callee = m_.find(op.attrs.callee);
        if (!callee) trap(op, "call to unknown function " + op.attrs.callee);
        std::vector<InputValue> args;
        for (ValueId v : op.operands) {
          const Type& t = f.type_of(v);
          InputValue iv;
          if (t.is_scalar()) {
            iv.scalar = env[v].scalar;
          } else if (t.is_matrix()) {
            iv.is_scalar = false;
            iv.elems = env[v].tensor.elems;
          } else {
            trap(op, "unsupported call argument type");
          }
          args.push_back(std::move(iv));
        }
        Cell r = call(*callee, args);
        if (!op.results.empty()) env[op.results[0]] = std::move(r);
        return;
      }
      case OpKind::FuncReturn:
      case OpKind::CfgBr:
      case OpKind::CfgCondBr:
        return;  // handled by exec_region
    }
  }
};

}  // namespace

InterpResult interpret(const IrModule& m, const std::vector<InputValue>& args) {
  return Interp(m).run(args);
}

}  // namespace hjl
