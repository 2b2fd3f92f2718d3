#include <map>
#include <set>

#include "hjlc/passes.hpp"

namespace hjl::passes {

using namespace ir;

namespace {

// ---------------------------------------------------------------------------
// bufferize: value-semantic tensors become memory buffers. Deliberately
// analysis-free: insert chains rooted at a region-local allocation collapse to
// in-place stores; anything else gets copy-before-write. Loop-carried tensors
// travel through a carry buffer with a copy-in, per-iteration write-back
// copies, and a materialized result buffer.
// ---------------------------------------------------------------------------

class Bufferize {
 public:
  Bufferize(const IrModule& m, IrFunction& src) : m_(m), src_(src) {
    walk_ops(src.body, [&](const Op& op) {
      for (ValueId v : op.operands) uses_[v]++;
    });
  }

  IrFunction run() {
    IrFunction out;
    out.name = src_.name;
    out.ret = src_.ret.is_matrix()
                  ? Type::buffer(src_.ret.elems(), src_.ret.scalar)
                  : src_.ret;
    out.body.blocks.push_back({});
    out_ = &out;
    for (ValueId p : src_.params) {
      const Type& t = src_.type_of(p);
      Type nt = t.is_matrix() ? Type::buffer(t.elems(), t.scalar) : t;
      ValueId np = out.new_value(nt, src_.vnames[p]);
      out.params.push_back(np);
      out.param_space.push_back(BufSpace::Local);
      out.body.blocks[0].args.push_back(np);
      env_[p] = np;
    }
    scopes_.push_back({});
    rewrite(src_.body.blocks[0], out.body.blocks[0]);
    scopes_.pop_back();
    return out;
  }

 private:
  const IrModule& m_;
  IrFunction& src_;
  IrFunction* out_ = nullptr;
  std::map<ValueId, int> uses_;
  std::map<ValueId, ValueId> env_;
  std::vector<std::set<ValueId>> scopes_;  // buffers allocated per region

  ValueId nv(Type t) { return out_->new_value(t); }
  ValueId lookup(ValueId v) { return env_.at(v); }

  ValueId emit_alloc(Block& b, const Type& mt) {
    Op op;
    op.kind = OpKind::BufAlloc;
    ValueId res = nv(Type::buffer(mt.is_matrix() ? mt.elems() : mt.size, mt.scalar));
    op.results.push_back(res);
    b.ops.push_back(std::move(op));
    scopes_.back().insert(res);
    return res;
  }
  void emit_copy(Block& b, ValueId src, ValueId dst, SrcSpan span) {
    Op op;
    op.kind = OpKind::BufCopy;
    op.span = span;
    op.operands = {src, dst};
    b.ops.push_back(std::move(op));
  }
  ValueId emit_const(Block& b, int64_t v, Type t) {
    Op op;
    op.kind = OpKind::ArithConst;
    op.attrs.ival = v;
    ValueId res = nv(t);
    op.results.push_back(res);
    b.ops.push_back(std::move(op));
    return res;
  }

  // Linearized element index in i32.
  ValueId linear_index(Block& b, const Op& op, const Type& mt, size_t first) {
    Type i32 = Type::scalar_t(ScalarType::sint(32));
    auto as_i32 = [&](ValueId old) {
      ValueId v = lookup(old);
      if (src_.type_of(old).scalar.width == 32) return v;
      Op c;
      c.kind = OpKind::ArithCast;
      c.operands = {v};
      ValueId res = nv(i32);
      c.results.push_back(res);
      b.ops.push_back(std::move(c));
      return res;
    };
    if (op.operands.size() - first == 1) return as_i32(op.operands[first]);
    ValueId r = as_i32(op.operands[first]);
    ValueId c = as_i32(op.operands[first + 1]);
    ValueId cols = emit_const(b, mt.cols, i32);
    Op mul;
    mul.kind = OpKind::ArithMul;
    mul.operands = {r, cols};
    ValueId rm = nv(i32);
    mul.results.push_back(rm);
    b.ops.push_back(std::move(mul));
    Op add;
    add.kind = OpKind::ArithAdd;
    add.operands = {rm, c};
    ValueId idx = nv(i32);
    add.results.push_back(idx);
    b.ops.push_back(std::move(add));
    return idx;
  }

  void rewrite(const Block& in, Block& out) {
    for (auto& op : in.ops) {
      switch (op.kind) {
        case OpKind::TensorEmpty: {
          env_[op.results[0]] = emit_alloc(out, src_.type_of(op.results[0]));
          break;
        }
        case OpKind::TensorFromElements: {
          const Type& mt = src_.type_of(op.results[0]);
          if (op.attrs.const_table) {
            Op rom;
            rom.kind = OpKind::BufAlloc;
            rom.attrs.space = BufSpace::Rom;
            rom.attrs.global = op.attrs.global;
            rom.span = op.span;
            ValueId res = nv(Type::buffer(mt.elems(), mt.scalar));
            rom.results.push_back(res);
            out.ops.push_back(std::move(rom));
            env_[op.results[0]] = res;
            break;
          }
          ValueId buf = emit_alloc(out, mt);
          Type i32 = Type::scalar_t(ScalarType::sint(32));
          for (size_t i = 0; i < op.operands.size(); i++) {
            ValueId idx = emit_const(out, (int64_t)i, i32);
            Op st;
            st.kind = OpKind::BufStore;
            st.span = op.span;
            st.operands = {buf, idx, lookup(op.operands[i])};
            out.ops.push_back(std::move(st));
          }
          env_[op.results[0]] = buf;
          break;
        }
        case OpKind::TensorExtract: {
          const Type& mt = src_.type_of(op.operands[0]);
          ValueId idx = linear_index(out, op, mt, 1);
          Op ld;
          ld.kind = OpKind::BufLoad;
          ld.span = op.span;
          ld.operands = {lookup(op.operands[0]), idx};
          ValueId res = nv(src_.type_of(op.results[0]));
          ld.results.push_back(res);
          out.ops.push_back(std::move(ld));
          env_[op.results[0]] = res;
          break;
        }
        case OpKind::TensorInsert: {
          const Type& mt = src_.type_of(op.operands[1]);
          ValueId src_buf = lookup(op.operands[1]);
          bool in_place = uses_[op.operands[1]] == 1 && region_local(src_buf);
          ValueId dst_buf = src_buf;
          if (!in_place) {
            dst_buf = emit_alloc(out, mt);
            emit_copy(out, src_buf, dst_buf, op.span);
          }
          ValueId idx = linear_index(out, op, mt, 2);
          Op st;
          st.kind = OpKind::BufStore;
          st.span = op.span;
          st.operands = {dst_buf, idx, lookup(op.operands[0])};
          out.ops.push_back(std::move(st));
          env_[op.results[0]] = dst_buf;
          break;
        }
        case OpKind::TensorMatmul: {
          const Type& ta = src_.type_of(op.operands[0]);
          const Type& tr = src_.type_of(op.results[0]);
          ValueId o = emit_alloc(out, tr);
          Op mm;
          mm.kind = OpKind::TensorMatmul;
          mm.span = op.span;
          mm.operands = {lookup(op.operands[0]), lookup(op.operands[1]), o};
          mm.attrs.m = tr.rows;
          mm.attrs.k = ta.cols;
          mm.attrs.n = tr.cols;
          out.ops.push_back(std::move(mm));
          env_[op.results[0]] = o;
          break;
        }
        case OpKind::TensorTranspose: {
          const Type& ta = src_.type_of(op.operands[0]);
          ValueId o = emit_alloc(out, src_.type_of(op.results[0]));
          Op tr;
          tr.kind = OpKind::TensorTranspose;
          tr.span = op.span;
          tr.operands = {lookup(op.operands[0]), o};
          tr.attrs.rows = ta.rows;
          tr.attrs.cols = ta.cols;
          out.ops.push_back(std::move(tr));
          env_[op.results[0]] = o;
          break;
        }
        case OpKind::ScfFor:
          rewrite_for(op, out);
          break;
        case OpKind::ScfIf:
          rewrite_if(op, out);
          break;
        case OpKind::ScfYield:
          break;  // parents rebuild yields
        default: {
          Op nop;
          nop.kind = op.kind;
          nop.attrs = op.attrs;
          nop.span = op.span;
          for (ValueId v : op.operands) nop.operands.push_back(lookup(v));
          for (ValueId r : op.results) {
            ValueId res = nv(src_.type_of(r));
            nop.results.push_back(res);
            env_[r] = res;
          }
          out.ops.push_back(std::move(nop));
          break;
        }
      }
    }
  }

  bool region_local(ValueId buf) const { return scopes_.back().count(buf) > 0; }

  void rewrite_for(const Op& op, Block& out) {
    const Block& body = op.regions[0].blocks[0];
    const Op& yield = body.ops.back();
    // Split carried values into scalars (stay SSA-carried) and tensors
    // (threaded through carry buffers).
    struct TensorCarry {
      size_t pos;         // carried index (0-based over op.operands[2..])
      ValueId carry_buf;  // allocated before the loop
    };
    std::vector<TensorCarry> tcarries;
    std::vector<size_t> scarries;
    for (size_t k = 2; k < op.operands.size(); k++) {
      if (src_.type_of(op.operands[k]).is_matrix()) {
        TensorCarry tc;
        tc.pos = k - 2;
        const Type& mt = src_.type_of(op.operands[k]);
        tc.carry_buf = emit_alloc(out, mt);
        emit_copy(out, lookup(op.operands[k]), tc.carry_buf, op.span);
        tcarries.push_back(tc);
      } else {
        scarries.push_back(k - 2);
      }
    }
    Op nop;
    nop.kind = OpKind::ScfFor;
    nop.attrs = op.attrs;
    nop.span = op.span;
    nop.operands = {lookup(op.operands[0]), lookup(op.operands[1])};
    nop.regions.resize(1);
    nop.regions[0].blocks.push_back({});
    Block& nbody = nop.regions[0].blocks[0];
    ValueId iv = body.args[0];
    ValueId niv = nv(src_.type_of(iv));
    nbody.args.push_back(niv);
    env_[iv] = niv;
    for (size_t k : scarries) {
      nop.operands.push_back(lookup(op.operands[k + 2]));
      ValueId arg = nv(src_.type_of(body.args[k + 1]));
      nbody.args.push_back(arg);
      env_[body.args[k + 1]] = arg;
    }
    for (auto& tc : tcarries) env_[body.args[tc.pos + 1]] = tc.carry_buf;

    scopes_.push_back({});
    rewrite(body, nbody);
    // Write-back copies for tensor carries whose yield isn't the carry buffer.
    for (auto& tc : tcarries) {
      ValueId yv = lookup(yield.operands[tc.pos]);
      if (yv != tc.carry_buf) emit_copy(nbody, yv, tc.carry_buf, op.span);
    }
    Op ny;
    ny.kind = OpKind::ScfYield;
    ny.span = yield.span;
    for (size_t k : scarries) ny.operands.push_back(lookup(yield.operands[k]));
    nbody.ops.push_back(std::move(ny));
    scopes_.pop_back();

    for (size_t k : scarries) {
      ValueId res = nv(src_.type_of(op.results[k]));
      nop.results.push_back(res);
      env_[op.results[k]] = res;
    }
    out.ops.push_back(std::move(nop));
    // Loop tensor results materialize into fresh buffers.
    for (auto& tc : tcarries) {
      const Type& mt = src_.type_of(op.results[tc.pos]);
      ValueId r = emit_alloc(out, mt);
      emit_copy(out, tc.carry_buf, r, op.span);
      env_[op.results[tc.pos]] = r;
    }
  }

  void rewrite_if(const Op& op, Block& out) {
    // Tensor results land in pre-allocated buffers written by both arms.
    std::vector<std::pair<size_t, ValueId>> tres;
    std::vector<size_t> sres;
    for (size_t k = 0; k < op.results.size(); k++) {
      if (src_.type_of(op.results[k]).is_matrix()) {
        ValueId buf = emit_alloc(out, src_.type_of(op.results[k]));
        tres.push_back({k, buf});
      } else {
        sres.push_back(k);
      }
    }
    Op nop;
    nop.kind = OpKind::ScfIf;
    nop.span = op.span;
    nop.operands = {lookup(op.operands[0])};
    nop.regions.resize(2);
    for (int r = 0; r < 2; r++) {
      nop.regions[r].blocks.push_back({});
      Block& arm = nop.regions[r].blocks[0];
      scopes_.push_back({});
      const Block& src_arm = op.regions[r].blocks[0];
      rewrite(src_arm, arm);
      const Op& yield = src_arm.ops.back();
      for (auto& [k, buf] : tres) emit_copy(arm, lookup(yield.operands[k]), buf, op.span);
      Op ny;
      ny.kind = OpKind::ScfYield;
      ny.span = yield.span;
      for (size_t k : sres) ny.operands.push_back(lookup(yield.operands[k]));
      arm.ops.push_back(std::move(ny));
      scopes_.pop_back();
    }
    for (size_t k : sres) {
      ValueId res = nv(src_.type_of(op.results[k]));
      nop.results.push_back(res);
      env_[op.results[k]] = res;
    }
    out.ops.push_back(std::move(nop));
    for (auto& [k, buf] : tres) env_[op.results[k]] = buf;
  }
};

// ---------------------------------------------------------------------------
// lower_matrix_ops: buffer-form matmul/transpose become explicit loop nests;
// a transpose only feeding a matmul lhs folds into swapped indexing instead.
// ---------------------------------------------------------------------------

class MatrixLowering {
 public:
  explicit MatrixLowering(IrFunction& f) : f_(f) {}

  void run() {
    fold_transposes(f_.body);
    expand_region(f_.body);
  }

 private:
  IrFunction& f_;

  void fold_transposes(Region& r) {
    // Count buffer uses across the function once per folding sweep.
    std::map<ValueId, int> uses;
    std::map<ValueId, int> writes;
    walk_ops(f_.body, [&](const Op& op) {
      for (ValueId v : op.operands) uses[v]++;
    });
    for (auto& b : r.blocks) {
      for (size_t oi = 0; oi < b.ops.size(); oi++) {
        Op& op = b.ops[oi];
        for (auto& nested : op.regions) fold_transposes(nested);
        if (op.kind != OpKind::TensorTranspose || !op.results.empty()) continue;
        ValueId dst = op.operands[1];
        // dst must feed exactly one matmul lhs and nothing else.
        Op* consumer = nullptr;
        int count = 0;
        walk_ops(f_.body, [&](Op& other) {
          for (size_t k = 0; k < other.operands.size(); k++) {
            if (other.operands[k] != dst || &other == &op) continue;
            count++;
            if (other.kind == OpKind::TensorMatmul && other.results.empty() && k == 0)
              consumer = &other;
            else
              consumer = nullptr;
          }
        });
        if (count != 1 || !consumer || consumer->attrs.transpose_lhs) continue;
        consumer->operands[0] = op.operands[0];
        consumer->attrs.transpose_lhs = true;
        b.ops.erase(b.ops.begin() + oi);
        erase_alloc(dst);
        oi--;
      }
    }
    (void)writes;
  }

  void erase_alloc(ValueId buf) {
    for (auto& b : f_.body.blocks) erase_alloc_in(b, buf);
  }
  void erase_alloc_in(Block& b, ValueId buf) {
    for (size_t i = 0; i < b.ops.size(); i++) {
      if (b.ops[i].kind == OpKind::BufAlloc && b.ops[i].results[0] == buf) {
        b.ops.erase(b.ops.begin() + i);
        return;
      }
      for (auto& r : b.ops[i].regions)
        for (auto& nb : r.blocks) erase_alloc_in(nb, buf);
    }
  }

  ValueId emit_const(std::vector<Op>& ops, int64_t v, Type t) {
    Op op;
    op.kind = OpKind::ArithConst;
    op.attrs.ival = v;
    ValueId res = f_.new_value(t);
    op.results.push_back(res);
    ops.push_back(std::move(op));
    return res;
  }

  void expand_region(Region& r) {
    for (auto& b : r.blocks) {
      for (size_t oi = 0; oi < b.ops.size(); oi++) {
        for (auto& nested : b.ops[oi].regions) expand_region(nested);
        if (b.ops[oi].kind == OpKind::TensorMatmul && b.ops[oi].results.empty()) {
          std::vector<Op> repl = expand_matmul(b.ops[oi]);
          b.ops.erase(b.ops.begin() + oi);
          b.ops.insert(b.ops.begin() + oi, std::make_move_iterator(repl.begin()),
                       std::make_move_iterator(repl.end()));
          oi += repl.size() - 1;
        } else if (b.ops[oi].kind == OpKind::TensorTranspose && b.ops[oi].results.empty()) {
          std::vector<Op> repl = expand_transpose(b.ops[oi]);
          b.ops.erase(b.ops.begin() + oi);
          b.ops.insert(b.ops.begin() + oi, std::make_move_iterator(repl.begin()),
                       std::make_move_iterator(repl.end()));
          oi += repl.size() - 1;
        }
      }
    }
  }

  // i/j/k nest accumulating into a carried scalar, one store per (i, j).
  std::vector<Op> expand_matmul(const Op& mm) {
    std::vector<Op> prelude;
    Type i32 = Type::scalar_t(ScalarType::sint(32));
    ScalarType et = f_.type_of(mm.operands[2]).scalar;
    Type elem = Type::scalar_t(et);
    int64_t M = mm.attrs.m, K = mm.attrs.k, N = mm.attrs.n;
    ValueId a = mm.operands[0], bbuf = mm.operands[1], obuf = mm.operands[2];
    ValueId c0 = emit_const(prelude, 0, i32);
    ValueId cM = emit_const(prelude, M, i32);
    ValueId cN = emit_const(prelude, N, i32);
    ValueId cK = emit_const(prelude, K, i32);
    ValueId zero = emit_const(prelude, 0, elem);

    auto make_for = [&](ValueId lb, ValueId ub) {
      Op op;
      op.kind = OpKind::ScfFor;
      op.attrs.half_open = true;
      op.span = mm.span;
      op.operands = {lb, ub};
      op.regions.resize(1);
      op.regions[0].blocks.push_back({});
      return op;
    };

    Op iloop = make_for(c0, cM);
    ValueId i = f_.new_value(i32);
    iloop.regions[0].blocks[0].args.push_back(i);
    {
      Block& ib = iloop.regions[0].blocks[0];
      Op jloop = make_for(c0, cN);
      ValueId j = f_.new_value(i32);
      jloop.regions[0].blocks[0].args.push_back(j);
      {
        Block& jb = jloop.regions[0].blocks[0];
        Op kloop = make_for(c0, cK);
        kloop.operands.push_back(zero);  // carried accumulator
        ValueId kk = f_.new_value(i32);
        ValueId acc = f_.new_value(elem);
        kloop.regions[0].blocks[0].args = {kk, acc};
        {
          Block& kb = kloop.regions[0].blocks[0];
          // a index: transpose_lhs ? k*M + i : i*K + k
          ValueId aidx;
          if (mm.attrs.transpose_lhs) {
            ValueId cMd = emit_const(kb.ops, M, i32);
            Op mul;
            mul.kind = OpKind::ArithMul;
            mul.operands = {kk, cMd};
            ValueId t1 = f_.new_value(i32);
            mul.results.push_back(t1);
            kb.ops.push_back(std::move(mul));
            Op add;
            add.kind = OpKind::ArithAdd;
            add.operands = {t1, i};
            aidx = f_.new_value(i32);
            add.results.push_back(aidx);
            kb.ops.push_back(std::move(add));
          } else {
            ValueId cKd = emit_const(kb.ops, K, i32);
            Op mul;
            mul.kind = OpKind::ArithMul;
            mul.operands = {i, cKd};
            ValueId t1 = f_.new_value(i32);
            mul.results.push_back(t1);
            kb.ops.push_back(std::move(mul));
            Op add;
            add.kind = OpKind::ArithAdd;
            add.operands = {t1, kk};
            aidx = f_.new_value(i32);
            add.results.push_back(aidx);
            kb.ops.push_back(std::move(add));
          }
          Op lda;
          lda.kind = OpKind::BufLoad;
          lda.operands = {a, aidx};
          ValueId av = f_.new_value(elem);
          lda.results.push_back(av);
          kb.ops.push_back(std::move(lda));
          // b index: k*N + j
          ValueId cNd = emit_const(kb.ops, N, i32);
          Op mulb;
          mulb.kind = OpKind::ArithMul;
          mulb.operands = {kk, cNd};
          ValueId t2 = f_.new_value(i32);
          mulb.results.push_back(t2);
          kb.ops.push_back(std::move(mulb));
          Op addb;
          addb.kind = OpKind::ArithAdd;
          addb.operands = {t2, j};
          ValueId bidx = f_.new_value(i32);
          addb.results.push_back(bidx);
          kb.ops.push_back(std::move(addb));
          Op ldb;
          ldb.kind = OpKind::BufLoad;
          ldb.operands = {bbuf, bidx};
          ValueId bv = f_.new_value(elem);
          ldb.results.push_back(bv);
          kb.ops.push_back(std::move(ldb));
          Op mul;
          mul.kind = OpKind::ArithMul;
          mul.operands = {av, bv};
          ValueId prod = f_.new_value(elem);
          mul.results.push_back(prod);
          kb.ops.push_back(std::move(mul));
          Op add;
          add.kind = OpKind::ArithAdd;
          add.operands = {acc, prod};
          ValueId acc2 = f_.new_value(elem);
          add.results.push_back(acc2);
          kb.ops.push_back(std::move(add));
          Op y;
          y.kind = OpKind::ScfYield;
          y.operands = {acc2};
          kb.ops.push_back(std::move(y));
        }
        ValueId total = f_.new_value(elem);
        kloop.results.push_back(total);
        jb.ops.push_back(std::move(kloop));
        // o index: i*N + j
        ValueId cNo = emit_const(jb.ops, N, i32);
        Op mulo;
        mulo.kind = OpKind::ArithMul;
        mulo.operands = {i, cNo};
        ValueId t3 = f_.new_value(i32);
        mulo.results.push_back(t3);
        jb.ops.push_back(std::move(mulo));
        Op addo;
        addo.kind = OpKind::ArithAdd;
        addo.operands = {t3, j};
        ValueId oidx = f_.new_value(i32);
        addo.results.push_back(oidx);
        jb.ops.push_back(std::move(addo));
        Op st;
        st.kind = OpKind::BufStore;
        st.operands = {obuf, oidx, total};
        jb.ops.push_back(std::move(st));
        Op y;
        y.kind = OpKind::ScfYield;
        jb.ops.push_back(std::move(y));
      }
      ib.ops.push_back(std::move(jloop));
      Op y;
      y.kind = OpKind::ScfYield;
      ib.ops.push_back(std::move(y));
    }
    prelude.push_back(std::move(iloop));
    return prelude;
  }

  std::vector<Op> expand_transpose(const Op& tr) {
    std::vector<Op> prelude;
    Type i32 = Type::scalar_t(ScalarType::sint(32));
    ScalarType et = f_.type_of(tr.operands[0]).scalar;
    Type elem = Type::scalar_t(et);
    int64_t R = tr.attrs.rows, C = tr.attrs.cols;
    ValueId c0 = emit_const(prelude, 0, i32);
    ValueId cR = emit_const(prelude, R, i32);
    ValueId cC = emit_const(prelude, C, i32);
    Op rloop;
    rloop.kind = OpKind::ScfFor;
    rloop.attrs.half_open = true;
    rloop.span = tr.span;
    rloop.operands = {c0, cR};
    rloop.regions.resize(1);
    rloop.regions[0].blocks.push_back({});
    ValueId r = f_.new_value(i32);
    rloop.regions[0].blocks[0].args.push_back(r);
    {
      Block& rb = rloop.regions[0].blocks[0];
      Op cloop;
      cloop.kind = OpKind::ScfFor;
      cloop.attrs.half_open = true;
      cloop.span = tr.span;
      cloop.operands = {c0, cC};
      cloop.regions.resize(1);
      cloop.regions[0].blocks.push_back({});
      ValueId c = f_.new_value(i32);
      cloop.regions[0].blocks[0].args.push_back(c);
      {
        Block& cb = cloop.regions[0].blocks[0];
        // src index r*C + c, dst index c*R + r
        ValueId cCd = emit_const(cb.ops, C, i32);
        Op m1;
        m1.kind = OpKind::ArithMul;
        m1.operands = {r, cCd};
        ValueId t1 = f_.new_value(i32);
        m1.results.push_back(t1);
        cb.ops.push_back(std::move(m1));
        Op a1;
        a1.kind = OpKind::ArithAdd;
        a1.operands = {t1, c};
        ValueId sidx = f_.new_value(i32);
        a1.results.push_back(sidx);
        cb.ops.push_back(std::move(a1));
        Op ld;
        ld.kind = OpKind::BufLoad;
        ld.operands = {tr.operands[0], sidx};
        ValueId v = f_.new_value(elem);
        ld.results.push_back(v);
        cb.ops.push_back(std::move(ld));
        ValueId cRd = emit_const(cb.ops, R, i32);
        Op m2;
        m2.kind = OpKind::ArithMul;
        m2.operands = {c, cRd};
        ValueId t2 = f_.new_value(i32);
        m2.results.push_back(t2);
        cb.ops.push_back(std::move(m2));
        Op a2;
        a2.kind = OpKind::ArithAdd;
        a2.operands = {t2, r};
        ValueId didx = f_.new_value(i32);
        a2.results.push_back(didx);
        cb.ops.push_back(std::move(a2));
        Op st;
        st.kind = OpKind::BufStore;
        st.operands = {tr.operands[1], didx, v};
        cb.ops.push_back(std::move(st));
        Op y;
        y.kind = OpKind::ScfYield;
        cb.ops.push_back(std::move(y));
      }
      rb.ops.push_back(std::move(cloop));
      Op y;
      y.kind = OpKind::ScfYield;
      rb.ops.push_back(std::move(y));
    }
    prelude.push_back(std::move(rloop));
    return prelude;
  }
};

// ---------------------------------------------------------------------------
// to_cfg: structured control flow to basic blocks with block arguments.
// Folding is restricted to constant-zero-trip loop removal.
// ---------------------------------------------------------------------------

class ToCfg {
 public:
  explicit ToCfg(IrFunction& f) : f_(f) {}

  void run() {
    Region old = std::move(f_.body);
    f_.body = Region{};
    int entry = new_block();
    blocks_[entry].args = f_.params;
    int last = lower_ops(old.blocks[0].ops, entry);
    (void)last;
    f_.body.blocks = std::move(blocks_);
    // Renumber ids to match positions (they already do by construction).
  }

 private:
  IrFunction& f_;
  std::vector<Block> blocks_;

  int new_block() {
    Block b;
    b.id = (int)blocks_.size();
    blocks_.push_back(std::move(b));
    return (int)blocks_.size() - 1;
  }

  std::map<ValueId, int64_t> consts_;

  // Lowers a list of structured ops into the CFG starting at block `cur`;
  // returns the block where control continues.
  int lower_ops(std::vector<Op>& ops, int cur) {
    for (auto& op : ops) {
      switch (op.kind) {
        case OpKind::ScfYield:
          break;  // parents consume yields
        case OpKind::ScfIf: {
          ValueId cond = op.operands[0];
          int then_b = new_block();
          int else_b = new_block();
          {
            Op br;
            br.kind = OpKind::CfgCondBr;
            br.span = op.span;
            br.operands = {cond};
            br.succs = {blocks_[then_b].id, blocks_[else_b].id};
            br.succ_args = {{}, {}};
            blocks_[cur].ops.push_back(std::move(br));
          }
          Op yield_then = std::move(op.regions[0].blocks[0].ops.back());
          op.regions[0].blocks[0].ops.pop_back();
          Op yield_else = std::move(op.regions[1].blocks[0].ops.back());
          op.regions[1].blocks[0].ops.pop_back();
          int then_end = lower_ops(op.regions[0].blocks[0].ops, then_b);
          int else_end = lower_ops(op.regions[1].blocks[0].ops, else_b);
          int join = new_block();
          blocks_[join].args = op.results;
          {
            Op br;
            br.kind = OpKind::CfgBr;
            br.span = op.span;
            br.succs = {blocks_[join].id};
            br.succ_args = {yield_then.operands};
            blocks_[then_end].ops.push_back(std::move(br));
          }
          {
            Op br;
            br.kind = OpKind::CfgBr;
            br.span = op.span;
            br.succs = {blocks_[join].id};
            br.succ_args = {yield_else.operands};
            blocks_[else_end].ops.push_back(std::move(br));
          }
          cur = join;
          break;
        }
        case OpKind::ScfFor: {
          ValueId lb = op.operands[0], ub = op.operands[1];
          // Constant zero-trip loops fold away, inits flow through.
          auto clb = consts_.find(lb);
          auto cub = consts_.find(ub);
          if (clb != consts_.end() && cub != consts_.end() &&
              cub->second - clb->second <= 0) {
            // Rebind results to inits via same-type casts.
            for (size_t k = 0; k < op.results.size(); k++) {
              Op mv;
              mv.kind = OpKind::ArithCast;
              mv.span = op.span;
              mv.operands = {op.operands[k + 2]};
              mv.results = {op.results[k]};
              blocks_[cur].ops.push_back(std::move(mv));
            }
            break;
          }
          Block& body_blk = op.regions[0].blocks[0];
          ValueId iv = body_blk.args[0];
          std::vector<ValueId> carried_args(body_blk.args.begin() + 1,
                                            body_blk.args.end());
          Op yield = std::move(body_blk.ops.back());
          body_blk.ops.pop_back();

          int header = new_block();
          blocks_[header].args.push_back(iv);
          for (ValueId a : carried_args) blocks_[header].args.push_back(a);
          {
            Op br;
            br.kind = OpKind::CfgBr;
            br.span = op.span;
            br.succs = {blocks_[header].id};
            br.succ_args = {{}};
            br.succ_args[0].push_back(lb);
            for (size_t k = 2; k < op.operands.size(); k++)
              br.succ_args[0].push_back(op.operands[k]);
            blocks_[cur].ops.push_back(std::move(br));
          }
          int body = new_block();
          int exit = new_block();
          blocks_[exit].args = op.results;
          {
            Block& h = blocks_[header];
            Op cmp;
            cmp.kind = OpKind::ArithCmp;
            cmp.attrs.pred = CmpPred::Lt;
            cmp.span = op.span;
            cmp.operands = {iv, ub};
            ValueId c = f_.new_value(Type::scalar_t(ScalarType::boolean()));
            cmp.results.push_back(c);
            h.ops.push_back(std::move(cmp));
            Op br;
            br.kind = OpKind::CfgCondBr;
            br.span = op.span;
            br.operands = {c};
            br.succs = {blocks_[body].id, blocks_[exit].id};
            br.succ_args = {{}, carried_args};
            h.ops.push_back(std::move(br));
          }
          int body_end = lower_ops(body_blk.ops, body);
          int latch = new_block();
          {
            Op br;
            br.kind = OpKind::CfgBr;
            br.span = op.span;
            br.succs = {blocks_[latch].id};
            br.succ_args = {{}};
            blocks_[body_end].ops.push_back(std::move(br));
          }
          {
            Block& l = blocks_[latch];
            Op c1;
            c1.kind = OpKind::ArithConst;
            c1.attrs.ival = 1;
            c1.span = op.span;
            ValueId one = f_.new_value(f_.type_of(iv));
            c1.results.push_back(one);
            l.ops.push_back(std::move(c1));
            Op add;
            add.kind = OpKind::ArithAdd;
            add.span = op.span;
            add.operands = {iv, one};
            ValueId ivn = f_.new_value(f_.type_of(iv));
            add.results.push_back(ivn);
            l.ops.push_back(std::move(add));
            Op br;
            br.kind = OpKind::CfgBr;
            br.span = op.span;
            br.succs = {blocks_[header].id};
            br.succ_args = {{}};
            br.succ_args[0].push_back(ivn);
            for (ValueId y : yield.operands) br.succ_args[0].push_back(y);
            l.ops.push_back(std::move(br));
          }
          cur = exit;
          break;
        }
        default: {
          if (op.kind == OpKind::ArithConst && !op.attrs.pending_math)
            consts_[op.results[0]] = op.attrs.ival;
          blocks_[cur].ops.push_back(std::move(op));
          break;
        }
      }
    }
    return cur;
  }
};

}  // namespace

bool bufferize(IrModule& m, DiagList& diags) {
  diags.set_stage("lower");
  if (m.stage.bufferized) return true;
  for (auto& f : m.funcs) {
    Bufferize pass(m, f);
    f = pass.run();
  }
  m.stage.bufferized = true;
  return true;
}

bool outputs_by_ref(IrModule& m, DiagList& diags) {
  diags.set_stage("lower");
  if (m.stage.by_ref) return true;
  IrFunction* f = m.find(m.entry);
  if (f && f->ret.is_buffer()) {
    ValueId out = f->new_value(f->ret, "out");
    f->params.push_back(out);
    f->param_space.push_back(BufSpace::External);
    f->body.blocks[0].args.push_back(out);
    // The returned buffer's contents flow into the out-buffer argument.
    Block& b = f->body.blocks[0];
    Op& ret = b.ops.back();
    ValueId retval = ret.operands[0];
    ret.operands.clear();
    Op copy;
    copy.kind = OpKind::BufCopy;
    copy.operands = {retval, out};
    b.ops.insert(b.ops.end() - 1, std::move(copy));
    f->ret = Type::none();
  }
  m.stage.by_ref = true;
  return true;
}

bool lower_matrix_ops(IrModule& m, DiagList& diags) {
  diags.set_stage("lower");
  if (m.stage.mat_lowered) return true;
  for (auto& f : m.funcs) MatrixLowering(f).run();
  m.stage.mat_lowered = true;
  return true;
}

bool to_cfg(IrModule& m, DiagList& diags) {
  diags.set_stage("lower");
  if (m.stage.cfg) return true;
  for (auto& f : m.funcs) ToCfg(f).run();
  m.stage.cfg = true;
  return true;
}

}  // namespace hjl::passes
