#include <algorithm>
#include <map>

#include "doctest.h"
#include "gen_programs.hpp"
#include "hjlc/passes.hpp"
#include "test_util.hpp"

using namespace hjl;
using namespace hjl::ir;
using namespace hjltest;

namespace {

using PassFn = bool (*)(IrModule&, DiagList&);
struct NamedPass {
  const char* name;
  PassFn fn;
};

const NamedPass kNormalize[] = {
    {"index_base_to_zero", passes::index_base_to_zero},
    {"layout_to_row_major", passes::layout_to_row_major},
    {"legalize_ssa", passes::legalize_ssa},
    {"map_math_ops", passes::map_math_ops},
};

IrModule hir_of(const char* src, const std::string& entry, Instantiation inst = {}) {
  SourceProgram p;
  p.files.push_back({"t.hjl", src});
  p.entry = entry;
  p.instantiation = std::move(inst);
  Ast ast;
  DiagList diags;
  REQUIRE_MESSAGE(frontend(std::move(p), ast, diags), diag_dump(diags));
  IrModule m;
  REQUIRE_MESSAGE(build_hir(ast, entry, m, diags), diag_dump(diags));
  return m;
}

std::vector<InputValue> random_bench_inputs(const std::string& name, Rng& rng) {
  if (name == "implicit_else")
    return {scalar_arg(rng.range(-1000000, 1000000)), scalar_arg(rng.range(-1000000, 1000000))};
  if (name == "cordic")
    return {scalar_arg(rng.range(-102944, 102944)), scalar_arg(rng.range(0, 65536))};
  std::vector<int64_t> a, k;
  for (int i = 0; i < 9; i++) a.push_back(rng.range(-10000, 10000));
  for (int i = 0; i < 4; i++) k.push_back(rng.range(-10000, 10000));
  return {tensor_arg(a), tensor_arg(k)};
}

void require_verified(const IrModule& m, const std::string& ctx) {
  auto viol = verify(m);
  for (auto& v : viol) MESSAGE(ctx, ": ", v.where, ": ", v.what);
  REQUIRE(viol.empty());
}

}  // namespace

TEST_CASE("normalize: each pass preserves interpreter semantics on the benchmarks") {
  for (auto& [name, inst] : std::vector<std::pair<std::string, Instantiation>>{
           {"implicit_else", implicit_else_inst()},
           {"cordic", cordic_inst()},
           {"conv2d_im2col", conv2d_inst()}}) {
    DiagList diags;
    IrModule m;
    REQUIRE(bench_hir(name, inst, m, diags));
    Rng rng(2024);
    std::vector<std::vector<InputValue>> inputs;
    for (int i = 0; i < 10; i++) inputs.push_back(random_bench_inputs(name, rng));
    for (auto& pass : kNormalize) {
      std::vector<std::vector<int64_t>> before;
      for (auto& in : inputs) {
        auto r = interpret(m, in);
        REQUIRE_MESSAGE(r.ok, (name + "/" + pass.name + ": " + r.error));
        before.push_back(r.outputs);
      }
      REQUIRE_MESSAGE(pass.fn(m, diags), (name + "/" + pass.name + ": " + diag_dump(diags)));
      require_verified(m, std::string(name) + " after " + pass.name);
      for (size_t i = 0; i < inputs.size(); i++) {
        auto r = interpret(m, inputs[i]);
        REQUIRE_MESSAGE(r.ok, (name + "/" + pass.name + ": " + r.error));
        CHECK_MESSAGE(r.outputs == before[i],
                      (name + std::string(": ") + pass.name + " changed semantics"));
      }
    }
  }
}

TEST_CASE("normalize: all four passes are idempotent") {
  DiagList diags;
  IrModule m;
  REQUIRE(bench_hir("conv2d_im2col", conv2d_inst(), m, diags));
  for (auto& pass : kNormalize) {
    REQUIRE(pass.fn(m, diags));
    std::string once = print_ir(m);
    REQUIRE(pass.fn(m, diags));
    CHECK_MESSAGE(print_ir(m) == once, pass.name);
  }
}

TEST_CASE("index_base: constant surface index 1 becomes 0") {
  auto m = hir_of(R"(function f(a::Int32)
    v = MMatrix{2,1,Int32}(undef)
    v[1] = a
    r = v[1]
    return r
end)",
                  "f");
  DiagList diags;
  REQUIRE(passes::index_base_to_zero(m, diags));
  bool found = false;
  auto& f = m.funcs[0];
  std::map<ValueId, const Op*> defs;
  walk_ops(f.body, [&](const Op& op) {
    for (ValueId r : op.results) defs[r] = &op;
  });
  walk_ops(f.body, [&](const Op& op) {
    if (op.kind != OpKind::TensorExtract) return;
    const Op* d = defs[op.operands[1]];
    REQUIRE(d != nullptr);
    CHECK(d->kind == OpKind::ArithConst);
    CHECK(d->attrs.ival == 0);
    found = true;
  });
  CHECK(found);
}

TEST_CASE("index_base: conv2d patch indices fold to iv sums") {
  DiagList diags;
  IrModule m;
  REQUIRE(bench_hir("conv2d_im2col", conv2d_inst(), m, diags));
  REQUIRE(passes::index_base_to_zero(m, diags));
  require_verified(m, "conv2d after index_base");
  // A[i+u-1, j+v-1] must fold to indices that are a single add of two values.
  const IrFunction& f = m.funcs[0];
  std::map<ValueId, const Op*> defs;
  walk_ops(f.body, [&](const Op& op) {
    for (ValueId r : op.results) defs[r] = &op;
  });
  int folded = 0;
  walk_ops(f.body, [&](const Op& op) {
    if (op.kind != OpKind::TensorExtract) return;
    const Type& bt = f.type_of(op.operands[0]);
    if (bt.rows != 3 || bt.cols != 3) return;  // the A matrix
    for (size_t k = 1; k < op.operands.size(); k++) {
      const Op* d = defs.count(op.operands[k]) ? defs[op.operands[k]] : nullptr;
      if (d && d->kind == OpKind::ArithAdd && !defs.count(d->operands[0]) &&
          !defs.count(d->operands[1]))
        folded++;  // both operands are block args (loop counters)
    }
  });
  CHECK(folded == 2);
}

TEST_CASE("index_base: constant surface index 0 is out of bounds") {
  auto m = hir_of(R"(function f(a::Int32)
    v = MMatrix{2,1,Int32}(undef)
    v[1] = a
    r = v[0]
    return r
end)",
                  "f");
  DiagList diags;
  CHECK_FALSE(passes::index_base_to_zero(m, diags));
  REQUIRE_FALSE(diags.ok());
  CHECK(diags.all()[0].message.find("out of bounds") != std::string::npos);
}

TEST_CASE("layout: column-ordered literal storage becomes row-major order") {
  auto m = hir_of(R"(function f(a::Int32)
    v = [1, 3; 2, 4]
    r = v[1, 2] + a
    return r
end)",
                  "f");
  DiagList diags;
  // Before: operands in column order 1,2,3,4.
  std::vector<int64_t> order;
  auto collect = [&](const IrModule& mm) {
    order.clear();
    const IrFunction& f = mm.funcs[0];
    std::map<ValueId, const Op*> defs;
    walk_ops(f.body, [&](const Op& op) {
      for (ValueId r : op.results) defs[r] = &op;
    });
    walk_ops(f.body, [&](const Op& op) {
      if (op.kind != OpKind::TensorFromElements) return;
      for (ValueId v : op.operands) order.push_back(defs[v]->attrs.ival);
    });
  };
  collect(m);
  CHECK(order == std::vector<int64_t>{1, 2, 3, 4});
  REQUIRE(passes::index_base_to_zero(m, diags));
  REQUIRE(passes::layout_to_row_major(m, diags));
  collect(m);
  CHECK(order == std::vector<int64_t>{1, 3, 2, 4});
}

TEST_CASE("layout: transpose of row-major 3x2 is typed 2x3 row-major") {
  auto m = hir_of(R"(function f(a::Int32)
    v = MMatrix{3,2,Int32}(undef)
    v[1, 1] = a
    w = v'
    r = w[1, 1]
    return r
end)",
                  "f");
  DiagList diags;
  REQUIRE(passes::index_base_to_zero(m, diags));
  REQUIRE(passes::layout_to_row_major(m, diags));
  const IrFunction& f = m.funcs[0];
  bool found = false;
  walk_ops(f.body, [&](const Op& op) {
    if (op.kind != OpKind::TensorTranspose) return;
    const Type& t = f.type_of(op.results[0]);
    CHECK(t.rows == 2);
    CHECK(t.cols == 3);
    CHECK(t.row_major);
    found = true;
  });
  CHECK(found);
}

TEST_CASE("legalize_ssa: loop-carried counter becomes an scf.for iter value") {
  auto m = hir_of(R"(function f(a::Int32)
    x = 0
    for i in 1:4
        x = x + 1
    end
    return x
end)",
                  "f");
  DiagList diags;
  REQUIRE(passes::index_base_to_zero(m, diags));
  REQUIRE(passes::layout_to_row_major(m, diags));
  REQUIRE(passes::legalize_ssa(m, diags));
  require_verified(m, "after legalize");
  bool found = false;
  walk_ops(m.funcs[0].body, [&](const Op& op) {
    if (op.kind != OpKind::ScfFor) return;
    CHECK(op.operands.size() == 3);  // lb, ub, carried x
    CHECK(op.results.size() == 1);
    found = true;
  });
  CHECK(found);
}

TEST_CASE("legalize_ssa: cordic carries x, y, z (plus the threaded table)") {
  DiagList diags;
  IrModule m;
  REQUIRE(bench_hir("cordic", cordic_inst(), m, diags));
  REQUIRE(passes::index_base_to_zero(m, diags));
  REQUIRE(passes::layout_to_row_major(m, diags));
  REQUIRE(passes::legalize_ssa(m, diags));
  require_verified(m, "cordic after legalize");
  int carried = -1;
  walk_ops(m.funcs[0].body, [&](const Op& op) {
    if (op.kind == OpKind::ScfFor) carried = (int)op.operands.size() - 2;
  });
  // x, y, z plus the read-only angle table threaded for region isolation.
  CHECK(carried == 4);
}

TEST_CASE("legalize_ssa: re-assignment in one if arm yields (new, old)") {
  auto m = hir_of(R"(function f(a::Int32)
    x = a
    if a < 10
        x = a + 1
    end
    return x
end)",
                  "f");
  DiagList diags;
  REQUIRE(passes::legalize_ssa(m, diags));
  require_verified(m, "if-arm legalize");
  bool found = false;
  walk_ops(m.funcs[0].body, [&](const Op& op) {
    if (op.kind != OpKind::ScfIf) return;
    CHECK(op.results.size() == 1);
    REQUIRE(op.regions[0].blocks[0].ops.size() >= 1);
    CHECK(op.regions[0].blocks[0].ops.back().operands.size() == 1);
    CHECK(op.regions[1].blocks[0].ops.back().operands.size() == 1);
    found = true;
  });
  CHECK(found);
}

TEST_CASE("map_math_ops: atan(1) at fx32_16 folds to 51472") {
  DiagList diags;
  IrModule m;
  REQUIRE(bench_hir("cordic", cordic_inst(), m, diags));
  for (auto& pass : kNormalize) REQUIRE(pass.fn(m, diags));
  std::vector<int64_t> found;
  walk_ops(m.funcs[0].body, [&](const Op& op) {
    if (op.kind == OpKind::ArithConst) {
      CHECK_FALSE(op.attrs.pending_math);
      found.push_back(op.attrs.ival);
    }
  });
  // First two table entries: round(atan(1)*2^16) and round(atan(0.5)*2^16).
  CHECK(std::count(found.begin(), found.end(), 51472) == 1);
  CHECK(std::count(found.begin(), found.end(), 30386) == 1);
}

TEST_CASE("property: generated programs stay verified and semantics-stable") {
  for (uint64_t seed = 1; seed <= 25; seed++) {
    ProgramGen gen(seed);
    std::string src = gen.generate();
    SourceProgram p;
    p.files.push_back({"gen.hjl", src});
    p.entry = "kernel";
    Ast ast;
    DiagList diags;
    REQUIRE_MESSAGE(frontend(std::move(p), ast, diags),
                    ("seed " + std::to_string(seed) + ":\n" + src + diag_dump(diags)));
    IrModule m;
    REQUIRE(build_hir(ast, "kernel", m, diags));
    require_verified(m, "generated program seed " + std::to_string(seed));
    Rng rng(seed * 77);
    std::vector<std::vector<InputValue>> inputs;
    for (int i = 0; i < 5; i++)
      inputs.push_back({scalar_arg(rng.range(-100, 100)), scalar_arg(rng.range(-100, 100))});
    for (auto& pass : kNormalize) {
      std::vector<std::vector<int64_t>> before;
      for (auto& in : inputs) {
        auto r = interpret(m, in);
        REQUIRE_MESSAGE(r.ok, (r.error + "\n" + src));
        before.push_back(r.outputs);
      }
      REQUIRE(pass.fn(m, diags));
      require_verified(m, std::string("seed ") + std::to_string(seed) + " after " + pass.name);
      for (size_t i = 0; i < inputs.size(); i++) {
        auto r = interpret(m, inputs[i]);
        REQUIRE(r.ok);
        CHECK_MESSAGE(r.outputs == before[i],
                      (std::string(pass.name) + " changed semantics, seed " +
                       std::to_string(seed) + "\n" + src));
      }
    }
  }
}
