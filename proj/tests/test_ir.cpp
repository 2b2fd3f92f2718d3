#include "doctest.h"
#include "test_util.hpp"

using namespace hjl;
using namespace hjl::ir;
using namespace hjltest;

namespace {

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

int count_kind(const IrModule& m, OpKind k) {
  int n = 0;
  for (auto& f : m.funcs)
    walk_ops(f.body, [&](const Op& op) {
      if (op.kind == k) n++;
    });
  return n;
}

}  // namespace

TEST_CASE("build_hir: x = a + b lowers to one add and one return") {
  auto m = hir_of("function f(a::Int32, b::Int32)\n x = a + b\n return x\nend", "f");
  CHECK(count_kind(m, OpKind::ArithAdd) == 1);
  CHECK(count_kind(m, OpKind::FuncReturn) == 1);
  CHECK(verify(m).empty());
}

TEST_CASE("build_hir: implicit else becomes nested scf.if") {
  DiagList diags;
  IrModule m;
  REQUIRE(bench_hir("implicit_else", implicit_else_inst(), m, diags));
  CHECK(count_kind(m, OpKind::ScfIf) == 2);  // if + elseif arm
  auto viol = verify(m);
  for (auto& v : viol) MESSAGE(v.where, ": ", v.what);
  CHECK(viol.empty());
}

TEST_CASE("build_hir: cordic loop carries x, y, z through slots") {
  DiagList diags;
  IrModule m;
  REQUIRE_MESSAGE(bench_hir("cordic", cordic_inst(), m, diags), diag_dump(diags));
  CHECK(count_kind(m, OpKind::ScfFor) == 1);
  CHECK(count_kind(m, OpKind::TensorFromElements) == 1);
  CHECK(verify(m).empty());
  CHECK(m.funcs.size() == 1);  // fully inlined
}

TEST_CASE("interpret: implicit_else examples from both branches and fall-through") {
  DiagList diags;
  IrModule m;
  REQUIRE(bench_hir("implicit_else", implicit_else_inst(), m, diags));
  auto r1 = interpret(m, {scalar_arg(3), scalar_arg(5)});
  REQUIRE(r1.ok);
  CHECK(r1.outputs == std::vector<int64_t>{8});
  auto r2 = interpret(m, {scalar_arg(5), scalar_arg(5)});
  REQUIRE(r2.ok);
  CHECK(r2.outputs == std::vector<int64_t>{0});
  auto r3 = interpret(m, {scalar_arg(7), scalar_arg(3)});
  REQUIRE(r3.ok);
  CHECK(r3.outputs == std::vector<int64_t>{4});
}

TEST_CASE("interpret: cordic matches the independent reference implementation") {
  DiagList diags;
  IrModule m;
  REQUIRE(bench_hir("cordic", cordic_inst(), m, diags));
  const int32_t k_gain = 39797;  // ~0.60725 in Q16.16
  for (int32_t theta : {0, 25736, 51472, -51472, 90000, -90000, 102944}) {
    auto r = interpret(m, {scalar_arg(theta), scalar_arg(k_gain)});
    REQUIRE_MESSAGE(r.ok, r.error);
    CHECK(r.outputs == std::vector<int64_t>{cordic_reference(theta, k_gain)});
  }
}

TEST_CASE("interpret: conv2d matches the brute-force oracle") {
  DiagList diags;
  IrModule m;
  REQUIRE_MESSAGE(bench_hir("conv2d_im2col", conv2d_inst(), m, diags), diag_dump(diags));
  std::vector<int64_t> a = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<int64_t> k = {1, 0, -1, 2};
  auto r = interpret(m, {tensor_arg(a), tensor_arg(k)});
  REQUIRE_MESSAGE(r.ok, r.error);
  CHECK(r.outputs == conv2d_reference(a, 3, 3, k, 2, 2));
}

TEST_CASE("interpret: out-of-bounds index traps with a message") {
  auto m = hir_of(R"(function f(a::Int32)
    v = MMatrix{2,1,Int32}(undef)
    v[1,1] = a
    r = v[a, 1]
    return r
end)",
                  "f");
  auto r = interpret(m, {scalar_arg(5)});
  CHECK_FALSE(r.ok);
  CHECK(r.error.find("out of bounds") != std::string::npos);
}

TEST_CASE("print/parse: benchmarks round-trip to identical canonical text") {
  for (auto& [name, inst] :
       std::vector<std::pair<std::string, Instantiation>>{
           {"implicit_else", implicit_else_inst()},
           {"cordic", cordic_inst()},
           {"conv2d_im2col", conv2d_inst()}}) {
    DiagList diags;
    IrModule m;
    REQUIRE(bench_hir(name, inst, m, diags));
    std::string p1 = print_ir(m);
    IrModule m2;
    REQUIRE_MESSAGE(parse_ir(p1, m2, diags), (diag_dump(diags) + "\n" + p1));
    std::string p2 = print_ir(m2);
    CHECK_MESSAGE(p1 == p2, ("round-trip mismatch for " + name));
    CHECK(m2.stage == m.stage);
  }
}

TEST_CASE("print/parse: const round-trips") {
  std::string text =
      "hjl.module entry=@f stage=[]\n"
      "func @f() -> i32 {\n"
      "  %0 = arith.const 5 : i32\n"
      "  func.return %0\n"
      "}\n";
  IrModule m;
  DiagList diags;
  REQUIRE(parse_ir(text, m, diags));
  CHECK(print_ir(m) ==
        "hjl.module entry=@f stage=[]\n"
        "func @f() -> i32 {\n"
        "  ^0():\n"
        "    %0 = arith.const 5 : i32\n"
        "    func.return %0\n"
        "}\n");
}

TEST_CASE("print/parse: malformed line reports its line number") {
  std::string text =
      "hjl.module entry=@f stage=[]\n"
      "func @f() -> i32 {\n"
      "  %x = = add\n"
      "}\n";
  IrModule m;
  DiagList diags;
  CHECK_FALSE(parse_ir(text, m, diags));
  REQUIRE_FALSE(diags.ok());
  CHECK(diags.all()[0].span.begin.line == 3);
}

TEST_CASE("verify: dominance violation is reported") {
  IrModule m;
  m.entry = "f";
  m.stage.ssa = true;
  m.stage.cfg = true;
  m.stage.zero_based = m.stage.row_major = m.stage.math_folded = true;
  m.stage.bufferized = m.stage.by_ref = m.stage.mat_lowered = true;
  IrFunction f;
  f.name = "f";
  f.ret = Type::scalar_t(ScalarType::sint(32));
  Type i32 = Type::scalar_t(ScalarType::sint(32));
  Type b = Type::scalar_t(ScalarType::boolean());
  ValueId cond = f.new_value(b);
  f.params = {cond};
  ValueId x = f.new_value(i32);
  Block b0;
  b0.id = 0;
  b0.args = {cond};
  Op br;
  br.kind = OpKind::CfgCondBr;
  br.operands = {cond};
  br.succs = {1, 2};
  br.succ_args = {{}, {}};
  b0.ops.push_back(br);
  Block b1;
  b1.id = 1;
  Op def;
  def.kind = OpKind::ArithConst;
  def.attrs.ival = 1;
  def.results = {x};
  b1.ops.push_back(def);
  Op br1;
  br1.kind = OpKind::CfgBr;
  br1.succs = {2};
  br1.succ_args = {{}};
  b1.ops.push_back(br1);
  Block b2;
  b2.id = 2;
  Op ret;
  ret.kind = OpKind::FuncReturn;
  ret.operands = {x};  // not dominated by its definition in ^1
  b2.ops.push_back(ret);
  f.body.blocks = {b0, b1, b2};
  m.funcs.push_back(std::move(f));
  auto viol = verify(m);
  bool found = false;
  for (auto& v : viol)
    if (v.what.find("not dominated") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("verify: tensor op at post-bufferization stage is a stage violation") {
  DiagList diags;
  IrModule m;
  REQUIRE(bench_hir("conv2d_im2col", conv2d_inst(), m, diags));
  CHECK(verify(m).empty());
  m.stage.bufferized = true;  // pretend bufferize ran without converting anything
  auto viol = verify(m);
  bool found = false;
  for (auto& v : viol)
    if (v.what.find("post-bufferization") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("complexity: empty function is 1 block / 1 op / 0 arith / 0 copies") {
  auto m = hir_of("function f(a::Int32)\nreturn\nend", "f");
  auto rep = complexity(m);
  CHECK(rep.basic_blocks == 1);
  CHECK(rep.total_ops == 1);
  CHECK(rep.arith_ops == 0);
  CHECK(rep.memory_copies == 0);
}

TEST_CASE("complexity: invariant under value-id renaming (reparse)") {
  DiagList diags;
  IrModule m;
  REQUIRE(bench_hir("cordic", cordic_inst(), m, diags));
  auto rep1 = complexity(m);
  IrModule m2;
  REQUIRE(parse_ir(print_ir(m), m2, diags));
  auto rep2 = complexity(m2);
  CHECK(rep1.basic_blocks == rep2.basic_blocks);
  CHECK(rep1.total_ops == rep2.total_ops);
  CHECK(rep1.arith_ops == rep2.arith_ops);
  CHECK(rep1.memory_copies == rep2.memory_copies);
}

TEST_CASE("complexity: implicit_else HIR has one if region and arith ops, no copies") {
  DiagList diags;
  IrModule m;
  REQUIRE(bench_hir("implicit_else", implicit_else_inst(), m, diags));
  auto rep = complexity(m);
  CHECK(rep.basic_blocks >= 3);  // entry + nested if regions
  CHECK(rep.arith_ops >= 2);
  CHECK(rep.memory_copies == 0);
}
