#include <string>

#include "doctest.h"
#include "hjlc/frontend.hpp"

using namespace hjl;

namespace {

SourceProgram prog(std::string text, std::string entry, Instantiation inst = {}) {
  SourceProgram p;
  p.files.push_back({"test.hjl", std::move(text)});
  p.entry = std::move(entry);
  p.instantiation = std::move(inst);
  return p;
}

bool run_frontend(SourceProgram p, Ast& ast, DiagList& diags) {
  if (!parse_program(p, ast, diags)) return false;
  if (!monomorphize(ast, p.entry, p.instantiation, diags)) return false;
  return check_type_stability(ast, p.entry, diags);
}

std::string first_error(const DiagList& d) {
  for (auto& di : d.all())
    if (di.sev == Severity::Error) return di.message;
  return "";
}

const char* kImplicitElse = R"(
function implicit_else(A::T, B::T) where {T}
    result = 0
    if A < B
        result = A + B
    elseif A > B
        result = A - B
    end
    return result
end
)";

Instantiation i32_T() {
  Instantiation inst;
  Binding b;
  b.is_type = true;
  b.type = ScalarType::sint(32);
  inst.push_back({"T", b});
  return inst;
}

}  // namespace

TEST_CASE("parse: minimal function") {
  Ast ast;
  DiagList diags;
  auto p = prog("function f(a::Int32) return a end", "f");
  REQUIRE(parse_program(p, ast, diags));
  REQUIRE(ast.functions.size() == 1);
  CHECK(ast.functions[0].name == "f");
  REQUIRE(ast.functions[0].body.size() == 1);
  CHECK(ast.functions[0].body[0]->kind == Stmt::Kind::Return);
}

TEST_CASE("parse: implicit else has one elseif arm and no else arm") {
  Ast ast;
  DiagList diags;
  REQUIRE(parse_program(prog(kImplicitElse, "implicit_else"), ast, diags));
  auto& fn = ast.functions[0];
  REQUIRE(fn.body.size() == 3);
  Stmt& ifs = *fn.body[1];
  REQUIRE(ifs.kind == Stmt::Kind::If);
  REQUIRE(ifs.else_body.size() == 1);
  Stmt& elif = *ifs.else_body[0];
  REQUIRE(elif.kind == Stmt::Kind::If);
  CHECK(elif.else_body.empty());
}

TEST_CASE("parse: truncated for loop is a syntax error") {
  Ast ast;
  DiagList diags;
  CHECK_FALSE(parse_program(prog("function f(a::Int32)\nfor i in", "f"), ast, diags));
  CHECK_FALSE(diags.ok());
}

TEST_CASE("parse: unsupported construct has a span") {
  Ast ast;
  DiagList diags;
  CHECK_FALSE(parse_program(prog("function f(a::Int32)\nwhile a\nend\nend", "f"), ast, diags));
  REQUIRE_FALSE(diags.ok());
  CHECK(diags.all()[0].span.begin.line > 0);
}

TEST_CASE("parse-print-parse is a fixpoint") {
  const char* src = R"(
function f(a::Fixed{T,N}, b::MMatrix{3,3,T}) where {T,N}
    x = a + Fixed{T,N}(1)
    m = MMatrix{2,2,T}(undef)
    for i in 1:2, j in 1:2
        m[i, j] = b[i + 1, j]
    end
    y = x > Fixed{T,N}(0) ? x : a
    v = [1, 2; 3, 4]
    w = b' * b
    return y
end
)";
  Ast a1, a2, a3;
  DiagList d;
  REQUIRE(parse_program(prog(src, "f"), a1, d));
  std::string p1 = print_ast(a1);
  REQUIRE(parse_program(prog(p1, "f"), a2, d));
  std::string p2 = print_ast(a2);
  CHECK(p1 == p2);
  REQUIRE(parse_program(prog(p2, "f"), a3, d));
  CHECK(print_ast(a3) == p2);
}

TEST_CASE("monomorphize: binds entry parameters and computes constants") {
  const char* src = R"(
function conv(A::MMatrix{MA,NA,T}) where {MA,NA,T}
    OM = MA - 1
    S = MMatrix{OM, OM, T}(undef)
    S[1, 1] = A[1, 1]
    return S
end
)";
  Instantiation inst;
  Binding ma, na, t;
  ma.value = 3;
  na.value = 3;
  t.is_type = true;
  t.type = ScalarType::sint(32);
  inst.push_back({"MA", ma});
  inst.push_back({"NA", na});
  inst.push_back({"T", t});
  Ast ast;
  DiagList diags;
  auto p = prog(src, "conv", inst);
  REQUIRE(parse_program(p, ast, diags));
  REQUIRE(monomorphize(ast, "conv", inst, diags));
  REQUIRE(check_type_stability(ast, "conv", diags));
  CHECK(ast.functions[0].ret_type == Type::matrix(2, 2, ScalarType::sint(32), false));
}

TEST_CASE("monomorphize: is idempotent") {
  Ast ast;
  DiagList diags;
  auto inst = i32_T();
  auto p = prog(kImplicitElse, "implicit_else", inst);
  REQUIRE(parse_program(p, ast, diags));
  REQUIRE(monomorphize(ast, "implicit_else", inst, diags));
  std::string once = print_ast(ast);
  REQUIRE(monomorphize(ast, "implicit_else", inst, diags));
  CHECK(print_ast(ast) == once);
}

TEST_CASE("monomorphize: recursion is rejected with the cycle named") {
  const char* src = R"(
function f(a::Int32)
    x = f(a)
    return x
end
)";
  Ast ast;
  DiagList diags;
  auto p = prog(src, "f");
  REQUIRE(parse_program(p, ast, diags));
  CHECK_FALSE(monomorphize(ast, "f", {}, diags));
  CHECK(first_error(diags).find("recursion") != std::string::npos);
  CHECK(first_error(diags).find("f") != std::string::npos);
}

TEST_CASE("monomorphize: unbound entry parameter is an error") {
  Ast ast;
  DiagList diags;
  auto p = prog(kImplicitElse, "implicit_else");
  REQUIRE(parse_program(p, ast, diags));
  CHECK_FALSE(monomorphize(ast, "implicit_else", {}, diags));
  CHECK(first_error(diags).find("unbound type parameter") != std::string::npos);
}

TEST_CASE("monomorphize: fixed-point entry instantiation") {
  const char* src = R"(
function g(a::Fixed{T,N}) where {T,N}
    return a + Fixed{T,N}(1)
end
)";
  Instantiation inst;
  Binding t, n;
  t.is_type = true;
  t.type = ScalarType::sint(32);
  n.value = 16;
  inst.push_back({"T", t});
  inst.push_back({"N", n});
  Ast ast;
  DiagList diags;
  auto p = prog(src, "g", inst);
  REQUIRE(parse_program(p, ast, diags));
  REQUIRE(monomorphize(ast, "g", inst, diags));
  REQUIRE(check_type_stability(ast, "g", diags));
  CHECK(ast.functions[0].ret_type == Type::scalar_t(ScalarType::fixed(32, 16)));
}

TEST_CASE("type stability: conflicting assignment is rejected naming the variable") {
  const char* src = R"(
function f(a::Int32, b::Fixed{Int32,16})
    x = a
    x = b
    return x
end
)";
  Ast ast;
  DiagList diags;
  auto p = prog(src, "f");
  REQUIRE(parse_program(p, ast, diags));
  REQUIRE(monomorphize(ast, "f", {}, diags));
  CHECK_FALSE(check_type_stability(ast, "f", diags));
  auto msg = first_error(diags);
  CHECK(msg.find("'x'") != std::string::npos);
  CHECK(msg.find("i32") != std::string::npos);
  CHECK(msg.find("fx32_16") != std::string::npos);
}

TEST_CASE("type stability: implicit_else types both branches and fall-through") {
  Ast ast;
  DiagList diags;
  auto inst = i32_T();
  auto p = prog(kImplicitElse, "implicit_else", inst);
  REQUIRE(run_frontend(std::move(p), ast, diags));
  CHECK(ast.functions[0].ret_type == Type::scalar_t(ScalarType::sint(32)));
}

TEST_CASE("type stability: read of branch-only variable is use-before-definition") {
  const char* src = R"(
function f(a::Int32)
    if a < 1
        y = a
    end
    return y
end
)";
  Ast ast;
  DiagList diags;
  auto p = prog(src, "f");
  REQUIRE(parse_program(p, ast, diags));
  REQUIRE(monomorphize(ast, "f", {}, diags));
  CHECK_FALSE(check_type_stability(ast, "f", diags));
  CHECK(first_error(diags).find("before definition") != std::string::npos);
}

TEST_CASE("type stability: loop-carried fixed-point updates stay stable") {
  const char* src = R"(
function f(k::Fixed{Int32,16})
    x = k
    y = Fixed{Int32,16}(0)
    for i in 1:10
        shift = i - 1
        x_new = x - (y >> shift)
        y_new = y + (x >> shift)
        x, y = x_new, y_new
    end
    return x
end
)";
  Ast ast;
  DiagList diags;
  auto p = prog(src, "f");
  REQUIRE(run_frontend(std::move(p), ast, diags));
  CHECK(diags.ok());
}

TEST_CASE("type stability: assigning to the loop variable is rejected") {
  const char* src = R"(
function f(a::Int32)
    for i in 1:4
        i = a
    end
    return a
end
)";
  Ast ast;
  DiagList diags;
  auto p = prog(src, "f");
  REQUIRE(parse_program(p, ast, diags));
  REQUIRE(monomorphize(ast, "f", {}, diags));
  CHECK_FALSE(check_type_stability(ast, "f", diags));
}

TEST_CASE("atan on runtime value is rejected") {
  const char* src = R"(
function f(a::Int32)
    x = Fixed{Int32,16}(atan(a))
    return x
end
)";
  Ast ast;
  DiagList diags;
  auto p = prog(src, "f");
  REQUIRE(parse_program(p, ast, diags));
  REQUIRE(monomorphize(ast, "f", {}, diags));
  CHECK_FALSE(check_type_stability(ast, "f", diags));
  CHECK(first_error(diags).find("compile-time") != std::string::npos);
}

TEST_CASE("user calls are monomorphized per concrete signature") {
  const char* src = R"(
function helper(v::T) where {T}
    return v + v
end
function main2(a::Int32, b::Int16)
    x = helper(a)
    y = helper(b)
    return x
end
)";
  Ast ast;
  DiagList diags;
  auto p = prog(src, "main2");
  REQUIRE(parse_program(p, ast, diags));
  REQUIRE(monomorphize(ast, "main2", {}, diags));
  REQUIRE(check_type_stability(ast, "main2", diags));
  CHECK(ast.functions.size() == 3);  // main2 + helper$i32 + helper$i16
}
