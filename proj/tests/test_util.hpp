#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hjlc/build.hpp"
#include "hjlc/frontend.hpp"
#include "hjlc/interp.hpp"
#include "hjlc/ir.hpp"

#ifndef HJLC_BENCH_DIR
#define HJLC_BENCH_DIR "benchmarks"
#endif

namespace hjltest {

using namespace hjl;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline Binding type_binding(ScalarType t) {
  Binding b;
  b.is_type = true;
  b.type = t;
  return b;
}
inline Binding int_binding(int64_t v) {
  Binding b;
  b.value = v;
  return b;
}

inline Instantiation cordic_inst() {
  return {{"T", type_binding(ScalarType::sint(32))}, {"N", int_binding(16)}};
}
inline Instantiation conv2d_inst() {
  return {{"MA", int_binding(3)},
          {"NA", int_binding(3)},
          {"KH", int_binding(2)},
          {"KW", int_binding(2)},
          {"T", type_binding(ScalarType::sint(32))}};
}
inline Instantiation implicit_else_inst() {
  return {{"T", type_binding(ScalarType::sint(32))}};
}

inline SourceProgram bench_program(const std::string& name, Instantiation inst) {
  SourceProgram p;
  std::string path = std::string(HJLC_BENCH_DIR) + "/" + name + ".hjl";
  p.files.push_back({path, read_file(path)});
  p.entry = name;
  p.instantiation = std::move(inst);
  return p;
}

// Runs the front half of the pipeline: parse + monomorphize + type check.
inline bool frontend(SourceProgram p, Ast& ast, DiagList& diags) {
  if (!parse_program(p, ast, diags)) return false;
  if (!monomorphize(ast, p.entry, p.instantiation, diags)) return false;
  return check_type_stability(ast, p.entry, diags);
}

inline std::string diag_dump(const DiagList& d) {
  std::string out;
  for (auto& di : d.all()) out += di.message + "\n";
  return out;
}

// Frontend + build_hir for a bundled benchmark.
inline bool bench_hir(const std::string& name, Instantiation inst, ir::IrModule& m,
                      DiagList& diags) {
  Ast ast;
  auto p = bench_program(name, std::move(inst));
  std::string entry = p.entry;
  if (!frontend(std::move(p), ast, diags)) return false;
  return build_hir(ast, entry, m, diags);
}

// Independent straight-line reference of the fixed-point CORDIC loop
// (Q16.16, wrapping 32-bit arithmetic), kept deliberately separate from the
// compiler's evaluation path.
inline int32_t cordic_reference(int32_t theta_raw, int32_t k_raw) {
  auto wrap = [](int64_t v) { return (int32_t)v; };
  auto fxmul = [&](int32_t a, int32_t b) {
    return wrap((int32_t)(((int64_t)a * (int64_t)b) >> 16));
  };
  static const double table_args[10] = {1,        0.5,       0.25,      0.125,     0.0625,
                                        0.03125,  0.015625,  0.0078125, 0.00390625,
                                        0.001953125};
  int32_t angles[10];
  for (int i = 0; i < 10; i++) {
    double scaled = std::atan(table_args[i]) * 65536.0;
    double fl = std::floor(scaled);
    double r = scaled - fl == 0.5 ? (std::fmod(fl, 2.0) == 0.0 ? fl : fl + 1.0)
                                  : std::floor(scaled + 0.5);
    angles[i] = (int32_t)r;
  }
  int32_t x = k_raw, y = 0, z = theta_raw;
  for (int i = 0; i < 10; i++) {
    int32_t di = z >= 0 ? 1 << 16 : -(1 << 16);
    int shift = i;
    int32_t x_new = wrap((int64_t)x - fxmul(di, y >> shift));
    int32_t y_new = wrap((int64_t)y + fxmul(di, x >> shift));
    int32_t z_new = wrap((int64_t)z - fxmul(di, angles[i]));
    x = x_new;
    y = y_new;
    z = z_new;
  }
  return x;
}

// Brute-force 2D convolution oracle (valid padding, wrapping i32).
inline std::vector<int64_t> conv2d_reference(const std::vector<int64_t>& a, int ma, int na,
                                             const std::vector<int64_t>& k, int kh, int kw) {
  int om = ma - kh + 1, on = na - kw + 1;
  std::vector<int64_t> y((size_t)om * on, 0);
  for (int i = 0; i < om; i++)
    for (int j = 0; j < on; j++) {
      int32_t acc = 0;
      for (int u = 0; u < kh; u++)
        for (int v = 0; v < kw; v++) {
          int32_t prod = (int32_t)a[(i + u) * na + (j + v)] * (int32_t)k[u * kw + v];
          acc = (int32_t)(acc + prod);
        }
      y[i * on + j] = acc;
    }
  return y;
}

inline InputValue scalar_arg(int64_t v) {
  InputValue iv;
  iv.scalar = v;
  return iv;
}
inline InputValue tensor_arg(std::vector<int64_t> elems) {
  InputValue iv;
  iv.is_scalar = false;
  iv.elems = std::move(elems);
  return iv;
}

}  // namespace hjltest
