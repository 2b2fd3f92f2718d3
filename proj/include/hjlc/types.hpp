#pragma once

#include <cstdint>
#include <string>

namespace hjl {

// Scalar value types. Fixed-point stores an integer v that denotes v / 2^frac.
struct ScalarType {
  enum class Kind : uint8_t { SInt, UInt, Bool, Fixed };
  Kind kind = Kind::SInt;
  uint8_t width = 32;  // one of 1, 8, 16, 32, 64 (bool is width 1)
  uint8_t frac = 0;    // fixed-point only, 0 <= frac <= width

  bool operator==(const ScalarType&) const = default;

  bool is_signed() const { return kind == Kind::SInt || kind == Kind::Fixed; }
  bool is_int() const { return kind == Kind::SInt || kind == Kind::UInt; }
  static ScalarType sint(int w) { return {Kind::SInt, (uint8_t)w, 0}; }
  static ScalarType uint_(int w) { return {Kind::UInt, (uint8_t)w, 0}; }
  static ScalarType boolean() { return {Kind::Bool, 1, 0}; }
  static ScalarType fixed(int w, int f) { return {Kind::Fixed, (uint8_t)w, (uint8_t)f}; }
};

bool valid_scalar(const ScalarType& t);
std::string scalar_name(const ScalarType& t);  // "i32", "u8", "bool", "fx32_16"
bool parse_scalar_name(const std::string& s, ScalarType& out);

// A value type: scalar, statically shaped matrix, memory buffer, or none (void).
// Matrices are column-major on the surface and row-major after normalization.
struct Type {
  enum class Kind : uint8_t { None, Scalar, Matrix, Buffer, Real, Ctrl };
  Kind kind = Kind::None;
  ScalarType scalar{};  // Scalar / Matrix elem / Buffer elem
  int32_t rows = 0, cols = 0;
  bool row_major = false;  // Matrix layout
  int64_t size = 0;        // Buffer element count

  bool operator==(const Type&) const = default;

  static Type none() { return {}; }
  static Type scalar_t(ScalarType s) {
    Type t; t.kind = Kind::Scalar; t.scalar = s; return t;
  }
  static Type matrix(int r, int c, ScalarType elem, bool rm) {
    Type t; t.kind = Kind::Matrix; t.scalar = elem; t.rows = r; t.cols = c; t.row_major = rm;
    return t;
  }
  static Type buffer(int64_t n, ScalarType elem) {
    Type t; t.kind = Kind::Buffer; t.scalar = elem; t.size = n; return t;
  }
  // Compile-time real constant (math intrinsics / decimal literals); never reaches hardware.
  static Type real() { Type t; t.kind = Kind::Real; return t; }
  static Type ctrl() { Type t; t.kind = Kind::Ctrl; return t; }

  bool is_scalar() const { return kind == Kind::Scalar; }
  bool is_matrix() const { return kind == Kind::Matrix; }
  bool is_buffer() const { return kind == Kind::Buffer; }
  bool is_none() const { return kind == Kind::None; }
  int64_t elems() const { return kind == Kind::Matrix ? (int64_t)rows * cols : size; }
};

std::string type_name(const Type& t);

// Two's-complement wrap of a 64-bit value into the canonical representation of
// scalar type t: signed/fixed values are sign-extended, unsigned zero-extended.
int64_t wrap_to(const ScalarType& t, int64_t v);

// Shared scalar arithmetic (frontend rules; used by interpreter and simulator).
int64_t eval_add(const ScalarType& t, int64_t a, int64_t b);
int64_t eval_sub(const ScalarType& t, int64_t a, int64_t b);
int64_t eval_mul(const ScalarType& t, int64_t a, int64_t b);  // fixed: full product >> frac
int64_t eval_shl(const ScalarType& t, int64_t a, int64_t amount);
int64_t eval_shr(const ScalarType& t, int64_t a, int64_t amount);
int64_t eval_cast(const ScalarType& to, const ScalarType& from, int64_t v);
// Round-to-nearest-even of x * 2^frac, wrapped into t.
int64_t quantize_real(const ScalarType& t, double x);

}  // namespace hjl
