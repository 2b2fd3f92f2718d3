#include "hjlc/types.hpp"

#include <cmath>

namespace hjl {

bool valid_scalar(const ScalarType& t) {
  int w = t.width;
  if (w != 1 && w != 8 && w != 16 && w != 32 && w != 64) return false;
  switch (t.kind) {
    case ScalarType::Kind::Bool:
      return w == 1 && t.frac == 0;
    case ScalarType::Kind::Fixed:
      return t.frac <= t.width && w > 1;
    default:
      return t.frac == 0;
  }
}

std::string scalar_name(const ScalarType& t) {
  switch (t.kind) {
    case ScalarType::Kind::Bool: return "bool";
    case ScalarType::Kind::SInt: return "i" + std::to_string(t.width);
    case ScalarType::Kind::UInt: return "u" + std::to_string(t.width);
    case ScalarType::Kind::Fixed:
      return "fx" + std::to_string(t.width) + "_" + std::to_string(t.frac);
  }
  return "?";
}

bool parse_scalar_name(const std::string& s, ScalarType& out) {
  auto num = [](const std::string& str, size_t pos, size_t end, int& v) {
    if (pos >= end) return false;
    v = 0;
    for (size_t i = pos; i < end; i++) {
      if (str[i] < '0' || str[i] > '9') return false;
      v = v * 10 + (str[i] - '0');
    }
    return true;
  };
  if (s == "bool" || s == "i1") {
    out = ScalarType::boolean();
    return true;
  }
  int w = 0, f = 0;
  if (s.size() > 1 && s[0] == 'i' && num(s, 1, s.size(), w)) {
    out = ScalarType::sint(w);
    return valid_scalar(out);
  }
  if (s.size() > 1 && s[0] == 'u' && num(s, 1, s.size(), w)) {
    out = ScalarType::uint_(w);
    return valid_scalar(out);
  }
  if (s.size() > 3 && s.rfind("fx", 0) == 0) {
    auto us = s.find('_', 2);
    if (us == std::string::npos) return false;
    if (!num(s, 2, us, w) || !num(s, us + 1, s.size(), f)) return false;
    out = ScalarType::fixed(w, f);
    return valid_scalar(out);
  }
  return false;
}

std::string type_name(const Type& t) {
  switch (t.kind) {
    case Type::Kind::None: return "void";
    case Type::Kind::Scalar: return scalar_name(t.scalar);
    case Type::Kind::Matrix:
      return "tensor<" + std::to_string(t.rows) + "x" + std::to_string(t.cols) + "x" +
             scalar_name(t.scalar) + (t.row_major ? ",rm>" : ",cm>");
    case Type::Kind::Buffer:
      return "buf<" + std::to_string(t.size) + "x" + scalar_name(t.scalar) + ">";
    case Type::Kind::Real: return "real";
    case Type::Kind::Ctrl: return "ctrl";
  }
  return "?";
}

int64_t wrap_to(const ScalarType& t, int64_t v) {
  int w = t.width;
  if (w >= 64) return v;
  uint64_t mask = (uint64_t(1) << w) - 1;
  uint64_t u = (uint64_t)v & mask;
  if (t.is_signed() && (u >> (w - 1)) != 0) return (int64_t)(u | ~mask);
  return (int64_t)u;
}

int64_t eval_add(const ScalarType& t, int64_t a, int64_t b) {
  return wrap_to(t, (int64_t)((uint64_t)a + (uint64_t)b));
}

int64_t eval_sub(const ScalarType& t, int64_t a, int64_t b) {
  return wrap_to(t, (int64_t)((uint64_t)a - (uint64_t)b));
}

int64_t eval_mul(const ScalarType& t, int64_t a, int64_t b) {
  if (t.kind == ScalarType::Kind::Fixed) {
    // Full 2w-bit product, arithmetic shift right by frac, truncate to w.
    __int128 p = (__int128)a * (__int128)b;
    p >>= t.frac;
    return wrap_to(t, (int64_t)p);
  }
  return wrap_to(t, (int64_t)((uint64_t)a * (uint64_t)b));
}

int64_t eval_shl(const ScalarType& t, int64_t a, int64_t amount) {
  if (amount < 0 || amount >= t.width) return 0;
  return wrap_to(t, (int64_t)((uint64_t)a << amount));
}

int64_t eval_shr(const ScalarType& t, int64_t a, int64_t amount) {
  bool sgn = t.is_signed();
  if (amount < 0 || amount >= t.width) return sgn ? (a < 0 ? -1 : 0) : 0;
  if (sgn) return wrap_to(t, a >> amount);
  uint64_t u = (uint64_t)wrap_to(t, a);
  if (t.width < 64) u &= (uint64_t(1) << t.width) - 1;
  return wrap_to(t, (int64_t)(u >> amount));
}

int64_t eval_cast(const ScalarType& to, const ScalarType& from, int64_t v) {
  bool ffx = from.kind == ScalarType::Kind::Fixed;
  bool tfx = to.kind == ScalarType::Kind::Fixed;
  if (!ffx && !tfx) return wrap_to(to, v);  // int/bool resize
  int ffrac = ffx ? from.frac : 0;
  int tfrac = tfx ? to.frac : 0;
  if (tfrac >= ffrac) {
    int sh = tfrac - ffrac;
    __int128 p = (__int128)v << sh;
    return wrap_to(to, (int64_t)p);
  }
  return wrap_to(to, v >> (ffrac - tfrac));  // arithmetic: truncates toward -inf
}

int64_t quantize_real(const ScalarType& t, double x) {
  double scaled = std::ldexp(x, t.kind == ScalarType::Kind::Fixed ? t.frac : 0);
  // Round half to even.
  double r = std::nearbyint(scaled);
  double fl = std::floor(scaled);
  if (scaled - fl == 0.5) {
    r = (std::fmod(fl, 2.0) == 0.0) ? fl : fl + 1.0;
  }
  return wrap_to(t, (int64_t)r);
}

}  // namespace hjl
