#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Seeded random kernel generator: type-stable i32 programs with nested
// if/for, used for property tests across the pass pipeline.

namespace hjltest {

struct Rng {
  uint64_t state;
  explicit Rng(uint64_t seed) : state(seed + 0x9e3779b97f4a7c15ull) {}
  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  int64_t range(int64_t lo, int64_t hi) {  // inclusive
    return lo + (int64_t)(next() % (uint64_t)(hi - lo + 1));
  }
};

class ProgramGen {
 public:
  explicit ProgramGen(uint64_t seed) : rng_(seed) {}

  std::string generate() {
    vars_ = {"a", "b"};
    loop_depth_ = 0;
    next_var_ = 0;
    std::string body = gen_body((int)rng_.range(2, 5), 1);
    std::string out = "function kernel(a::Int32, b::Int32)\n";
    out += body;
    out += "    return " + pick_var() + "\n";
    out += "end\n";
    return out;
  }

 private:
  Rng rng_;
  std::vector<std::string> vars_;   // assignable variables
  std::vector<std::string> ivs_;    // live loop counters (read-only)
  int loop_depth_ = 0;
  int next_var_ = 0;

  std::string pick_var() { return vars_[rng_.range(0, (int64_t)vars_.size() - 1)]; }
  std::string pick_read() {
    size_t n = vars_.size() + ivs_.size();
    size_t i = (size_t)rng_.range(0, (int64_t)n - 1);
    return i < vars_.size() ? vars_[i] : ivs_[i - vars_.size()];
  }

  std::string gen_expr(int depth) {
    if (depth <= 0 || rng_.range(0, 2) == 0) {
      if (rng_.range(0, 2) == 0) return std::to_string(rng_.range(-20, 20));
      return pick_read();
    }
    const char* ops[] = {"+", "-", "*"};
    std::string op = ops[rng_.range(0, 2)];
    return "(" + gen_expr(depth - 1) + " " + op + " " + gen_expr(depth - 1) + ")";
  }

  std::string gen_cond(int depth) {
    const char* cmps[] = {"<", ">", "==", "!=", ">="};
    return gen_expr(depth) + " " + cmps[rng_.range(0, 4)] + " " + gen_expr(depth);
  }

  std::string gen_body(int stmts, int depth) {
    std::string ind(depth * 4, ' ');
    std::string out;
    for (int i = 0; i < stmts; i++) {
      int kind = (int)rng_.range(0, 9);
      if (kind <= 4 || depth >= 3) {  // plain assignment
        bool fresh = rng_.range(0, 2) == 0 || vars_.size() < 3;
        std::string name = fresh ? "v" + std::to_string(next_var_++) : pick_var();
        out += ind + name + " = " + gen_expr(2) + "\n";
        if (fresh) vars_.push_back(name);
      } else if (kind <= 6) {  // ternary assignment to an existing var
        std::string name = pick_var();
        out += ind + name + " = " + gen_cond(1) + " ? " + gen_expr(1) + " : " +
               gen_expr(1) + "\n";
      } else if (kind <= 8) {  // if over existing vars only
        size_t nvars = vars_.size();
        out += ind + "if " + gen_cond(1) + "\n";
        out += gen_stable_arm(depth + 1);
        if (rng_.range(0, 1) == 0) {
          out += ind + "else\n";
          out += gen_stable_arm(depth + 1);
        }
        out += ind + "end\n";
        vars_.resize(nvars);  // branch-local vars stay local
      } else {  // bounded for loop
        std::string iv = "i" + std::to_string(next_var_++);
        out += ind + "for " + iv + " in 1:" + std::to_string(rng_.range(1, 5)) + "\n";
        ivs_.push_back(iv);
        out += gen_stable_arm(depth + 1);
        ivs_.pop_back();
        out += ind + "end\n";
      }
    }
    return out;
  }

  // Arms assign only pre-existing variables so every path stays definite.
  std::string gen_stable_arm(int depth) {
    std::string ind(depth * 4, ' ');
    std::string out;
    int stmts = (int)rng_.range(1, 3);
    for (int i = 0; i < stmts; i++) {
      std::string name = pick_var();
      out += ind + name + " = " + gen_expr(2) + "\n";
    }
    return out;
  }
};

}  // namespace hjltest
