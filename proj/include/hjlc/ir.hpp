#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hjlc/diag.hpp"
#include "hjlc/types.hpp"

namespace hjl::ir {

using ValueId = int32_t;
constexpr ValueId kNoValue = -1;

// Closed op catalog, grouped by layer.
enum class OpKind : uint8_t {
  // tensor layer (value semantics)
  TensorEmpty, TensorFromElements, TensorExtract, TensorInsert, TensorMatmul,
  TensorTranspose,
  // structured control flow
  ScfFor, ScfIf, ScfYield,
  // arithmetic
  ArithConst, ArithAdd, ArithSub, ArithMul, ArithShl, ArithShr, ArithCmp,
  ArithSelect, ArithCast, ArithFixedRescale,
  // memory buffers
  BufAlloc, BufLoad, BufStore, BufCopy, BufDealloc,
  // control-flow graph
  CfgBr, CfgCondBr,
  // functions
  FuncCall, FuncReturn,
};

enum class Layer : uint8_t { Tensor, Scf, Arith, Buffer, Cfg, Func };
Layer layer_of(OpKind k);
const char* op_name(OpKind k);  // "arith.add" etc.

enum class CmpPred : uint8_t { Lt, Gt, Le, Ge, Eq, Ne };
const char* pred_name(CmpPred p);

enum class BufSpace : uint8_t { Local, External, Rom };

struct Attrs {
  int64_t ival = 0;                 // ArithConst value (raw bits, canonical wrap)
  bool pending_math = false;        // ArithConst awaiting map_math_ops folding
  std::string math_fn;              // "atan"
  double math_arg = 0;
  CmpPred pred = CmpPred::Lt;       // ArithCmp
  bool half_open = false;           // ScfFor: [lb, ub) counters vs closed [lb, ub]
  BufSpace space = BufSpace::Local; // BufAlloc
  std::string global;               // BufAlloc: ROM symbol in module globals
  std::string callee;               // FuncCall
  bool transpose_lhs = false;       // TensorMatmul buffer form
  int64_t m = 0, k = 0, n = 0;      // TensorMatmul dims (buffer form)
  int64_t rows = 0, cols = 0;       // TensorTranspose buffer form (source dims)
  bool const_table = false;         // TensorFromElements hoisted to a constant table
};

struct Block;
struct Region {
  std::vector<Block> blocks;
};

struct Op {
  OpKind kind;
  std::vector<ValueId> operands;
  std::vector<ValueId> results;
  Attrs attrs;
  std::vector<Region> regions;              // ScfFor: {body}; ScfIf: {then, else}
  std::vector<int> succs;                   // CfgBr: {b}; CfgCondBr: {then, else}
  std::vector<std::vector<ValueId>> succ_args;
  SrcSpan span;

  bool is_terminator() const {
    return kind == OpKind::CfgBr || kind == OpKind::CfgCondBr ||
           kind == OpKind::FuncReturn || kind == OpKind::ScfYield;
  }
  ValueId result() const { return results.empty() ? kNoValue : results[0]; }
};

struct Block {
  int id = 0;
  std::vector<ValueId> args;
  std::vector<Op> ops;
};

// Pipeline position flags; the verifier keys layer legality off these.
struct StageFlags {
  bool zero_based = false;   // after index_base_to_zero
  bool row_major = false;    // after layout_to_row_major
  bool ssa = false;          // after legalize_ssa (single definitions hold)
  bool math_folded = false;  // after map_math_ops
  bool bufferized = false;   // after bufferize (no value-semantic tensors)
  bool by_ref = false;       // after outputs_by_ref
  bool mat_lowered = false;  // after lower_matrix_ops (no tensor ops at all)
  bool cfg = false;          // after to_cfg (no scf ops)
  bool merged = false;       // after insert_merge_blocks

  bool operator==(const StageFlags&) const = default;
};

struct IrFunction {
  std::string name;
  std::vector<ValueId> params;  // == body.blocks[0].args
  std::vector<BufSpace> param_space;  // parallel to params once bufferized
  Type ret = Type::none();
  Region body;
  std::vector<Type> vtypes;
  std::vector<std::string> vnames;

  ValueId new_value(Type t, std::string name = "") {
    vtypes.push_back(t);
    vnames.push_back(std::move(name));
    return (ValueId)vtypes.size() - 1;
  }
  const Type& type_of(ValueId v) const { return vtypes[v]; }
};

struct GlobalBuf {
  std::string name;
  ScalarType elem{};
  int64_t size = 0;
  std::vector<int64_t> data;
};

struct IrModule {
  std::string entry;
  std::vector<IrFunction> funcs;
  std::vector<GlobalBuf> globals;
  StageFlags stage;

  IrFunction* find(const std::string& name) {
    for (auto& f : funcs)
      if (f.name == name) return &f;
    return nullptr;
  }
  const IrFunction* find(const std::string& name) const {
    for (auto& f : funcs)
      if (f.name == name) return &f;
    return nullptr;
  }
  const GlobalBuf* global(const std::string& name) const {
    for (auto& g : globals)
      if (g.name == name) return &g;
    return nullptr;
  }
};

// Walks all ops in a region recursively (pre-order), innermost regions included.
template <typename F>
void walk_ops(Region& r, F&& f) {
  for (auto& b : r.blocks)
    for (auto& op : b.ops) {
      f(op);
      for (auto& nested : op.regions) walk_ops(nested, f);
    }
}
template <typename F>
void walk_ops(const Region& r, F&& f) {
  for (auto& b : r.blocks)
    for (auto& op : b.ops) {
      f(op);
      for (auto& nested : op.regions) walk_ops(nested, f);
    }
}

// Textual IR. print_ir emits a canonical form (dense value numbering in print
// order); parse_ir(print_ir(m)) reconstructs an isomorphic module.
std::string print_ir(const IrModule& m);
bool parse_ir(const std::string& text, IrModule& out, DiagList& diags);

struct Violation {
  std::string where;  // "func @f block ^1 op 3 (arith.add)"
  std::string what;
};
// Structural verifier; never panics, reports all violations it finds.
std::vector<Violation> verify(const IrModule& m);

struct ComplexityReport {
  std::string stage;  // "frontend" or "backend"
  bool opt = false;
  int64_t basic_blocks = 0;
  int64_t total_ops = 0;
  int64_t arith_ops = 0;
  int64_t memory_copies = 0;
};
ComplexityReport complexity(const IrModule& m);

}  // namespace hjl::ir
