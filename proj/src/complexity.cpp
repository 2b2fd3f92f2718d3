#include "cfg_utils.hpp"
#include "hjlc/ir.hpp"

namespace hjl::ir {

namespace {

int64_t count_blocks(const Region& r) {
  int64_t n = (int64_t)r.blocks.size();
  for (auto& b : r.blocks)
    for (auto& op : b.ops)
      for (auto& nested : op.regions) n += count_blocks(nested);
  return n;
}

// A whole-buffer copy written as a loop: body is index arithmetic plus exactly
// one load feeding exactly one store into a different buffer.
bool is_copy_loop_body(const Block& body) {
  int loads = 0, stores = 0;
  ValueId loaded = kNoValue;
  bool forwards = false;
  for (auto& op : body.ops) {
    switch (op.kind) {
      case OpKind::BufLoad:
        loads++;
        loaded = op.results[0];
        break;
      case OpKind::BufStore:
        stores++;
        forwards = op.operands[2] == loaded && loaded != kNoValue;
        break;
      case OpKind::ArithConst:
      case OpKind::ArithAdd:
      case OpKind::ArithSub:
      case OpKind::ArithMul:
      case OpKind::ArithCast:
      case OpKind::ScfYield:
        break;
      default:
        return false;
    }
  }
  return loads == 1 && stores == 1 && forwards;
}

// CFG shape: header -> body -> latch -> header ring where the body block is a
// copy body. Conservative; misses exotic formulations by design.
int64_t count_cfg_copy_loops(const Region& r) {
  int64_t n = 0;
  CfgInfo info = analyze_cfg(r);
  for (auto& b : r.blocks) {
    if (b.ops.empty()) continue;
    const Op& t = b.ops.back();
    if (t.kind != OpKind::CfgCondBr) continue;
    // b is a loop header if one successor path re-enters b.
    for (int side = 0; side < 2; side++) {
      auto it = info.index.find(t.succs[side]);
      if (it == info.index.end()) continue;
      const Block& body = r.blocks[it->second];
      auto ss = successors(body);
      bool back = false;
      for (int s : ss) {
        if (s == b.id) back = true;
        auto it2 = info.index.find(s);
        if (it2 != info.index.end()) {
          for (int s2 : successors(r.blocks[it2->second]))
            if (s2 == b.id) back = true;
        }
      }
      if (!back) continue;
      int loads = 0, stores = 0;
      ValueId loaded = kNoValue;
      bool forwards = false;
      for (auto& op : body.ops) {
        if (op.kind == OpKind::BufLoad) {
          loads++;
          loaded = op.results[0];
        } else if (op.kind == OpKind::BufStore) {
          stores++;
          forwards = op.operands[2] == loaded && loaded != kNoValue;
        }
      }
      if (loads == 1 && stores == 1 && forwards) n++;
    }
  }
  return n;
}

}  // namespace

ComplexityReport complexity(const IrModule& m) {
  ComplexityReport rep;
  for (auto& f : m.funcs) {
    rep.basic_blocks += count_blocks(f.body);
    walk_ops(f.body, [&](const Op& op) {
      rep.total_ops++;
      if (layer_of(op.kind) == Layer::Arith) rep.arith_ops++;
      if (op.kind == OpKind::BufCopy) rep.memory_copies++;
      if (op.kind == OpKind::ScfFor && op.regions.size() == 1 &&
          op.regions[0].blocks.size() == 1 && is_copy_loop_body(op.regions[0].blocks[0]))
        rep.memory_copies++;
    });
    if (m.stage.cfg) rep.memory_copies += count_cfg_copy_loops(f.body);
  }
  return rep;
}

}  // namespace hjl::ir
