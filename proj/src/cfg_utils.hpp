#pragma once

#include <map>
#include <vector>

#include "hjlc/ir.hpp"

namespace hjl::ir {

// Successor block ids of a CFG block's terminator (empty if none).
inline std::vector<int> successors(const Block& b) {
  if (b.ops.empty()) return {};
  const Op& t = b.ops.back();
  if (t.kind == OpKind::CfgBr || t.kind == OpKind::CfgCondBr) return t.succs;
  return {};
}

struct CfgInfo {
  std::map<int, int> index;             // block id -> position in region
  std::vector<std::vector<int>> preds;  // by position, holding block ids
  std::vector<std::vector<int>> succs;  // by position, holding block ids
  std::vector<bool> reachable;
  std::vector<int> idom;  // by position; -1 for entry/unreachable

  bool dominates(int a_id, int b_id) const {
    int a = index.at(a_id), b = index.at(b_id);
    while (b != -1) {
      if (b == a) return true;
      b = idom[b];
    }
    return false;
  }
};

CfgInfo analyze_cfg(const Region& r);

}  // namespace hjl::ir
