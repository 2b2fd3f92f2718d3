#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hjlc/ir.hpp"

namespace hjl {

// A runtime argument: a scalar, or a flat row-major matrix/buffer payload.
struct InputValue {
  bool is_scalar = true;
  int64_t scalar = 0;
  std::vector<int64_t> elems;
};

struct InterpResult {
  bool ok = false;
  std::string error;
  SrcSpan error_loc;
  // Normalized observable outputs: the scalar or matrix return value (flat
  // row-major) followed by the contents of every external out-buffer argument.
  std::vector<int64_t> outputs;
};

// Reference semantics for a verified module at any pipeline stage. Index base
// and element order follow the module's stage flags.
InterpResult interpret(const ir::IrModule& m, const std::vector<InputValue>& args);

}  // namespace hjl
