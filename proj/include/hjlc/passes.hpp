#pragma once

#include "hjlc/diag.hpp"
#include "hjlc/ir.hpp"

namespace hjl::passes {

// normalize: surface/IR mismatch resolution, in fixed order.
bool index_base_to_zero(ir::IrModule& m, DiagList& diags);
bool layout_to_row_major(ir::IrModule& m, DiagList& diags);
bool legalize_ssa(ir::IrModule& m, DiagList& diags);
bool map_math_ops(ir::IrModule& m, DiagList& diags);

// lower: tensors to buffers, outputs by reference, matrix ops to loops, CFG.
bool bufferize(ir::IrModule& m, DiagList& diags);
bool outputs_by_ref(ir::IrModule& m, DiagList& diags);
bool lower_matrix_ops(ir::IrModule& m, DiagList& diags);
bool to_cfg(ir::IrModule& m, DiagList& diags);

// opt: restrained canonicalization and cleanup, individually toggleable.
bool canonicalize(ir::IrModule& m, DiagList& diags);
bool cse_dce(ir::IrModule& m, DiagList& diags);
bool delete_unused_memory(ir::IrModule& m, DiagList& diags);
bool insert_merge_blocks(ir::IrModule& m, DiagList& diags);

}  // namespace hjl::passes
