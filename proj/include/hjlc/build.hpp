#pragma once

#include "hjlc/ast.hpp"
#include "hjlc/diag.hpp"
#include "hjlc/ir.hpp"

namespace hjl {

// Straightforward, unoptimized translation of a type-stable AST into the
// layered IR. Matrices keep value semantics; loops/ifs become scf ops; all
// calls are inlined bottom-up, leaving exactly one entry function.
bool build_hir(const Ast& ast, const std::string& entry, ir::IrModule& out,
               DiagList& diags);

}  // namespace hjl
