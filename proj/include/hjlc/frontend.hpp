#pragma once

#include "hjlc/ast.hpp"
#include "hjlc/diag.hpp"

namespace hjl {

// Lex + parse all files of the program into an untyped AST.
bool parse_program(const SourceProgram& src, Ast& out, DiagList& diags);

// Substitute all where-parameters with the entry instantiation, resolve every
// call site to a concrete function body, and reject recursion. Idempotent.
bool monomorphize(Ast& ast, const std::string& entry, const Instantiation& inst,
                  DiagList& diags);

// Enforce one concrete type per variable over all paths and fill Expr::type.
// Rejects type instability and use-before-definition.
bool check_type_stability(Ast& ast, const std::string& entry, DiagList& diags);

// Prints an AST back to surface syntax (round-trip aid for parser tests).
std::string print_ast(const Ast& ast);

}  // namespace hjl
