#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

#include "hjlc/ast.hpp"
#include "hjlc/diag.hpp"
#include "hjlc/ir.hpp"

namespace hjl {

struct PipelineOptions {
  bool opt = true;
  std::set<std::string> disabled;  // pass names to skip (ablation)
  bool dynamic_schedule = true;    // gates insert_merge_blocks
};

// Named snapshots along Figure-1 order. `core` is what the schedulers consume.
struct CompileArtifacts {
  Ast typed_ast;
  ir::IrModule hir;         // straightforward translation
  ir::IrModule normalized;  // after normalize + the front opt set
  ir::IrModule precompile;  // CFG form after the back opt set
  ir::IrModule core;        // scheduler input (merge blocks inserted on the dynamic path)
  ir::ComplexityReport front_complexity;  // captured at `normalized`
  ir::ComplexityReport back_complexity;   // captured at the PreCompile CFG dump
};

bool compile_to_core(const SourceProgram& src, const PipelineOptions& opts,
                     CompileArtifacts& out, DiagList& diags);

// Instantiation config: {"entry": "...", "params": {...}, "input_ranges": {...}}
struct BenchConfig {
  std::string entry;
  Instantiation params;
  std::map<std::string, std::pair<int64_t, int64_t>> input_ranges;
};
bool parse_bench_config(const std::string& json_text, BenchConfig& out, std::string& err);

}  // namespace hjl
