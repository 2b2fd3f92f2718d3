#include "hjlc/pipeline.hpp"

#include "hjlc/build.hpp"
#include "hjlc/frontend.hpp"
#include "hjlc/passes.hpp"
#include "json.hpp"

namespace hjl {

namespace {

using PassFn = bool (*)(ir::IrModule&, DiagList&);

struct Step {
  const char* name;
  PassFn fn;
};

bool run_steps(ir::IrModule& m, const PipelineOptions& opts,
               const std::vector<Step>& steps, DiagList& diags) {
  for (auto& s : steps) {
    if (opts.disabled.count(s.name)) continue;
    if (!s.fn(m, diags)) return false;
  }
  return true;
}

}  // namespace

bool compile_to_core(const SourceProgram& src, const PipelineOptions& opts,
                     CompileArtifacts& out, DiagList& diags) {
  if (!parse_program(src, out.typed_ast, diags)) return false;
  if (!monomorphize(out.typed_ast, src.entry, src.instantiation, diags)) return false;
  if (!check_type_stability(out.typed_ast, src.entry, diags)) return false;
  if (!build_hir(out.typed_ast, src.entry, out.hir, diags)) return false;

  ir::IrModule m = out.hir;

  const std::vector<Step> normalize = {
      {"index_base_to_zero", passes::index_base_to_zero},
      {"layout_to_row_major", passes::layout_to_row_major},
      {"legalize_ssa", passes::legalize_ssa},
      {"map_math_ops", passes::map_math_ops},
  };
  if (!run_steps(m, opts, normalize, diags)) return false;

  // The optimization suite's fixed order; delete_unused_memory is a no-op
  // before bufferization, and merge insertion waits for CFG form.
  const std::vector<Step> opt_set = {
      {"canonicalize", passes::canonicalize},
      {"cse_dce", passes::cse_dce},
      {"delete_unused_memory", passes::delete_unused_memory},
      {"canonicalize", passes::canonicalize},
  };
  if (opts.opt && !run_steps(m, opts, opt_set, diags)) return false;
  out.normalized = m;
  out.front_complexity = ir::complexity(m);
  out.front_complexity.stage = "frontend";
  out.front_complexity.opt = opts.opt;

  const std::vector<Step> lower = {
      {"bufferize", passes::bufferize},
      {"outputs_by_ref", passes::outputs_by_ref},
      {"lower_matrix_ops", passes::lower_matrix_ops},
  };
  if (!run_steps(m, opts, lower, diags)) return false;
  if (opts.opt && !run_steps(m, opts, opt_set, diags)) return false;

  const std::vector<Step> cfg = {{"to_cfg", passes::to_cfg}};
  if (!run_steps(m, opts, cfg, diags)) return false;
  out.precompile = m;
  out.back_complexity = ir::complexity(m);
  out.back_complexity.stage = "backend";
  out.back_complexity.opt = opts.opt;

  // Merge insertion is structural on the dynamic path (the dataflow
  // conversion requires at most two predecessors per block); it stays
  // ablatable via --disable-pass.
  if (opts.dynamic_schedule && !opts.disabled.count("insert_merge_blocks")) {
    if (!passes::insert_merge_blocks(m, diags)) return false;
  }
  out.core = std::move(m);

  auto viol = ir::verify(out.core);
  if (!viol.empty()) {
    for (auto& v : viol) diags.error(v.where + ": " + v.what);
    diags.error("internal: core module failed verification");
    return false;
  }
  return true;
}

bool parse_bench_config(const std::string& json_text, BenchConfig& out, std::string& err) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    err = std::string("config parse error: ") + e.what();
    return false;
  }
  if (!j.contains("entry") || !j["entry"].is_string()) {
    err = "config missing \"entry\"";
    return false;
  }
  out.entry = j["entry"].get<std::string>();
  if (j.contains("params")) {
    for (auto& [key, val] : j["params"].items()) {
      Binding b;
      if (val.is_number_integer()) {
        b.value = val.get<int64_t>();
      } else if (val.is_string()) {
        b.is_type = true;
        if (!parse_scalar_name(val.get<std::string>(), b.type)) {
          err = "unknown type name '" + val.get<std::string>() + "' for parameter " + key;
          return false;
        }
      } else {
        err = "parameter " + key + " must be an integer or a type name";
        return false;
      }
      out.params.push_back({key, b});
    }
  }
  if (j.contains("input_ranges")) {
    for (auto& [key, val] : j["input_ranges"].items()) {
      if (!val.is_array() || val.size() != 2) {
        err = "input_ranges." + key + " must be [lo, hi]";
        return false;
      }
      out.input_ranges[key] = {val[0].get<int64_t>(), val[1].get<int64_t>()};
    }
  }
  return true;
}

}  // namespace hjl
