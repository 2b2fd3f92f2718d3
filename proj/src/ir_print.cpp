#include <map>
#include <sstream>

#include "hjlc/ir.hpp"

namespace hjl::ir {

namespace {

class Printer {
 public:
  explicit Printer(const IrModule& m) : m_(m) {}

  std::string run() {
    os_ << "hjl.module entry=@" << m_.entry << " stage=[" << stage_str(m_.stage) << "]\n";
    for (auto& g : m_.globals) {
      os_ << "global @" << g.name << " : " << scalar_name(g.elem) << " x " << g.size
          << " = [";
      for (size_t i = 0; i < g.data.size(); i++) {
        if (i) os_ << ", ";
        os_ << g.data[i];
      }
      os_ << "]\n";
    }
    for (auto& f : m_.funcs) print_func(f);
    return os_.str();
  }

  static std::string stage_str(const StageFlags& s) {
    std::string out;
    auto add = [&](bool on, const char* tag) {
      if (!on) return;
      if (!out.empty()) out += " ";
      out += tag;
    };
    add(s.zero_based, "zb");
    add(s.row_major, "rm");
    add(s.ssa, "ssa");
    add(s.math_folded, "math");
    add(s.bufferized, "buf");
    add(s.by_ref, "byref");
    add(s.mat_lowered, "ml");
    add(s.cfg, "cfg");
    add(s.merged, "mrg");
    return out;
  }

 private:
  const IrModule& m_;
  std::ostringstream os_;
  std::map<ValueId, int> num_;
  int next_ = 0;

  std::string v(ValueId id) {
    auto it = num_.find(id);
    if (it == num_.end()) it = num_.emplace(id, next_++).first;
    return "%" + std::to_string(it->second);
  }

  std::string results_str(const Op& op) {
    if (op.results.empty()) return "";
    if (op.results.size() == 1) return v(op.results[0]) + " = ";
    // Result groups share one canonical name: %n:count with uses %n#k.
    std::string head = v(op.results[0]);
    for (size_t i = 1; i < op.results.size(); i++) v(op.results[i]);
    return head + ":" + std::to_string(op.results.size()) + " = ";
  }

  std::string use(const IrFunction& f, ValueId id) { (void)f; return v(id); }

  std::string tuple_types(const IrFunction& f, const std::vector<ValueId>& vals) {
    std::string s = "(";
    for (size_t i = 0; i < vals.size(); i++) {
      if (i) s += ",";
      s += type_name(f.type_of(vals[i]));
    }
    return s + ")";
  }

  void print_func(const IrFunction& f) {
    os_ << "func @" << f.name << "(";
    for (size_t i = 0; i < f.params.size(); i++) {
      if (i) os_ << ", ";
      os_ << v(f.params[i]) << ": " << type_name(f.type_of(f.params[i]));
      if (i < f.param_space.size() && f.param_space[i] == BufSpace::External) os_ << " ext";
    }
    os_ << ") -> " << type_name(f.ret) << " {\n";
    print_region(f, f.body, 1, /*print_entry_args=*/true);
    os_ << "}\n";
  }

  // scf regions have a single block whose args are printed on the op line, so
  // their block headers are suppressed.
  void print_region(const IrFunction& f, const Region& r, int depth, bool entry_args,
                    bool suppress_args = false) {
    std::string ind(depth * 2, ' ');
    for (size_t bi = 0; bi < r.blocks.size(); bi++) {
      auto& b = r.blocks[bi];
      bool show_header =
          !suppress_args && (r.blocks.size() > 1 || !b.args.empty() || entry_args);
      if (show_header) {
        os_ << ind << "^" << b.id << "(";
        for (size_t i = 0; i < b.args.size(); i++) {
          if (i) os_ << ", ";
          os_ << v(b.args[i]) << ": " << type_name(f.type_of(b.args[i]));
        }
        os_ << "):\n";
      }
      for (auto& op : b.ops) print_op(f, op, depth + (show_header ? 1 : 0));
    }
  }

  void print_op(const IrFunction& f, const Op& op, int depth) {
    std::string ind(depth * 2, ' ');
    os_ << ind << results_str(op) << op_name(op.kind);
    auto rtype = [&]() {
      if (op.results.size() == 1)
        os_ << " : " << type_name(f.type_of(op.results[0]));
      else if (op.results.size() > 1)
        os_ << " : " << tuple_types(f, op.results);
    };
    switch (op.kind) {
      case OpKind::TensorEmpty:
        rtype();
        break;
      case OpKind::TensorFromElements: {
        if (op.attrs.const_table) os_ << " table @" << op.attrs.global;
        os_ << " ";
        for (size_t i = 0; i < op.operands.size(); i++) {
          if (i) os_ << ", ";
          os_ << v(op.operands[i]);
        }
        rtype();
        break;
      }
      case OpKind::TensorExtract: {
        os_ << " " << v(op.operands[0]) << "[";
        for (size_t i = 1; i < op.operands.size(); i++) {
          if (i > 1) os_ << ", ";
          os_ << v(op.operands[i]);
        }
        os_ << "]";
        rtype();
        break;
      }
      case OpKind::TensorInsert: {
        os_ << " " << v(op.operands[0]) << " into " << v(op.operands[1]) << "[";
        for (size_t i = 2; i < op.operands.size(); i++) {
          if (i > 2) os_ << ", ";
          os_ << v(op.operands[i]);
        }
        os_ << "]";
        rtype();
        break;
      }
      case OpKind::TensorMatmul: {
        if (op.results.empty()) {
          os_ << (op.attrs.transpose_lhs ? " tA" : "") << " " << v(op.operands[0]) << ", "
              << v(op.operands[1]) << " -> " << v(op.operands[2]) << " : " << op.attrs.m
              << "x" << op.attrs.k << "x" << op.attrs.n;
        } else {
          os_ << " " << v(op.operands[0]) << ", " << v(op.operands[1]);
          rtype();
        }
        break;
      }
      case OpKind::TensorTranspose: {
        if (op.results.empty()) {
          os_ << " " << v(op.operands[0]) << " -> " << v(op.operands[1]) << " : "
              << op.attrs.rows << "x" << op.attrs.cols;
        } else {
          os_ << " " << v(op.operands[0]);
          rtype();
        }
        break;
      }
      case OpKind::ScfFor: {
        os_ << " " << v(op.regions[0].blocks[0].args[0]) << " = " << v(op.operands[0])
            << " to " << v(op.operands[1]) << (op.attrs.half_open ? " half" : " closed");
        os_ << " iter(";
        for (size_t i = 2; i < op.operands.size(); i++) {
          if (i > 2) os_ << ", ";
          os_ << v(op.regions[0].blocks[0].args[i - 1]) << " = " << v(op.operands[i]);
        }
        os_ << ")";
        rtype();
        os_ << " {\n";
        print_region(f, op.regions[0], depth + 1, false, /*suppress_args=*/true);
        os_ << ind << "}\n";
        return;
      }
      case OpKind::ScfIf: {
        os_ << " " << v(op.operands[0]);
        rtype();
        os_ << " {\n";
        print_region(f, op.regions[0], depth + 1, false, /*suppress_args=*/true);
        os_ << ind << "} else {\n";
        print_region(f, op.regions[1], depth + 1, false, /*suppress_args=*/true);
        os_ << ind << "}\n";
        return;
      }
      case OpKind::ScfYield:
      case OpKind::FuncReturn: {
        for (size_t i = 0; i < op.operands.size(); i++) {
          os_ << (i ? ", " : " ") << v(op.operands[i]);
        }
        break;
      }
      case OpKind::ArithConst: {
        if (op.attrs.pending_math) {
          char buf[64];
          snprintf(buf, sizeof buf, "%.17g", op.attrs.math_arg);
          os_ << " math " << op.attrs.math_fn << " " << buf;
        } else {
          os_ << " " << op.attrs.ival;
        }
        rtype();
        break;
      }
      case OpKind::ArithCmp:
        os_ << " " << pred_name(op.attrs.pred) << " " << v(op.operands[0]) << ", "
            << v(op.operands[1]);
        rtype();
        break;
      case OpKind::ArithAdd:
      case OpKind::ArithSub:
      case OpKind::ArithMul:
      case OpKind::ArithShl:
      case OpKind::ArithShr:
      case OpKind::ArithSelect:
      case OpKind::ArithCast:
      case OpKind::ArithFixedRescale: {
        for (size_t i = 0; i < op.operands.size(); i++) {
          os_ << (i ? ", " : " ") << v(op.operands[i]);
        }
        rtype();
        break;
      }
      case OpKind::BufAlloc: {
        if (op.attrs.space == BufSpace::Rom) os_ << " rom @" << op.attrs.global;
        rtype();
        break;
      }
      case OpKind::BufLoad:
        os_ << " " << v(op.operands[0]) << "[" << v(op.operands[1]) << "]";
        rtype();
        break;
      case OpKind::BufStore:
        os_ << " " << v(op.operands[2]) << " -> " << v(op.operands[0]) << "["
            << v(op.operands[1]) << "]";
        break;
      case OpKind::BufCopy:
        os_ << " " << v(op.operands[0]) << " -> " << v(op.operands[1]);
        break;
      case OpKind::BufDealloc:
        os_ << " " << v(op.operands[0]);
        break;
      case OpKind::CfgBr:
        os_ << " ^" << op.succs[0] << "(";
        for (size_t i = 0; i < op.succ_args[0].size(); i++) {
          if (i) os_ << ", ";
          os_ << v(op.succ_args[0][i]);
        }
        os_ << ")";
        break;
      case OpKind::CfgCondBr: {
        os_ << " " << v(op.operands[0]);
        for (int s = 0; s < 2; s++) {
          os_ << ", ^" << op.succs[s] << "(";
          for (size_t i = 0; i < op.succ_args[s].size(); i++) {
            if (i) os_ << ", ";
            os_ << v(op.succ_args[s][i]);
          }
          os_ << ")";
        }
        break;
      }
      case OpKind::FuncCall: {
        os_ << " @" << op.attrs.callee << "(";
        for (size_t i = 0; i < op.operands.size(); i++) {
          if (i) os_ << ", ";
          os_ << v(op.operands[i]);
        }
        os_ << ")";
        rtype();
        break;
      }
    }
    os_ << "\n";
  }
};

}  // namespace

std::string print_ir(const IrModule& m) { return Printer(m).run(); }

}  // namespace hjl::ir
