#include <cctype>
#include <cstring>
#include <map>
#include <sstream>

#include "hjlc/ir.hpp"

namespace hjl::ir {

namespace {

// Cursor over one line of textual IR.
struct Cur {
  const std::string& s;
  size_t i = 0;
  void ws() {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) i++;
  }
  bool eat(char c) {
    ws();
    if (i < s.size() && s[i] == c) {
      i++;
      return true;
    }
    return false;
  }
  bool eat_word(const char* w) {
    ws();
    size_t n = strlen(w);
    if (s.compare(i, n, w) == 0 &&
        (i + n == s.size() || !(isalnum((unsigned char)s[i + n]) || s[i + n] == '_' ||
                                s[i + n] == '.'))) {
      i += n;
      return true;
    }
    return false;
  }
  std::string word() {  // identifier-ish token: letters, digits, _, ., <>-free
    ws();
    size_t b = i;
    while (i < s.size() && (isalnum((unsigned char)s[i]) || s[i] == '_' || s[i] == '.'))
      i++;
    return s.substr(b, i - b);
  }
  bool integer(int64_t& out) {
    ws();
    size_t b = i;
    if (i < s.size() && (s[i] == '-' || s[i] == '+')) i++;
    while (i < s.size() && isdigit((unsigned char)s[i])) i++;
    if (i == b || (i == b + 1 && !isdigit((unsigned char)s[b]))) return false;
    out = std::stoll(s.substr(b, i - b));
    return true;
  }
  bool number(double& out) {
    ws();
    size_t b = i;
    while (i < s.size() && (isdigit((unsigned char)s[i]) || s[i] == '-' || s[i] == '+' ||
                            s[i] == '.' || s[i] == 'e' || s[i] == 'E'))
      i++;
    if (i == b) return false;
    out = std::stod(s.substr(b, i - b));
    return true;
  }
  bool done() {
    ws();
    return i >= s.size();
  }
  std::string rest() { return s.substr(i); }
};

bool parse_type_str(const std::string& t, Type& out) {
  if (t == "void") {
    out = Type::none();
    return true;
  }
  if (t == "ctrl") {
    out = Type::ctrl();
    return true;
  }
  if (t == "real") {
    out = Type::real();
    return true;
  }
  ScalarType st;
  if (parse_scalar_name(t, st)) {
    out = Type::scalar_t(st);
    return true;
  }
  if (t.rfind("tensor<", 0) == 0 && t.back() == '>') {
    std::string body = t.substr(7, t.size() - 8);
    auto comma = body.rfind(',');
    if (comma == std::string::npos) return false;
    std::string layout = body.substr(comma + 1);
    std::string dims = body.substr(0, comma);
    auto x1 = dims.find('x');
    if (x1 == std::string::npos) return false;
    auto x2 = dims.find('x', x1 + 1);
    if (x2 == std::string::npos) return false;
    int r = atoi(dims.substr(0, x1).c_str());
    int c = atoi(dims.substr(x1 + 1, x2 - x1 - 1).c_str());
    if (!parse_scalar_name(dims.substr(x2 + 1), st)) return false;
    if (layout != "cm" && layout != "rm") return false;
    out = Type::matrix(r, c, st, layout == "rm");
    return true;
  }
  if (t.rfind("buf<", 0) == 0 && t.back() == '>') {
    std::string body = t.substr(4, t.size() - 5);
    auto x1 = body.find('x');
    if (x1 == std::string::npos) return false;
    int64_t n = atoll(body.substr(0, x1).c_str());
    if (!parse_scalar_name(body.substr(x1 + 1), st)) return false;
    out = Type::buffer(n, st);
    return true;
  }
  return false;
}

// Reads one type token from the cursor; commas/parens nested in <> belong to
// the type.
bool read_type(Cur& c, Type& out) {
  c.ws();
  size_t b = c.i;
  int depth = 0;
  while (c.i < c.s.size()) {
    char ch = c.s[c.i];
    if (ch == '<') depth++;
    if (ch == '>') depth--;
    if (depth == 0 && (ch == ' ' || ch == ',' || ch == ')')) break;
    c.i++;
  }
  return parse_type_str(c.s.substr(b, c.i - b), out);
}

class IrParser {
 public:
  IrParser(const std::string& text, DiagList& diags) : diags_(diags) {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      lines_.push_back(line);
    }
  }

  bool run(IrModule& m) {
    if (lines_.empty()) return err(0, "empty IR text");
    {
      Cur c{lines_[0]};
      if (!c.eat_word("hjl.module")) return err(1, "expected hjl.module header");
      c.ws();
      if (!c.eat_word("entry") || !c.eat('=') || !c.eat('@'))
        return err(1, "expected entry=@name");
      m.entry = c.word();
      if (c.eat_word("stage") && c.eat('=') && c.eat('[')) {
        while (!c.eat(']')) {
          std::string tag = c.word();
          if (tag.empty()) return err(1, "bad stage tag");
          set_stage(m.stage, tag);
        }
      }
    }
    size_t i = 1;
    while (i < lines_.size()) {
      Cur c{lines_[i]};
      if (c.done()) {
        i++;
        continue;
      }
      if (c.eat_word("global")) {
        GlobalBuf g;
        if (!c.eat('@')) return err(i + 1, "expected @name");
        g.name = c.word();
        if (!c.eat(':')) return err(i + 1, "expected ':'");
        if (!parse_scalar_name(c.word(), g.elem)) return err(i + 1, "bad element type");
        if (!c.eat('x') && !c.eat_word("x")) return err(i + 1, "expected 'x'");
        if (!c.integer(g.size)) return err(i + 1, "expected size");
        if (!c.eat('=') || !c.eat('[')) return err(i + 1, "expected '= ['");
        while (!c.eat(']')) {
          int64_t v;
          if (!c.integer(v)) return err(i + 1, "expected integer");
          g.data.push_back(v);
          c.eat(',');
        }
        m.globals.push_back(std::move(g));
        i++;
        continue;
      }
      if (c.eat_word("func")) {
        if (!parse_func(m, i)) return false;
        continue;
      }
      return err(i + 1, "unexpected line: " + lines_[i]);
    }
    return true;
  }

 private:
  std::vector<std::string> lines_;
  DiagList& diags_;
  IrFunction* f_ = nullptr;
  std::map<std::string, ValueId> vals_;

  bool err(size_t lineno, const std::string& msg) {
    SrcSpan sp;
    sp.begin.line = (int)lineno;
    sp.begin.col = 1;
    diags_.error(sp, "IR parse: " + msg);
    return false;
  }

  static void set_stage(StageFlags& s, const std::string& tag) {
    if (tag == "zb") s.zero_based = true;
    else if (tag == "rm") s.row_major = true;
    else if (tag == "ssa") s.ssa = true;
    else if (tag == "math") s.math_folded = true;
    else if (tag == "buf") s.bufferized = true;
    else if (tag == "byref") s.by_ref = true;
    else if (tag == "ml") s.mat_lowered = true;
    else if (tag == "cfg") s.cfg = true;
    else if (tag == "mrg") s.merged = true;
  }

  ValueId val(const std::string& name, size_t lineno) {
    auto it = vals_.find(name);
    if (it != vals_.end()) return it->second;
    ValueId id = f_->new_value(Type::none());
    vals_[name] = id;
    (void)lineno;
    return id;
  }

  bool read_val(Cur& c, ValueId& out, size_t lineno) {
    if (!c.eat('%')) return err(lineno + 1, "expected %value: " + c.rest());
    out = val(c.word(), lineno);
    return true;
  }

  // Defines (or re-uses, pre-SSA) a value with a known type.
  ValueId define(const std::string& name, Type t) {
    auto it = vals_.find(name);
    if (it != vals_.end()) {
      if (f_->vtypes[it->second].kind == Type::Kind::None) f_->vtypes[it->second] = t;
      return it->second;
    }
    ValueId id = f_->new_value(t);
    vals_[name] = id;
    return id;
  }

  bool parse_func(IrModule& m, size_t& i) {
    size_t lineno = i;
    Cur c{lines_[i]};
    c.eat_word("func");
    IrFunction fn;
    f_ = &fn;
    vals_.clear();
    if (!c.eat('@')) return err(lineno + 1, "expected @name");
    fn.name = c.word();
    if (!c.eat('(')) return err(lineno + 1, "expected '('");
    while (!c.eat(')')) {
      if (!c.eat('%')) return err(lineno + 1, "expected %param");
      std::string pname = c.word();
      if (!c.eat(':')) return err(lineno + 1, "expected ':'");
      Type t;
      if (!read_type(c, t)) return err(lineno + 1, "bad param type");
      BufSpace sp = BufSpace::Local;
      if (c.eat_word("ext")) sp = BufSpace::External;
      fn.params.push_back(define(pname, t));
      fn.param_space.push_back(sp);
      c.eat(',');
    }
    if (!c.eat('-') || !c.eat('>')) return err(lineno + 1, "expected '->'");
    if (!read_type(c, fn.ret)) return err(lineno + 1, "bad return type");
    if (!c.eat('{')) return err(lineno + 1, "expected '{'");
    i++;
    if (!parse_region(fn.body, i)) return false;
    // Entry block args mirror params when present.
    if (!fn.body.blocks.empty() && fn.body.blocks[0].args.empty())
      fn.body.blocks[0].args = fn.params;
    for (size_t vi = 0; vi < fn.vtypes.size(); vi++) {
      if (fn.vtypes[vi].kind == Type::Kind::None) {
        // values may legitimately be void only if never used; reject instead
        return err(lineno + 1, "value in @" + fn.name + " never defined with a type");
      }
    }
    m.funcs.push_back(std::move(fn));
    f_ = nullptr;
    return true;
  }

  // Parses blocks/ops until a line that is exactly "}" (or "} else {" which the
  // caller handles by peeking). Returns with i past the closing line.
  bool parse_region(Region& r, size_t& i, bool* saw_else = nullptr) {
    while (i < lines_.size()) {
      Cur c{lines_[i]};
      if (c.done()) {
        i++;
        continue;
      }
      c.ws();
      if (c.s[c.i] == '}') {
        c.i++;
        if (saw_else && c.eat_word("else")) {
          *saw_else = true;
        }
        i++;
        return true;
      }
      if (c.s[c.i] == '^') {
        c.i++;
        Block b;
        int64_t bid;
        if (!c.integer(bid)) return err(i + 1, "bad block id");
        b.id = (int)bid;
        if (c.eat('(')) {
          while (!c.eat(')')) {
            if (!c.eat('%')) return err(i + 1, "expected %arg");
            std::string an = c.word();
            if (!c.eat(':')) return err(i + 1, "expected ':'");
            Type t;
            if (!read_type(c, t)) return err(i + 1, "bad arg type");
            b.args.push_back(define(an, t));
            c.eat(',');
          }
        }
        if (!c.eat(':')) return err(i + 1, "expected ':' after block header");
        r.blocks.push_back(std::move(b));
        i++;
        continue;
      }
      if (r.blocks.empty()) {
        Block b;
        b.id = 0;
        r.blocks.push_back(std::move(b));
      }
      Op op;
      if (!parse_op(op, i)) return false;
      r.blocks.back().ops.push_back(std::move(op));
    }
    return err(i, "unexpected end of IR inside region");
  }

  bool parse_op(Op& op, size_t& i) {
    size_t lineno = i;
    Cur c{lines_[i]};
    // results
    std::vector<std::string> result_names;
    c.ws();
    if (c.s[c.i] == '%') {
      c.i++;
      std::string rn = c.word();
      int64_t count = 1;
      if (c.eat(':')) {
        if (!c.integer(count)) return err(lineno + 1, "bad result count");
      }
      if (!c.eat('=')) return err(lineno + 1, "expected '='");
      int64_t base = atoll(rn.c_str());
      result_names.push_back(rn);
      for (int64_t k = 1; k < count; k++)
        result_names.push_back(std::to_string(base + k));
    }
    std::string name = c.word();
    OpKind kind;
    if (!op_from_name(name, kind))
      return err(lineno + 1, "unknown op '" + name + "'");
    op.kind = kind;
    op.span.begin.line = (int)lineno + 1;

    auto finish_types = [&](Cur& cc) -> bool {
      if (result_names.empty()) return true;
      if (!cc.eat(':')) return err(lineno + 1, "expected result type");
      if (cc.eat('(')) {
        size_t k = 0;
        while (!cc.eat(')')) {
          Type t;
          if (!read_type(cc, t)) return err(lineno + 1, "bad tuple type");
          if (k >= result_names.size()) return err(lineno + 1, "too many tuple types");
          op.results.push_back(define(result_names[k++], t));
          cc.eat(',');
        }
        if (k != result_names.size()) return err(lineno + 1, "tuple arity mismatch");
        return true;
      }
      Type t;
      if (!read_type(cc, t)) return err(lineno + 1, "bad result type");
      if (result_names.size() != 1) return err(lineno + 1, "expected tuple type");
      op.results.push_back(define(result_names[0], t));
      return true;
    };
    auto vals_until_colon_or_end = [&](Cur& cc) -> bool {
      while (true) {
        cc.ws();
        if (cc.done() || cc.s[cc.i] == ':') break;
        ValueId v;
        if (!read_val(cc, v, lineno)) return false;
        op.operands.push_back(v);
        cc.eat(',');
      }
      return true;
    };

    switch (kind) {
      case OpKind::TensorEmpty:
      case OpKind::BufAlloc: {
        if (kind == OpKind::BufAlloc && c.eat_word("rom")) {
          op.attrs.space = BufSpace::Rom;
          if (!c.eat('@')) return err(lineno + 1, "expected @global");
          op.attrs.global = c.word();
        }
        if (!finish_types(c)) return false;
        break;
      }
      case OpKind::TensorFromElements: {
        if (c.eat_word("table")) {
          op.attrs.const_table = true;
          if (!c.eat('@')) return err(lineno + 1, "expected @global");
          op.attrs.global = c.word();
        }
        if (!vals_until_colon_or_end(c)) return false;
        if (!finish_types(c)) return false;
        break;
      }
      case OpKind::TensorExtract: {
        ValueId base;
        if (!read_val(c, base, lineno)) return false;
        op.operands.push_back(base);
        if (!c.eat('[')) return err(lineno + 1, "expected '['");
        while (!c.eat(']')) {
          ValueId v;
          if (!read_val(c, v, lineno)) return false;
          op.operands.push_back(v);
          c.eat(',');
        }
        if (!finish_types(c)) return false;
        break;
      }
      case OpKind::TensorInsert: {
        ValueId v0, base;
        if (!read_val(c, v0, lineno)) return false;
        if (!c.eat_word("into")) return err(lineno + 1, "expected 'into'");
        if (!read_val(c, base, lineno)) return false;
        op.operands.push_back(v0);
        op.operands.push_back(base);
        if (!c.eat('[')) return err(lineno + 1, "expected '['");
        while (!c.eat(']')) {
          ValueId v;
          if (!read_val(c, v, lineno)) return false;
          op.operands.push_back(v);
          c.eat(',');
        }
        if (!finish_types(c)) return false;
        break;
      }
      case OpKind::TensorMatmul: {
        if (c.eat_word("tA")) op.attrs.transpose_lhs = true;
        ValueId a, b;
        if (!read_val(c, a, lineno) || !(c.eat(','), read_val(c, b, lineno))) return false;
        op.operands.push_back(a);
        op.operands.push_back(b);
        c.ws();
        if (c.s.compare(c.i, 2, "->") == 0) {
          c.i += 2;
          ValueId out;
          if (!read_val(c, out, lineno)) return false;
          op.operands.push_back(out);
          if (!c.eat(':')) return err(lineno + 1, "expected ':'");
          if (!c.integer(op.attrs.m) || !c.eat('x') || !c.integer(op.attrs.k) ||
              !c.eat('x') || !c.integer(op.attrs.n))
            return err(lineno + 1, "expected m x k x n");
        } else {
          if (!finish_types(c)) return false;
        }
        break;
      }
      case OpKind::TensorTranspose: {
        ValueId a;
        if (!read_val(c, a, lineno)) return false;
        op.operands.push_back(a);
        c.ws();
        if (c.s.compare(c.i, 2, "->") == 0) {
          c.i += 2;
          ValueId out;
          if (!read_val(c, out, lineno)) return false;
          op.operands.push_back(out);
          if (!c.eat(':')) return err(lineno + 1, "expected ':'");
          if (!c.integer(op.attrs.rows) || !c.eat('x') || !c.integer(op.attrs.cols))
            return err(lineno + 1, "expected rows x cols");
        } else {
          if (!finish_types(c)) return false;
        }
        break;
      }
      case OpKind::ScfFor: {
        ValueId lb, ub;
        if (!c.eat('%')) return err(lineno + 1, "expected induction var");
        std::string ivn = c.word();
        if (!c.eat('=')) return err(lineno + 1, "expected '='");
        if (!read_val(c, lb, lineno)) return false;
        if (!c.eat_word("to")) return err(lineno + 1, "expected 'to'");
        if (!read_val(c, ub, lineno)) return false;
        if (c.eat_word("half"))
          op.attrs.half_open = true;
        else if (!c.eat_word("closed"))
          return err(lineno + 1, "expected 'half' or 'closed'");
        op.operands.push_back(lb);
        op.operands.push_back(ub);
        std::vector<std::pair<std::string, ValueId>> iters;
        if (!c.eat_word("iter") || !c.eat('(')) return err(lineno + 1, "expected iter(");
        while (!c.eat(')')) {
          if (!c.eat('%')) return err(lineno + 1, "expected %arg");
          std::string an = c.word();
          if (!c.eat('=')) return err(lineno + 1, "expected '='");
          ValueId init;
          if (!read_val(c, init, lineno)) return false;
          iters.push_back({an, init});
          op.operands.push_back(init);
          c.eat(',');
        }
        if (!finish_types(c)) return false;
        if (!c.eat('{')) return err(lineno + 1, "expected '{'");
        i++;
        op.regions.emplace_back();
        if (!parse_region(op.regions[0], i)) return false;
        if (op.regions[0].blocks.empty()) op.regions[0].blocks.push_back({});
        auto& entry = op.regions[0].blocks[0];
        // Induction variable type matches the lower bound.
        entry.args.insert(entry.args.begin(), define(ivn, f_->type_of(lb)));
        for (size_t k = 0; k < iters.size(); k++) {
          entry.args.push_back(define(iters[k].first, f_->type_of(iters[k].second)));
        }
        // Region arg definitions happen after region parse; re-resolve names used
        // inside would be wrong, so forward declaration handled via define().
        return true;
      }
      case OpKind::ScfIf: {
        ValueId cond;
        if (!read_val(c, cond, lineno)) return false;
        op.operands.push_back(cond);
        if (!finish_types(c)) return false;
        if (!c.eat('{')) return err(lineno + 1, "expected '{'");
        i++;
        op.regions.emplace_back();
        op.regions.emplace_back();
        bool saw_else = false;
        if (!parse_region(op.regions[0], i, &saw_else)) return false;
        if (!saw_else) return err(i, "expected '} else {'");
        if (!parse_region(op.regions[1], i)) return false;
        if (op.regions[0].blocks.empty()) op.regions[0].blocks.push_back({});
        if (op.regions[1].blocks.empty()) op.regions[1].blocks.push_back({});
        return true;
      }
      case OpKind::ScfYield:
      case OpKind::FuncReturn: {
        if (!vals_until_colon_or_end(c)) return false;
        break;
      }
      case OpKind::ArithConst: {
        if (c.eat_word("math")) {
          op.attrs.pending_math = true;
          op.attrs.math_fn = c.word();
          if (!c.number(op.attrs.math_arg)) return err(lineno + 1, "expected math arg");
        } else {
          if (!c.integer(op.attrs.ival)) return err(lineno + 1, "expected constant");
        }
        if (!finish_types(c)) return false;
        break;
      }
      case OpKind::ArithCmp: {
        std::string p = c.word();
        bool found = false;
        for (CmpPred pr : {CmpPred::Lt, CmpPred::Gt, CmpPred::Le, CmpPred::Ge, CmpPred::Eq,
                           CmpPred::Ne}) {
          if (p == pred_name(pr)) {
            op.attrs.pred = pr;
            found = true;
            break;
          }
        }
        if (!found) return err(lineno + 1, "bad predicate '" + p + "'");
        if (!vals_until_colon_or_end(c)) return false;
        if (!finish_types(c)) return false;
        break;
      }
      case OpKind::ArithAdd:
      case OpKind::ArithSub:
      case OpKind::ArithMul:
      case OpKind::ArithShl:
      case OpKind::ArithShr:
      case OpKind::ArithSelect:
      case OpKind::ArithCast:
      case OpKind::ArithFixedRescale: {
        if (!vals_until_colon_or_end(c)) return false;
        if (!finish_types(c)) return false;
        break;
      }
      case OpKind::BufLoad: {
        ValueId b;
        if (!read_val(c, b, lineno)) return false;
        op.operands.push_back(b);
        if (!c.eat('[')) return err(lineno + 1, "expected '['");
        ValueId idx;
        if (!read_val(c, idx, lineno)) return false;
        op.operands.push_back(idx);
        if (!c.eat(']')) return err(lineno + 1, "expected ']'");
        if (!finish_types(c)) return false;
        break;
      }
      case OpKind::BufStore: {
        ValueId v, b, idx;
        if (!read_val(c, v, lineno)) return false;
        c.ws();
        if (c.s.compare(c.i, 2, "->") != 0) return err(lineno + 1, "expected '->'");
        c.i += 2;
        if (!read_val(c, b, lineno)) return false;
        if (!c.eat('[')) return err(lineno + 1, "expected '['");
        if (!read_val(c, idx, lineno)) return false;
        if (!c.eat(']')) return err(lineno + 1, "expected ']'");
        op.operands = {b, idx, v};
        break;
      }
      case OpKind::BufCopy: {
        ValueId a, b;
        if (!read_val(c, a, lineno)) return false;
        c.ws();
        if (c.s.compare(c.i, 2, "->") != 0) return err(lineno + 1, "expected '->'");
        c.i += 2;
        if (!read_val(c, b, lineno)) return false;
        op.operands = {a, b};
        break;
      }
      case OpKind::BufDealloc: {
        ValueId a;
        if (!read_val(c, a, lineno)) return false;
        op.operands = {a};
        break;
      }
      case OpKind::CfgBr:
      case OpKind::CfgCondBr: {
        if (kind == OpKind::CfgCondBr) {
          ValueId cond;
          if (!read_val(c, cond, lineno)) return false;
          op.operands.push_back(cond);
          if (!c.eat(',')) return err(lineno + 1, "expected ','");
        }
        int expected = kind == OpKind::CfgBr ? 1 : 2;
        for (int s = 0; s < expected; s++) {
          if (s && !c.eat(',')) return err(lineno + 1, "expected ','");
          if (!c.eat('^')) return err(lineno + 1, "expected '^block'");
          int64_t bid;
          if (!c.integer(bid)) return err(lineno + 1, "bad block id");
          op.succs.push_back((int)bid);
          op.succ_args.emplace_back();
          if (!c.eat('(')) return err(lineno + 1, "expected '('");
          while (!c.eat(')')) {
            ValueId v;
            if (!read_val(c, v, lineno)) return false;
            op.succ_args.back().push_back(v);
            c.eat(',');
          }
        }
        break;
      }
      case OpKind::FuncCall: {
        if (!c.eat('@')) return err(lineno + 1, "expected '@callee'");
        op.attrs.callee = c.word();
        if (!c.eat('(')) return err(lineno + 1, "expected '('");
        while (!c.eat(')')) {
          ValueId v;
          if (!read_val(c, v, lineno)) return false;
          op.operands.push_back(v);
          c.eat(',');
        }
        if (!finish_types(c)) return false;
        break;
      }
    }
    i++;
    return true;
  }

  static bool op_from_name(const std::string& name, OpKind& out) {
    for (int k = 0; k <= (int)OpKind::FuncReturn; k++) {
      if (name == op_name((OpKind)k)) {
        out = (OpKind)k;
        return true;
      }
    }
    return false;
  }
};

}  // namespace

bool parse_ir(const std::string& text, IrModule& out, DiagList& diags) {
  diags.set_stage("ir");
  return IrParser(text, diags).run(out);
}

}  // namespace hjl::ir
