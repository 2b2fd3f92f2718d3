#pragma once

#include <string>
#include <vector>

namespace hjl {

struct SrcLoc {
  int file = 0;  // index into SourceProgram::files
  int line = 0;  // 1-based; 0 = unknown
  int col = 0;
};

struct SrcSpan {
  SrcLoc begin;
  SrcLoc end;
};

enum class Severity { Error, Warning, Note };

struct Diagnostic {
  Severity sev = Severity::Error;
  SrcSpan span;
  std::string message;
  std::string stage;  // pipeline stage that produced it ("frontend", "opt", ...)
};

class DiagList {
 public:
  void error(SrcSpan span, std::string msg) {
    diags_.push_back({Severity::Error, span, std::move(msg), stage_});
  }
  void error(std::string msg) { error(SrcSpan{}, std::move(msg)); }
  void note(SrcSpan span, std::string msg) {
    diags_.push_back({Severity::Note, span, std::move(msg), stage_});
  }
  void set_stage(std::string s) { stage_ = std::move(s); }

  bool ok() const {
    for (auto& d : diags_)
      if (d.sev == Severity::Error) return false;
    return true;
  }
  bool empty() const { return diags_.empty(); }
  const std::vector<Diagnostic>& all() const { return diags_; }
  void append(const DiagList& other) {
    diags_.insert(diags_.end(), other.diags_.begin(), other.diags_.end());
  }
  void clear() { diags_.clear(); }

 private:
  std::vector<Diagnostic> diags_;
  std::string stage_;
};

// Renders "path:line:col: severity: message" (path resolved by the caller).
std::string render_diag(const Diagnostic& d, const std::vector<std::string>& paths);

}  // namespace hjl
