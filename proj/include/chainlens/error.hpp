#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chainlens {

// Error classes, one per failure family. The numeric value doubles as the
// CLI exit code, so values must stay stable.
enum class Errc : int {
  parse = 10,
  duplicate_id = 11,
  bad_label = 12,
  label_conflict = 13,
  degenerate_class = 14,
  empty_history = 15,
  target_missing = 16,
  malformed_graph = 17,
  empty_input = 18,
  config = 19,
  shape = 20,
  stale_cache = 21,
  bad_index = 22,
  numeric = 23,
  format = 24,
  convergence = 25,
  data = 26,
  dependency = 27,
  input = 28,
  io = 29,
  feature = 30,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::parse: return "parse";
    case Errc::duplicate_id: return "duplicate-identifier";
    case Errc::bad_label: return "label";
    case Errc::label_conflict: return "conflict";
    case Errc::degenerate_class: return "degenerate-class";
    case Errc::empty_history: return "empty-history";
    case Errc::target_missing: return "target-missing";
    case Errc::malformed_graph: return "malformed-graph";
    case Errc::empty_input: return "empty-input";
    case Errc::config: return "config";
    case Errc::shape: return "shape";
    case Errc::stale_cache: return "cache";
    case Errc::bad_index: return "index";
    case Errc::numeric: return "numeric";
    case Errc::format: return "format";
    case Errc::convergence: return "convergence";
    case Errc::data: return "data";
    case Errc::dependency: return "dependency";
    case Errc::input: return "input";
    case Errc::io: return "io";
    case Errc::feature: return "feature";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + " error: " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }
  int exit_code() const noexcept { return static_cast<int>(code_); }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool ok, Errc code, const std::string& message) {
  if (!ok) fail(code, message);
}

}  // namespace chainlens
