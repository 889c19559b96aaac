#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace seglab {

// Every failure the library raises carries one of these kinds so callers can
// map classes of failure to exit codes without string matching.
enum class ErrorKind {
  Shape,       // extent mismatch between operands
  Axis,        // axis index out of range
  Range,       // numeric argument outside its legal interval
  Feed,        // placeholder not fed, or unknown feed name
  Contract,    // operation invoked on an object that cannot support it
  Label,       // label tensor holds values other than 0 and 1
  Spec,        // bad architecture description
  Config,      // bad run configuration key or value
  Sample,      // statistical routine given too few observations
  Data,        // dataset inconsistent with its manifest
  Training,    // non-finite loss or diverged optimiser state
  Format,      // malformed file while parsing
  Compat,      // file parsed fine but disagrees with the requested use
  Generation,  // synthetic-data parameters cannot be satisfied
  Io,          // filesystem failure
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Axis: return "axis";
    case ErrorKind::Range: return "range";
    case ErrorKind::Feed: return "feed";
    case ErrorKind::Contract: return "contract";
    case ErrorKind::Label: return "label";
    case ErrorKind::Spec: return "spec";
    case ErrorKind::Config: return "config";
    case ErrorKind::Sample: return "sample";
    case ErrorKind::Data: return "data";
    case ErrorKind::Training: return "training";
    case ErrorKind::Format: return "format";
    case ErrorKind::Compat: return "compat";
    case ErrorKind::Generation: return "generation";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(error_kind_name(kind)) + " error: " + msg),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) fail(kind, msg);
}

}  // namespace seglab
