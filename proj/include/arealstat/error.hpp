#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace arealstat {

enum class ErrorKind {
  format,
  validation,
  duplicate_key,
  empty_dataset,
  completeness,
  division,
  degenerate_column,
  insufficient_data,
  singular,
  island,
  zero_variance,
  degenerate_weights,
  reference,
  join,
  dependency,
  config,
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Error raised by every module. `module` names the pipeline stage that
/// failed; `details` carries per-item diagnostics (offending rows, gaps,
/// duplicate keys) when there is more than one.
class Error : public std::runtime_error {
 public:
  Error(std::string module, ErrorKind kind, const std::string& message,
        std::vector<std::string> details = {});

  const std::string& module() const noexcept { return module_; }
  ErrorKind kind() const noexcept { return kind_; }
  const std::string& message() const noexcept { return message_; }
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  std::string module_;
  ErrorKind kind_;
  std::string message_;
  std::vector<std::string> details_;
};

}  // namespace arealstat
