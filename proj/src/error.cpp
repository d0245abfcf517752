#include "arealstat/error.hpp"

#include <utility>

namespace arealstat {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::format: return "format";
    case ErrorKind::validation: return "validation";
    case ErrorKind::duplicate_key: return "duplicate_key";
    case ErrorKind::empty_dataset: return "empty_dataset";
    case ErrorKind::completeness: return "completeness";
    case ErrorKind::division: return "division";
    case ErrorKind::degenerate_column: return "degenerate_column";
    case ErrorKind::insufficient_data: return "insufficient_data";
    case ErrorKind::singular: return "singular";
    case ErrorKind::island: return "island";
    case ErrorKind::zero_variance: return "zero_variance";
    case ErrorKind::degenerate_weights: return "degenerate_weights";
    case ErrorKind::reference: return "reference";
    case ErrorKind::join: return "join";
    case ErrorKind::dependency: return "dependency";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

namespace {

std::string compose(const std::string& module, const std::string& message,
                    const std::vector<std::string>& details) {
  std::string out = module + ": " + message;
  constexpr std::size_t kShown = 8;
  for (std::size_t i = 0; i < details.size() && i < kShown; ++i) {
    out += "\n  " + details[i];
  }
  if (details.size() > kShown) {
    out += "\n  ... (" + std::to_string(details.size() - kShown) + " more)";
  }
  return out;
}

}  // namespace

Error::Error(std::string module, ErrorKind kind, const std::string& message,
             std::vector<std::string> details)
    : std::runtime_error(compose(module, message, details)),
      module_(std::move(module)),
      kind_(kind),
      message_(message),
      details_(std::move(details)) {}

}  // namespace arealstat
