#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rgm {

enum class ErrorCategory {
  domain,
  degenerate_data,
  isolation,
  non_positive_definite,
  convergence,
  empty_history,
  degenerate_truth,
  validation,
  io,
  config,
};

std::string_view to_string(ErrorCategory category);

// Every failure the engine reports carries a machine-readable category; the
// CLI turns it into one JSON line on stderr.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace rgm
