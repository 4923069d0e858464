#include "rgm/error.hpp"

namespace rgm {

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::domain: return "domain";
    case ErrorCategory::degenerate_data: return "degenerate_data";
    case ErrorCategory::isolation: return "isolation";
    case ErrorCategory::non_positive_definite: return "non_positive_definite";
    case ErrorCategory::convergence: return "convergence";
    case ErrorCategory::empty_history: return "empty_history";
    case ErrorCategory::degenerate_truth: return "degenerate_truth";
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::io: return "io";
    case ErrorCategory::config: return "config";
  }
  return "unknown";
}

}  // namespace rgm
