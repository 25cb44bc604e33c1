#pragma once

#include <stdexcept>

namespace sslab {

// Error taxonomy shared by every module. The CLI maps identity/consistency
// violations to exit code 2 and budget violations to exit code 3.
struct SizingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TruncationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IdentityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CacheError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sslab
