#include "covshift/parallel.hpp"

#include <cstdlib>
#include <string>

namespace covshift {

int resolve_threads(int requested) {
  if (const char* env = std::getenv("COVSHIFT_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
      // Malformed values fall back to the request.
    }
  }
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace covshift
