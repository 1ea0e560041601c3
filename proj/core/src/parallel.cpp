#include "idse/parallel.hpp"

#include <cstdlib>
#include <string>

namespace idse {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("IDSE_THREADS"); env != nullptr && *env != '\0') {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

}  // namespace idse
