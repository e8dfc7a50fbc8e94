#include "blochere/parallel.hpp"

#include <cstdlib>
#include <string>

namespace blochere {

unsigned resolve_workers(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("BLOCH_ERE_WORKERS")) {
        try {
            const long value = std::stol(env);
            if (value > 0) return static_cast<unsigned>(value);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace blochere
