#include "vemfeti/exec.hpp"

#include <omp.h>

namespace vemfeti {

int max_threads() { return omp_get_max_threads(); }

}  // namespace vemfeti
