#include "lrw/parallel.hpp"

#include <omp.h>

namespace lrw {

void set_workers(int workers) {
  if (workers > 0) omp_set_num_threads(workers);
}

}  // namespace lrw
