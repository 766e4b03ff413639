#include "dts/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dts {

#ifdef _OPENMP
namespace {
int default_threads() {
    static const int n = omp_get_max_threads();
    return n;
}
}  // namespace

void set_max_threads(int n) {
    default_threads();  // capture the default before the first override
    omp_set_num_threads(n > 0 ? n : default_threads());
}

int max_threads() { return omp_get_max_threads(); }
#else
void set_max_threads(int) {}
int max_threads() { return 1; }
#endif

}  // namespace dts
