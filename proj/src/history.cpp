#include "fracstep/history.hpp"

#include <cblas.h>

namespace fracstep::detail {

void far_product(int rows, int m0, int dim, const double* toeplitz, const double* history,
                 double* far) {
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, rows, dim, m0, 1.0, toeplitz, m0,
              history, dim, 0.0, far, dim);
}

}  // namespace fracstep::detail
