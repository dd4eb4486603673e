#include "cdckg/tensor.hpp"

#include <cblas.h>

namespace cdckg {

void matmul_f32(int64_t m, int64_t n, int64_t k, bool ta, bool tb, float alpha, const float* a,
                const float* b, float beta, float* c) {
  cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans,
              static_cast<int>(m), static_cast<int>(n), static_cast<int>(k), alpha, a,
              static_cast<int>(ta ? m : k), b, static_cast<int>(tb ? k : n), beta, c,
              static_cast<int>(n));
}

}  // namespace cdckg
