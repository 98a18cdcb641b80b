// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <stdexcept>
#include <string>

#include "synclab/simd/kernels.hpp"

namespace synclab::simd {

namespace {

constexpr KernelTable kScalarTable{Isa::kScalar,     scalar::dot,     scalar::axpy,
                                   scalar::gemm_nn, scalar::gemm_nt, scalar::gemm_tn};

#if defined(SYNCLAB_HAVE_AVX2)
constexpr KernelTable kAvx2Table{Isa::kAvx2,     avx2::dot,     avx2::axpy,
                                 avx2::gemm_nn, avx2::gemm_nt, avx2::gemm_tn};
#endif

const KernelTable& resolve() {
  const char* env = std::getenv("SYNCLAB_SIMD");
  if (env != nullptr && std::string(env) == "scalar") return kScalarTable;
  if (isa_available(Isa::kAvx2)) return kernels_for(Isa::kAvx2);
  return kScalarTable;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(SYNCLAB_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_available(isa)) {
    throw std::runtime_error("simd: ISA " + std::string(isa_name(isa)) + " not available");
  }
#if defined(SYNCLAB_HAVE_AVX2)
  if (isa == Isa::kAvx2) return kAvx2Table;
#endif
  return kScalarTable;
}

const KernelTable& kernels() {
  static const KernelTable& table = resolve();
  return table;
}

}  // namespace synclab::simd
