#pragma once

#include "dppcond/kernel.hpp"
#include "dppcond/rng.hpp"

namespace dppcond {

enum class KernelClass { Projection, Contraction, Diagonal, Hard };

const char* kernel_class_name(KernelClass c);
KernelClass kernel_class_from_name(const std::string& s);

struct CorpusEntry {
  std::string id;
  KernelClass cls = KernelClass::Contraction;
  bool complex_entries = false;
  KernelMatrix kernel;
};

struct CorpusSpec {
  uint64_t seed = 0;
  int count = 0;
  int n_min = 2;
  int n_max = 8;
  std::vector<KernelClass> classes = {KernelClass::Projection,
                                      KernelClass::Contraction,
                                      KernelClass::Diagonal, KernelClass::Hard};
  bool allow_complex = true;
};

// Random spectra in [0,1] conjugated by random orthogonal/unitary bases, plus
// hard classes pinning eigenvalues at exactly 0, exactly 1, and 1 - 1e-6.
// Deterministic given the spec.
KernelMatrix random_kernel(CounterRng& rng, int n, KernelClass cls,
                           bool complex_entries);
std::vector<CorpusEntry> make_corpus(const CorpusSpec& spec);

}  // namespace dppcond
