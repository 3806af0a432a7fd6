#include "dppcond/corpus.hpp"

namespace dppcond {

const char* kernel_class_name(KernelClass c) {
  switch (c) {
    case KernelClass::Projection: return "projection";
    case KernelClass::Contraction: return "contraction";
    case KernelClass::Diagonal: return "diagonal";
    case KernelClass::Hard: return "hard";
  }
  return "contraction";
}

KernelClass kernel_class_from_name(const std::string& s) {
  if (s == "projection") return KernelClass::Projection;
  if (s == "contraction") return KernelClass::Contraction;
  if (s == "diagonal") return KernelClass::Diagonal;
  if (s == "hard") return KernelClass::Hard;
  throw ConfigError("unknown kernel class '" + s + "'");
}

namespace {

Eigen::MatrixXcd haar_basis(CounterRng& rng, int n, bool complex_entries) {
  Eigen::MatrixXcd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      g(i, j) = complex_entries ? cplx(rng.normal(), rng.normal())
                                : cplx(rng.normal(), 0.0);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, n);
  Eigen::MatrixXcd r = q.adjoint() * g;
  for (int i = 0; i < n; ++i) {
    cplx d = r(i, i);
    double a = std::abs(d);
    if (a > 0.0) q.col(i) *= d / a;  // fix the phase convention
  }
  return q;
}

Eigen::VectorXd spectrum_for(CounterRng& rng, int n, KernelClass cls) {
  Eigen::VectorXd lam(n);
  switch (cls) {
    case KernelClass::Projection: {
      int r = 1 + rng.below(std::max(1, n - 1));
      for (int i = 0; i < n; ++i) lam(i) = i < r ? 1.0 : 0.0;
      break;
    }
    case KernelClass::Contraction:
    case KernelClass::Diagonal:
      for (int i = 0; i < n; ++i) lam(i) = rng.uniform();
      break;
    case KernelClass::Hard:
      for (int i = 0; i < n; ++i) {
        switch (rng.below(5)) {
          case 0: lam(i) = 0.0; break;
          case 1: lam(i) = 1.0; break;
          case 2: lam(i) = 1.0 - 1e-6; break;
          case 3: lam(i) = 1e-7; break;
          default: lam(i) = rng.uniform(); break;
        }
      }
      break;
  }
  return lam;
}

}  // namespace

KernelMatrix random_kernel(CounterRng& rng, int n, KernelClass cls,
                           bool complex_entries) {
  Eigen::VectorXd lam = spectrum_for(rng, n, cls);
  if (cls == KernelClass::Diagonal) {
    std::vector<double> p(lam.data(), lam.data() + n);
    return diagonal_kernel(p);
  }
  Eigen::MatrixXcd q = haar_basis(rng, n, complex_entries);
  Eigen::MatrixXcd m = q * lam.asDiagonal() * q.adjoint();
  m = 0.5 * (m + m.adjoint().eval());
  if (!complex_entries) m.imag().setZero();
  return validate_kernel(m);
}

std::vector<CorpusEntry> make_corpus(const CorpusSpec& spec) {
  if (spec.count < 0 || spec.n_min < 1 || spec.n_max < spec.n_min)
    throw ConfigError("bad corpus spec");
  if (spec.classes.empty()) return {};
  std::vector<CorpusEntry> out;
  for (int i = 0; i < spec.count; ++i) {
    CounterRng rng(spec.seed, stream_id("corpus", static_cast<uint64_t>(i)));
    CorpusEntry e;
    e.cls = spec.classes[i % spec.classes.size()];
    e.complex_entries =
        spec.allow_complex && e.cls != KernelClass::Diagonal && (i % 2 == 1);
    int n = spec.n_min + rng.below(spec.n_max - spec.n_min + 1);
    e.kernel = random_kernel(rng, n, e.cls, e.complex_entries);
    e.id = "corpus_" + std::to_string(spec.seed) + "_" + std::to_string(i) +
           "_" + kernel_class_name(e.cls);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace dppcond
