#include "dppcond/kernel.hpp"

#include <cmath>

namespace dppcond {

namespace {

// Below this, clipping is round-off noise: keep the input entries untouched so
// validation is idempotent; only genuine excursions get reconstructed.
constexpr double RECONSTRUCT_EPS = 1e-13;

bool imag_free(const Eigen::MatrixXcd& m) {
  return m.imag().cwiseAbs().maxCoeff() == 0.0;
}

void eigensolve(const Eigen::MatrixXcd& h, bool real, Eigen::VectorXd& vals,
                Eigen::MatrixXcd& vecs) {
  if (real) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.real());
    if (es.info() != Eigen::Success)
      throw NumericalBreakdown("eigendecomposition failed");
    vals = es.eigenvalues();
    vecs = es.eigenvectors().cast<cplx>();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    if (es.info() != Eigen::Success)
      throw NumericalBreakdown("eigendecomposition failed");
    vals = es.eigenvalues();
    vecs = es.eigenvectors();
  }
}

}  // namespace

KernelMatrix validate_kernel(const Eigen::MatrixXcd& raw,
                             const Tolerances& tols) {
  if (raw.rows() != raw.cols())
    throw DimensionMismatch("kernel matrix must be square, got " +
                            std::to_string(raw.rows()) + "x" +
                            std::to_string(raw.cols()));
  if (!raw.allFinite()) throw NumericalBreakdown("non-finite kernel entries");

  KernelMatrix k;
  k.tols_ = tols;
  const int n = static_cast<int>(raw.rows());
  if (n == 0) {
    k.entries_.resize(0, 0);
    k.eigenvalues_.resize(0);
    k.eigenvectors_.resize(0, 0);
    k.is_projection_ = true;
    return k;
  }

  double defect = (raw - raw.adjoint()).cwiseAbs().maxCoeff();
  if (!(defect <= tols.hermitian))
    throw NotHermitian("defect " + std::to_string(defect));
  k.report_.hermitian_defect = defect;

  Eigen::MatrixXcd h = 0.5 * (raw + raw.adjoint());
  k.is_real_ = imag_free(h);

  Eigen::VectorXd vals;
  Eigen::MatrixXcd vecs;
  eigensolve(h, k.is_real_, vals, vecs);

  double low = std::max(0.0, -vals.minCoeff());
  double high = std::max(0.0, vals.maxCoeff() - 1.0);
  if (low > tols.spectral || high > tols.spectral)
    throw SpectrumOutOfRange("eigenvalues in [" + std::to_string(vals.minCoeff()) +
                             ", " + std::to_string(vals.maxCoeff()) + "]");
  k.report_.clip_low = low;
  k.report_.clip_high = high;
  k.report_.spectral_tol_used = tols.spectral;

  Eigen::VectorXd clipped = vals.cwiseMax(0.0).cwiseMin(1.0);
  if (std::max(low, high) > RECONSTRUCT_EPS) {
    h = vecs * clipped.asDiagonal() * vecs.adjoint();
    h = 0.5 * (h + h.adjoint().eval());
    if (k.is_real_) h.imag().setZero();
    k.report_.reconstructed = true;
  }

  k.entries_ = h;
  k.eigenvalues_ = clipped;
  k.eigenvectors_ = vecs;
  k.is_projection_ = (h * h - h).cwiseAbs().maxCoeff() <= tols.spectral;
  return k;
}

KernelMatrix validate_kernel(const Eigen::MatrixXd& raw, const Tolerances& tols) {
  return validate_kernel(Eigen::MatrixXcd(raw.cast<cplx>()), tols);
}

Eigen::MatrixXcd compress(const Eigen::MatrixXcd& m, const SiteSubset& rows,
                          const SiteSubset& cols) {
  const int n = static_cast<int>(m.rows());
  if (rows.ground_size() != n || cols.ground_size() != n)
    throw DimensionMismatch("subset ground size does not match matrix");
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  for (int i : rows.indices())
    for (int j : cols.indices()) out(i, j) = m(i, j);
  return out;
}

Eigen::MatrixXcd compress(const KernelMatrix& k, const SiteSubset& rows,
                          const SiteSubset& cols) {
  return compress(k.entries(), rows, cols);
}

Eigen::VectorXcd kernel_column(const KernelMatrix& k, int x) {
  if (x < 0 || x >= k.size())
    throw PointOutOfRange("site " + std::to_string(x));
  return k.entries().col(x);
}

KernelMatrix dilate_to_projection(const KernelMatrix& k) {
  const int n = k.size();
  const Eigen::VectorXd& lam = k.eigenvalues();
  Eigen::VectorXd prod = lam.array() * (1.0 - lam.array());
  if (prod.minCoeff() < -k.tols().spectral)
    throw SquareRootFailure("K - K^2 indefinite");
  Eigen::VectorXd root = prod.cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXcd s =
      k.eigenvectors() * root.asDiagonal() * k.eigenvectors().adjoint();
  s = 0.5 * (s + s.adjoint().eval());
  if (k.is_real()) s.imag().setZero();

  Eigen::MatrixXcd big(2 * n, 2 * n);
  big.topLeftCorner(n, n) = k.entries();
  big.topRightCorner(n, n) = s;
  big.bottomLeftCorner(n, n) = s;
  big.bottomRightCorner(n, n) =
      Eigen::MatrixXcd::Identity(n, n) - k.entries();
  return validate_kernel(big, k.tols());
}

Eigen::MatrixXcd range_projector(const KernelMatrix& k, double rank_tol) {
  const int n = k.size();
  Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    if (k.eigenvalues()(i) > rank_tol)
      p += k.eigenvectors().col(i) * k.eigenvectors().col(i).adjoint();
  p = 0.5 * (p + p.adjoint().eval());
  return p;
}

Eigen::MatrixXcd range_projector(const KernelMatrix& k) {
  return range_projector(k, k.tols().rank);
}

DiscretizedKernel discretize_kernel(const KernelFn& fn, const GroundSet& grid,
                                    const Tolerances& tols) {
  const int n = grid.size();
  if (static_cast<int>(grid.coords.size()) != n)
    throw DimensionMismatch("coords/weights size mismatch");
  Eigen::VectorXd sw(n);
  for (int i = 0; i < n; ++i) {
    if (grid.weights[i] < 0.0)
      throw NumericalBreakdown("negative quadrature weight");
    sw(i) = std::sqrt(grid.weights[i]);
  }
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      m(i, j) = sw(i) * fn(grid.coords[i], grid.coords[j]) * sw(j);
  return DiscretizedKernel{validate_kernel(m, tols), grid};
}

KernelMatrix uniform_rank1(int n) {
  if (n <= 0) throw DimensionMismatch("need n >= 1");
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  return validate_kernel(m);
}

KernelMatrix identity_kernel(int n) {
  if (n < 0) throw DimensionMismatch("need n >= 0");
  return validate_kernel(Eigen::MatrixXd(Eigen::MatrixXd::Identity(n, n)));
}

KernelMatrix diagonal_kernel(const std::vector<double>& p) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p.size(), p.size());
  for (size_t i = 0; i < p.size(); ++i) m(i, i) = p[i];
  return validate_kernel(m);
}

DiscretizedKernel sine_kernel(int n, double length) {
  if (n <= 0 || length <= 0.0) throw DimensionMismatch("bad sine kernel grid");
  GroundSet g;
  double h = length / n;
  for (int i = 0; i < n; ++i) {
    g.coords.push_back({(i + 0.5) * h});
    g.weights.push_back(h);
  }
  auto fn = [](const std::vector<double>& x, const std::vector<double>& y) {
    double d = x[0] - y[0];
    if (d == 0.0) return cplx(1.0, 0.0);
    return cplx(std::sin(M_PI * d) / (M_PI * d), 0.0);
  };
  return discretize_kernel(fn, g);
}

namespace {

// Golub-Welsch nodes/weights for integrating over [0, b].
void gauss_legendre(int m, double b, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(m, m);
  for (int i = 1; i < m; ++i) {
    double v = i / std::sqrt(4.0 * i * i - 1.0);
    j(i - 1, i) = v;
    j(i, i - 1) = v;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  nodes.resize(m);
  weights.resize(m);
  for (int i = 0; i < m; ++i) {
    double x = es.eigenvalues()(i);            // in (-1, 1)
    double w = 2.0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
    nodes[i] = 0.5 * b * (x + 1.0);
    weights[i] = 0.5 * b * w;
  }
}

}  // namespace

DiscretizedKernel bergman_kernel(int n_radial, int n_angular, double radius) {
  if (n_radial <= 0 || n_angular <= 0 || radius <= 0.0 || radius >= 1.0)
    throw DimensionMismatch("bad bergman kernel grid");
  std::vector<double> rn, rw;
  gauss_legendre(n_radial, radius, rn, rw);
  GroundSet g;
  for (int i = 0; i < n_radial; ++i)
    for (int j = 0; j < n_angular; ++j) {
      double th = 2.0 * M_PI * j / n_angular;
      g.coords.push_back({rn[i] * std::cos(th), rn[i] * std::sin(th)});
      g.weights.push_back(rw[i] * rn[i] * (2.0 * M_PI / n_angular));
    }
  auto fn = [](const std::vector<double>& x, const std::vector<double>& y) {
    cplx z(x[0], x[1]), w(y[0], y[1]);
    cplx d = 1.0 - z * std::conj(w);
    return 1.0 / (M_PI * d * d);
  };
  return discretize_kernel(fn, g);
}

}  // namespace dppcond
