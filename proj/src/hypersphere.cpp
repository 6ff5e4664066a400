#include "skillforge/hypersphere.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace skillforge {

namespace {
constexpr double kZeroNorm = 1e-12;
constexpr double kUnitTol = 1e-9;
constexpr double kSeriesAsymptoticSwitch = 50.0;
}  // namespace

UnitVector::UnitVector(Eigen::VectorXd coords) : coords_(std::move(coords)) {
  if (coords_.size() < 2) throw DimensionMismatchError("UnitVector: need k >= 2");
  const double norm = coords_.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > kUnitTol)
    throw ValidationError("UnitVector: norm " + format_g17(norm) + " is not 1");
}

double UnitVector::dot(const UnitVector& other) const {
  if (other.dim() != dim())
    throw DimensionMismatchError("UnitVector::dot: dimension mismatch");
  return coords_.dot(other.coords_);
}

UnitVector normalize(const Eigen::VectorXd& v) {
  const double norm = v.norm();
  if (!(norm > kZeroNorm))
    throw ZeroVectorError("normalize: norm " + format_g17(norm) + " <= 1e-12");
  return UnitVector(v / norm);
}

VmfParams::VmfParams(UnitVector mu, double kappa)
    : mean_direction(std::move(mu)), concentration(kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa))
    throw ValidationError("VmfParams: concentration must be positive and finite");
}

double log_bessel_i(double nu, double x) {
  if (nu < 0.0) throw ValidationError("log_bessel_i: nu must be >= 0");
  if (!(x > 0.0)) throw ValidationError("log_bessel_i: x must be > 0");

  if (x <= kSeriesAsymptoticSwitch) {
    // I_nu(x) = (x/2)^nu / Gamma(nu+1) * sum_j c_j,
    // c_0 = 1, c_{j+1} = c_j * (x^2/4) / ((j+1)(nu+j+1)).
    // Max term is ~e^x scale at worst (x <= 50), safely inside double range.
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int j = 0; j < 1000; ++j) {
      term *= q / ((j + 1) * (nu + j + 1));
      sum += term;
      if (term < sum * 1e-18) break;
    }
    return nu * std::log(0.5 * x) - std::lgamma(nu + 1.0) + std::log(sum);
  }

  // Hankel expansion: I_nu(x) ~ e^x / sqrt(2 pi x) * sum_k (-1)^k a_k(nu) / x^k
  // with optimal truncation (stop once |term| grows or is negligible).
  const double mu4 = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  double prev_abs = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double f = (2.0 * k - 1.0);
    term *= -(mu4 - f * f) / (8.0 * k * x);
    if (std::abs(term) >= prev_abs) break;  // divergence onset
    sum += term;
    prev_abs = std::abs(term);
    if (prev_abs < 1e-18) break;
  }
  if (!(sum > 0.0))
    throw ValidationError("log_bessel_i: asymptotic expansion failed (nu too large for x)");
  return x - 0.5 * std::log(2.0 * M_PI * x) + std::log(sum);
}

double vmf_log_normalizer(int dim, double kappa) {
  if (dim < 2) throw DimensionMismatchError("vmf_log_normalizer: dim must be >= 2");
  const double half = 0.5 * dim;
  return (half - 1.0) * std::log(kappa) - half * std::log(2.0 * M_PI) -
         log_bessel_i(half - 1.0, kappa);
}

double vmf_log_density(const VmfParams& params, const UnitVector& z) {
  if (z.dim() != params.mean_direction.dim())
    throw DimensionMismatchError("vmf_log_density: dimension mismatch");
  return vmf_log_normalizer(z.dim(), params.concentration) +
         params.concentration * params.mean_direction.dot(z);
}

double vmf_mean_resultant_length(int dim, double kappa) {
  const double half = 0.5 * dim;
  return std::exp(log_bessel_i(half, kappa) - log_bessel_i(half - 1.0, kappa));
}

double vmf_kl(int dim, double kappa, double mean_cosine) {
  return kappa * vmf_mean_resultant_length(dim, kappa) * (1.0 - mean_cosine);
}

namespace {

// Radial component w = <mu, z> of a vMF draw (Wood 1994 rejection scheme).
double sample_radial(double kappa, int dim, Rng& rng) {
  const double m = dim - 1;  // sphere S^{dim-1}
  const double b = m / (std::sqrt(4.0 * kappa * kappa + m * m) + 2.0 * kappa);
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + m * std::log(1.0 - x0 * x0);
  for (;;) {
    const double z = rng.beta(0.5 * m, 0.5 * m);
    const double w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = rng.uniform_pos();
    if (kappa * w + m * std::log(1.0 - x0 * w) - c >= std::log(u)) return w;
  }
}

}  // namespace

UnitVector vmf_sample_one(const VmfParams& params, Rng& rng) {
  const int dim = params.mean_direction.dim();
  const Eigen::VectorXd& mu = params.mean_direction.coords();
  const double w = sample_radial(params.concentration, dim, rng);

  // Uniform direction in the tangent space of mu.
  Eigen::VectorXd tangent;
  for (;;) {
    Eigen::VectorXd g = rng.gaussian_vector(dim);
    tangent = g - mu.dot(g) * mu;
    const double n = tangent.norm();
    if (n > kZeroNorm) {
      tangent /= n;
      break;
    }
  }
  const double s = std::sqrt(std::max(0.0, 1.0 - w * w));
  return normalize(w * mu + s * tangent);
}

std::vector<UnitVector> vmf_sample(const VmfParams& params, int count,
                                   std::uint64_t rng_seed) {
  if (count < 1) throw ValidationError("vmf_sample: count must be >= 1");
  Rng rng(rng_seed);
  std::vector<UnitVector> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(vmf_sample_one(params, rng));
  return out;
}

UnitVector uniform_unit_vector(int dim, Rng& rng) {
  for (;;) {
    Eigen::VectorXd g = rng.gaussian_vector(dim);
    if (g.norm() > kZeroNorm) return normalize(g);
  }
}

UnitVector motion_embedding(const std::vector<UnitVector>& states) {
  if (states.empty()) throw ValidationError("motion_embedding: empty state list");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(states.front().dim());
  for (const auto& s : states) {
    if (s.dim() != mean.size())
      throw DimensionMismatchError("motion_embedding: dimension mismatch");
    mean += s.coords();
  }
  mean /= static_cast<double>(states.size());
  if (!(mean.norm() > kZeroNorm))
    throw DegenerateEmbeddingError("motion_embedding: mean norm <= 1e-12");
  return normalize(mean);
}

GaussianFeatureStats fit_gaussian(const Eigen::MatrixXd& features, double ridge) {
  const auto n = features.cols();
  if (n < 1) throw ValidationError("fit_gaussian: need at least one sample");
  const Eigen::VectorXd mean = features.rowwise().mean();
  Eigen::MatrixXd centered = features.colwise() - mean;
  Eigen::MatrixXd cov;
  if (n > 1)
    cov = centered * centered.transpose() / static_cast<double>(n - 1);
  else
    cov = Eigen::MatrixXd::Zero(features.rows(), features.rows());
  cov = 0.5 * (cov + cov.transpose());  // exact symmetry
  if (ridge > 0.0) cov.diagonal().array() += ridge;
  return GaussianFeatureStats{mean, cov};
}

double frechet_distance(const GaussianFeatureStats& a,
                        const GaussianFeatureStats& b) {
  if (a.dim() != b.dim() || a.covariance.rows() != b.covariance.rows())
    throw DimensionMismatchError("frechet_distance: dimension mismatch");

  auto check_and_sym = [](const Eigen::MatrixXd& cov) {
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9)
      throw ValidationError("frechet_distance: covariance not symmetric");
    return Eigen::MatrixXd(0.5 * (cov + cov.transpose()));
  };
  const Eigen::MatrixXd ca = check_and_sym(a.covariance);
  const Eigen::MatrixXd cb = check_and_sym(b.covariance);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_a(ca);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_b(cb);
  if (es_a.eigenvalues().minCoeff() < -1e-6 || es_b.eigenvalues().minCoeff() < -1e-6)
    throw NonPsdCovarianceError("frechet_distance: covariance has eigenvalue < -1e-6");

  const Eigen::VectorXd sqrt_eva =
      es_a.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd sqrt_a = es_a.eigenvectors() *
                                 sqrt_eva.asDiagonal() *
                                 es_a.eigenvectors().transpose();

  // Tr((S_a S_b)^{1/2}) = Tr((sqrt_a S_b sqrt_a)^{1/2}); the inner matrix is
  // symmetric PSD up to rounding.
  Eigen::MatrixXd inner = sqrt_a * cb * sqrt_a;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_inner(inner);
  const double trace_sqrt =
      es_inner.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  const double mean_term = (a.mean - b.mean).squaredNorm();
  return mean_term + ca.trace() + cb.trace() - 2.0 * trace_sqrt;
}

}  // namespace skillforge
