#pragma once

#include <Eigen/Core>

#include <vector>

#include "skillforge/common.hpp"

namespace skillforge {

// ---------------------------------------------------------------------------
// Unit-sphere geometry and von Mises-Fisher distribution mathematics.
// ---------------------------------------------------------------------------

/// Point on the unit hypersphere in R^k, k >= 2. Norm is 1 within 1e-9 by
/// construction.
class UnitVector {
 public:
  explicit UnitVector(Eigen::VectorXd coords);

  const Eigen::VectorXd& coords() const { return coords_; }
  int dim() const { return static_cast<int>(coords_.size()); }
  double dot(const UnitVector& other) const;

 private:
  Eigen::VectorXd coords_;
};

/// Projects v onto the sphere. Throws ZeroVectorError when ||v|| <= 1e-12.
UnitVector normalize(const Eigen::VectorXd& v);

struct VmfParams {
  UnitVector mean_direction;
  double concentration;  // kappa > 0, finite

  VmfParams(UnitVector mu, double kappa);
};

/// log I_nu(x) for nu >= 0, x > 0. Power series up to x = 50, Hankel
/// asymptotic expansion with optimal truncation beyond.
double log_bessel_i(double nu, double x);

/// log C_d(kappa) with C_d = kappa^{d/2-1} / ((2 pi)^{d/2} I_{d/2-1}(kappa)).
double vmf_log_normalizer(int dim, double kappa);

/// log C_d(kappa) + kappa * <mu, z>.
double vmf_log_density(const VmfParams& params, const UnitVector& z);

/// Mean resultant length A_d(kappa) = I_{d/2}(kappa) / I_{d/2-1}(kappa).
double vmf_mean_resultant_length(int dim, double kappa);

/// KL(vMF(mu1, kappa) || vMF(mu2, kappa)) = kappa * A_d(kappa) * (1 - <mu1, mu2>).
double vmf_kl(int dim, double kappa, double mean_cosine);

/// One draw from vMF(mu, kappa): Wood-style rejection sampling of the radial
/// component plus a uniform tangent direction.
UnitVector vmf_sample_one(const VmfParams& params, Rng& rng);

/// count i.i.d. draws; deterministic for a given seed.
std::vector<UnitVector> vmf_sample(const VmfParams& params, int count,
                                   std::uint64_t rng_seed);

UnitVector uniform_unit_vector(int dim, Rng& rng);

/// Renormalized mean of state embeddings. Throws DegenerateEmbeddingError
/// when the mean collapses (antipodal cancellation).
UnitVector motion_embedding(const std::vector<UnitVector>& states);

// ---------------------------------------------------------------------------
// Frechet distance between Gaussian feature distributions
// ---------------------------------------------------------------------------

struct GaussianFeatureStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // symmetric PSD

  int dim() const { return static_cast<int>(mean.size()); }
};

/// Sample mean and covariance (unbiased, divisor n-1) of column features,
/// plus an optional ridge on the diagonal.
GaussianFeatureStats fit_gaussian(const Eigen::MatrixXd& features,
                                  double ridge = 0.0);

/// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}), matrix square root
/// via symmetric eigendecomposition with negative eigenvalues clamped to 0.
double frechet_distance(const GaussianFeatureStats& a,
                        const GaussianFeatureStats& b);

}  // namespace skillforge
