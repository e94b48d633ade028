#pragma once

#include "hais/random.hpp"
#include "hais/types.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace hais {

using Matrix = Eigen::MatrixXd;

/// N Gaussian proposals sharing one diagonal covariance. Only the locations
/// (one column each) ever change.
class ProposalBank {
 public:
  ProposalBank(Matrix locations, Vector variances);

  int size() const { return static_cast<int>(locations_.cols()); }
  int dim() const { return static_cast<int>(locations_.rows()); }

  const Matrix& locations() const { return locations_; }
  auto location(int n) const { return locations_.col(n); }
  const Vector& variances() const { return variances_; }
  const Vector& std_devs() const { return std_devs_; }

  void set_locations(Matrix locations);

  /// Log-density of proposal n at x, normalization included.
  double log_pdf(int n, const Vector& x) const;

  /// log sum_i q_i(x): the unnormalized sum over all proposals.
  double mixture_log_pdf(const Vector& x) const;

  /// Log-densities of every proposal at x (length N).
  Vector component_log_pdfs(const Vector& x) const;

 private:
  Matrix locations_;
  Vector variances_;
  Vector inv_variances_;
  Vector std_devs_;
  double log_norm_ = 0.0;
};

/// Points drawn from a bank, stored column-wise with their provenance.
struct SampleSet {
  Matrix points;
  std::vector<int> proposal;
  std::vector<int> draw;

  std::size_t size() const { return proposal.size(); }
};

/// Draws K points from every proposal from one stream, proposal-major order.
SampleSet sample_bank(const ProposalBank& bank, int per_proposal, RngStream& rng);

/// Fills columns [n*K, (n+1)*K) of `out` with K draws from proposal n.
/// `out` must already be sized for N*K points.
void sample_proposal(const ProposalBank& bank, int n, int per_proposal, RngStream& rng,
                     SampleSet& out);

/// Empty sample set sized for N*K points with provenance filled in.
SampleSet allocate_samples(const ProposalBank& bank, int per_proposal);

/// Locations drawn uniformly from the box [low, high]^dim.
Matrix uniform_box_locations(int dim, int count, double low, double high, RngStream& rng);

}  // namespace hais
