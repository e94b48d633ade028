#include "hais/proposals.hpp"

#include "hais/targets.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace hais {

ProposalBank::ProposalBank(Matrix locations, Vector variances)
    : locations_(std::move(locations)), variances_(std::move(variances)) {
  if (locations_.cols() < 1) throw Error("proposal bank needs at least one proposal");
  if (locations_.rows() < 1) throw Error("proposal bank needs a positive dimension");
  if (variances_.size() != locations_.rows()) {
    throw Error("proposal bank: scale has wrong dimension");
  }
  if (!(variances_.array() > 0.0).all() || !variances_.allFinite()) {
    throw Error("proposal bank: variances must be positive");
  }
  if (!locations_.allFinite()) throw Error("proposal bank: locations must be finite");
  inv_variances_ = variances_.cwiseInverse();
  std_devs_ = variances_.cwiseSqrt();
  log_norm_ = -0.5 * (static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi) +
                      variances_.array().log().sum());
}

void ProposalBank::set_locations(Matrix locations) {
  if (locations.rows() != locations_.rows() || locations.cols() != locations_.cols()) {
    throw Error("proposal bank: replacement locations have the wrong shape");
  }
  if (!locations.allFinite()) throw Error("proposal bank: locations must be finite");
  locations_ = std::move(locations);
}

double ProposalBank::log_pdf(int n, const Vector& x) const {
  if (n < 0 || n >= size()) {
    throw Error("proposal index " + std::to_string(n) + " out of range");
  }
  return log_norm_ -
         0.5 * ((x - locations_.col(n)).array().square() * inv_variances_.array()).sum();
}

Vector ProposalBank::component_log_pdfs(const Vector& x) const {
  const Eigen::RowVectorXd quad = ((locations_.colwise() - x).array().square().colwise() *
                                   inv_variances_.array())
                                      .colwise()
                                      .sum();
  return (log_norm_ - 0.5 * quad.array()).transpose();
}

double ProposalBank::mixture_log_pdf(const Vector& x) const {
  return log_sum_exp(component_log_pdfs(x));
}

SampleSet allocate_samples(const ProposalBank& bank, int per_proposal) {
  if (per_proposal < 1) throw Error("samples per proposal must be at least 1");
  const auto total = static_cast<std::size_t>(bank.size()) * static_cast<std::size_t>(per_proposal);
  SampleSet out;
  out.points.resize(bank.dim(), static_cast<Eigen::Index>(total));
  out.proposal.resize(total);
  out.draw.resize(total);
  for (int n = 0; n < bank.size(); ++n) {
    for (int k = 0; k < per_proposal; ++k) {
      const auto j = static_cast<std::size_t>(n) * static_cast<std::size_t>(per_proposal) +
                     static_cast<std::size_t>(k);
      out.proposal[j] = n;
      out.draw[j] = k;
    }
  }
  return out;
}

void sample_proposal(const ProposalBank& bank, int n, int per_proposal, RngStream& rng,
                     SampleSet& out) {
  const auto first = static_cast<Eigen::Index>(n) * per_proposal;
  for (int k = 0; k < per_proposal; ++k) {
    auto column = out.points.col(first + k);
    for (int d = 0; d < bank.dim(); ++d) {
      column[d] = bank.locations()(d, n) + bank.std_devs()[d] * rng.normal();
    }
  }
}

SampleSet sample_bank(const ProposalBank& bank, int per_proposal, RngStream& rng) {
  SampleSet out = allocate_samples(bank, per_proposal);
  for (int n = 0; n < bank.size(); ++n) sample_proposal(bank, n, per_proposal, rng, out);
  return out;
}

Matrix uniform_box_locations(int dim, int count, double low, double high, RngStream& rng) {
  if (!(low < high)) throw Error("initialization box needs low < high");
  Matrix out(dim, count);
  for (int n = 0; n < count; ++n) {
    for (int d = 0; d < dim; ++d) out(d, n) = low + (high - low) * rng.uniform();
  }
  return out;
}

}  // namespace hais
