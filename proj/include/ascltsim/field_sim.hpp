#ifndef ASCLTSIM_FIELD_SIM_HPP
#define ASCLTSIM_FIELD_SIM_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ascltsim/covariance.hpp"
#include "ascltsim/grid.hpp"

namespace ascltsim {

enum class SampleMethod { iid, cholesky, circulant };

std::string to_string(SampleMethod m);
SampleMethod parse_sample_method(const std::string& s);

// One seeded realization of the standardized field on R_n. Identical
// (model, n, seed, method) always reproduces identical values bit-for-bit.
struct FieldRealization {
  GridSize n;
  Grid<double> values;
  std::uint64_t seed = 0;
  std::string model_id;
  SampleMethod method = SampleMethod::iid;
};

FieldRealization sample_iid(GridSize n, std::uint64_t seed);

inline constexpr std::int64_t kCholeskySiteCap = 4096;

// Exact sampler: values = L z with L L^T the grid correlation matrix.
// Reusable across seeds; factoring happens once at construction.
class CholeskySampler {
 public:
  CholeskySampler(const CorrelationModel& model, GridSize n,
                  std::int64_t site_cap = kCholeskySiteCap);

  FieldRealization sample(std::uint64_t seed) const;
  GridSize grid() const { return n_; }

 private:
  GridSize n_;
  std::string model_id_;
  Eigen::MatrixXd factor_;  // lower triangular
};

FieldRealization sample_cholesky(const CorrelationModel& model, GridSize n, std::uint64_t seed);

// Exact stationary sampler by 2-D circulant embedding. Starts from the
// requested pad (embedding axis = pad * next power of two >= 2(n_i - 1))
// and doubles it up to max_retries times until the embedding spectrum is
// nonnegative; eigenvalues in [-1e-8, 0) are clamped to 0, anything lower
// raises EmbeddingError.
class CirculantSampler {
 public:
  CirculantSampler(const CorrelationModel& model, GridSize n, int pad = 1, int max_retries = 3);

  FieldRealization sample(std::uint64_t seed) const;
  GridSize grid() const { return n_; }
  GridSize embedding() const { return embedding_; }
  int effective_pad() const { return effective_pad_; }

 private:
  GridSize n_;
  GridSize embedding_;
  int effective_pad_ = 1;
  std::string model_id_;
  std::vector<double> spectrum_sqrt_;  // sqrt(lambda / (M1 M2)), row-major
};

FieldRealization sample_circulant(const CorrelationModel& model, GridSize n, std::uint64_t seed,
                                  int pad = 1);

// Replication-capable sampler for a fixed (model, n): rep r is sampled with
// derive_rep_seed(seed, r). iid models use the iid path; stationary models
// try circulant and fall back to Cholesky; anything else uses Cholesky.
std::function<FieldRealization(std::uint64_t)> make_default_sampler(const CorrelationModel& model,
                                                                    GridSize n);

// Empirical correlation matrix over site pairs from `reps` independent
// replications (known zero mean / unit variance estimator).
Eigen::MatrixXd sample_covariance(const CorrelationModel& model, GridSize n, SampleMethod method,
                                  int reps, std::uint64_t seed);

// Binary format: 24-byte header (magic "AFLD", u32 n1, u32 n2, u64 seed,
// u32 method tag), then row-major little-endian float64 values.
void write_field_binary(const FieldRealization& field, const std::string& path);
FieldRealization read_field_binary(const std::string& path);

// CSV `i1,i2,value`.
void write_field_csv(const FieldRealization& field, const std::string& path);

}  // namespace ascltsim

#endif
