#include "ascltsim/field_sim.hpp"

#include <fftw3.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>

#include "ascltsim/rng.hpp"

namespace ascltsim {

namespace {

std::uint32_t method_tag(SampleMethod m) {
  switch (m) {
    case SampleMethod::iid: return 1;
    case SampleMethod::cholesky: return 2;
    case SampleMethod::circulant: return 3;
  }
  throw InternalError("unknown sample method");
}

SampleMethod method_from_tag(std::uint32_t t) {
  switch (t) {
    case 1: return SampleMethod::iid;
    case 2: return SampleMethod::cholesky;
    case 3: return SampleMethod::circulant;
  }
  throw IoError("field file: unknown method tag " + std::to_string(t));
}

// FFTW's planner has global state.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

int next_pow2(int x) {
  int p = 1;
  while (p < x) p *= 2;
  return p;
}

}  // namespace

std::string to_string(SampleMethod m) {
  switch (m) {
    case SampleMethod::iid: return "iid";
    case SampleMethod::cholesky: return "cholesky";
    case SampleMethod::circulant: return "circulant";
  }
  throw InternalError("unknown sample method");
}

SampleMethod parse_sample_method(const std::string& s) {
  if (s == "iid") return SampleMethod::iid;
  if (s == "cholesky") return SampleMethod::cholesky;
  if (s == "circulant") return SampleMethod::circulant;
  throw ConfigError("unknown sample method '" + s + "' (iid, cholesky, circulant)");
}

FieldRealization sample_iid(GridSize n, std::uint64_t seed) {
  if (!n.positive()) throw DomainError("sample_iid: grid must be >= 1x1");
  FieldRealization f{n, Grid<double>(n), seed, "iid", SampleMethod::iid};
  RandomStream rng(seed);
  for (double& v : f.values.data()) v = rng.next_normal();
  return f;
}

// ---------------------------------------------------------------------------
// Cholesky
// ---------------------------------------------------------------------------

CholeskySampler::CholeskySampler(const CorrelationModel& model, GridSize n,
                                 std::int64_t site_cap)
    : n_(n), model_id_(model.id()) {
  if (!n.positive()) throw DomainError("CholeskySampler: grid must be >= 1x1");
  const std::int64_t m = n.sites();
  if (m > site_cap) {
    throw SizeError("CholeskySampler: " + std::to_string(m) + " sites exceeds cap " +
                    std::to_string(site_cap));
  }
  Eigen::MatrixXd c(m, m);
  std::int64_t a = 0;
  for (int a1 = 1; a1 <= n.n1; ++a1) {
    for (int a2 = 1; a2 <= n.n2; ++a2, ++a) {
      std::int64_t b = 0;
      for (int b1 = 1; b1 <= n.n1; ++b1) {
        for (int b2 = 1; b2 <= n.n2; ++b2, ++b) {
          c(a, b) = model.correlation({a1, a2}, {b1, b2});
        }
      }
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) {
    // Jitter retry absorbs eigenvalues in [-1e-10, 0) from roundoff.
    c.diagonal().array() += 1e-10;
    llt.compute(c);
    if (llt.info() != Eigen::Success) {
      throw ModelError("CholeskySampler: correlation matrix for '" + model_id_ +
                       "' on " + to_string(n) + " is not positive semidefinite");
    }
  }
  factor_ = llt.matrixL();
}

FieldRealization CholeskySampler::sample(std::uint64_t seed) const {
  const std::int64_t m = n_.sites();
  Eigen::VectorXd z(m);
  RandomStream rng(seed);
  for (std::int64_t i = 0; i < m; ++i) z(i) = rng.next_normal();
  // Triangular product keeps the IID case bit-identical to sample_iid
  // (L = I adds exact zeros only).
  const Eigen::VectorXd x = factor_.triangularView<Eigen::Lower>() * z;
  FieldRealization f{n_, Grid<double>(n_), seed, model_id_, SampleMethod::cholesky};
  std::memcpy(f.values.data().data(), x.data(), static_cast<std::size_t>(m) * sizeof(double));
  return f;
}

FieldRealization sample_cholesky(const CorrelationModel& model, GridSize n, std::uint64_t seed) {
  return CholeskySampler(model, n).sample(seed);
}

// ---------------------------------------------------------------------------
// Circulant embedding
// ---------------------------------------------------------------------------

CirculantSampler::CirculantSampler(const CorrelationModel& model, GridSize n, int pad,
                                   int max_retries)
    : n_(n), model_id_(model.id()) {
  if (!n.positive()) throw DomainError("CirculantSampler: grid must be >= 1x1");
  if (pad < 1) throw DomainError("CirculantSampler: pad must be >= 1");
  if (!model.stationary()) {
    throw ModelError("CirculantSampler: model '" + model_id_ + "' is not stationary");
  }

  double worst_min = 0.0;
  for (int attempt = 0; attempt <= max_retries; ++attempt, pad *= 2) {
    const int m1 = pad * next_pow2(std::max(2 * (n.n1 - 1), 1));
    const int m2 = pad * next_pow2(std::max(2 * (n.n2 - 1), 1));
    const std::size_t mm = static_cast<std::size_t>(m1) * m2;

    std::vector<std::complex<double>> base(mm);
    for (int a = 0; a < m1; ++a) {
      const int l1 = std::min(a, m1 - a);
      for (int b = 0; b < m2; ++b) {
        const int l2 = std::min(b, m2 - b);
        base[static_cast<std::size_t>(a) * m2 + b] = model.correlation_lag(l1, l2);
      }
    }

    std::vector<std::complex<double>> lambda(mm);
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      fftw_plan plan = fftw_plan_dft_2d(
          m1, m2, reinterpret_cast<fftw_complex*>(base.data()),
          reinterpret_cast<fftw_complex*>(lambda.data()), FFTW_FORWARD,
          FFTW_ESTIMATE | FFTW_UNALIGNED);
      fftw_execute(plan);
      fftw_destroy_plan(plan);
    }

    double min_eig = 0.0;
    for (const auto& l : lambda) min_eig = std::min(min_eig, l.real());
    if (min_eig >= -1e-8) {
      embedding_ = GridSize{m1, m2};
      effective_pad_ = pad;
      spectrum_sqrt_.resize(mm);
      const double scale = 1.0 / static_cast<double>(mm);
      for (std::size_t i = 0; i < mm; ++i) {
        spectrum_sqrt_[i] = std::sqrt(std::max(lambda[i].real(), 0.0) * scale);
      }
      return;
    }
    worst_min = std::min(worst_min, min_eig);
  }
  throw EmbeddingError("CirculantSampler: embedding spectrum stayed negative (min " +
                       std::to_string(worst_min) + ") for '" + model_id_ + "' on " +
                       to_string(n) + "; consider the Cholesky sampler");
}

FieldRealization CirculantSampler::sample(std::uint64_t seed) const {
  const int m1 = embedding_.n1;
  const int m2 = embedding_.n2;
  const std::size_t mm = static_cast<std::size_t>(m1) * m2;

  std::vector<std::complex<double>> in(mm), out(mm);
  RandomStream rng(seed);
  for (std::size_t i = 0; i < mm; ++i) {
    const double re = rng.next_normal();
    const double im = rng.next_normal();
    in[i] = spectrum_sqrt_[i] * std::complex<double>(re, im);
  }

  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft_2d(m1, m2, reinterpret_cast<fftw_complex*>(in.data()),
                            reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }

  // Real part of the embedded field, restricted to R_n. (The imaginary part
  // is an independent copy; one field per seed keeps the contract simple.)
  FieldRealization f{n_, Grid<double>(n_), seed, model_id_, SampleMethod::circulant};
  for (int i1 = 1; i1 <= n_.n1; ++i1) {
    for (int i2 = 1; i2 <= n_.n2; ++i2) {
      f.values(i1, i2) = out[static_cast<std::size_t>(i1 - 1) * m2 + (i2 - 1)].real();
    }
  }
  return f;
}

FieldRealization sample_circulant(const CorrelationModel& model, GridSize n, std::uint64_t seed,
                                  int pad) {
  return CirculantSampler(model, n, pad).sample(seed);
}

std::function<FieldRealization(std::uint64_t)> make_default_sampler(const CorrelationModel& model,
                                                                    GridSize n) {
  if (dynamic_cast<const IidModel*>(&model) != nullptr) {
    return [n](std::uint64_t seed) { return sample_iid(n, seed); };
  }
  if (model.stationary()) {
    try {
      auto sampler = std::make_shared<CirculantSampler>(model, n);
      return [sampler](std::uint64_t seed) { return sampler->sample(seed); };
    } catch (const EmbeddingError&) {
      // fall through to Cholesky
    }
  }
  auto sampler = std::make_shared<CholeskySampler>(model, n);
  return [sampler](std::uint64_t seed) { return sampler->sample(seed); };
}

Eigen::MatrixXd sample_covariance(const CorrelationModel& model, GridSize n, SampleMethod method,
                                  int reps, std::uint64_t seed) {
  if (reps < 2) throw DomainError("sample_covariance: reps must be >= 2");
  const std::int64_t m = n.sites();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(m, m);

  std::function<FieldRealization(std::uint64_t)> draw;
  switch (method) {
    case SampleMethod::iid:
      draw = [n](std::uint64_t s) { return sample_iid(n, s); };
      break;
    case SampleMethod::cholesky: {
      auto sampler = std::make_shared<CholeskySampler>(model, n);
      draw = [sampler](std::uint64_t s) { return sampler->sample(s); };
      break;
    }
    case SampleMethod::circulant: {
      auto sampler = std::make_shared<CirculantSampler>(model, n);
      draw = [sampler](std::uint64_t s) { return sampler->sample(s); };
      break;
    }
  }

  Eigen::VectorXd x(m);
  for (int r = 0; r < reps; ++r) {
    const FieldRealization f = draw(derive_rep_seed(seed, static_cast<std::uint64_t>(r)));
    for (std::int64_t i = 0; i < m; ++i) x(i) = f.values.data()[static_cast<std::size_t>(i)];
    acc.selfadjointView<Eigen::Lower>().rankUpdate(x);
  }
  acc /= static_cast<double>(reps);
  return acc.selfadjointView<Eigen::Lower>();
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little,
              "field binary format is little-endian; big-endian hosts unsupported");

constexpr char kMagic[4] = {'A', 'F', 'L', 'D'};

}  // namespace

void write_field_binary(const FieldRealization& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write field file: " + path);
  const std::uint32_t n1 = static_cast<std::uint32_t>(field.n.n1);
  const std::uint32_t n2 = static_cast<std::uint32_t>(field.n.n2);
  const std::uint64_t seed = field.seed;
  const std::uint32_t tag = method_tag(field.method);
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&n1), 4);
  out.write(reinterpret_cast<const char*>(&n2), 4);
  out.write(reinterpret_cast<const char*>(&seed), 8);
  out.write(reinterpret_cast<const char*>(&tag), 4);
  out.write(reinterpret_cast<const char*>(field.values.data().data()),
            static_cast<std::streamsize>(field.values.data().size() * sizeof(double)));
  if (!out) throw IoError("short write to field file: " + path);
}

FieldRealization read_field_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open field file: " + path);
  char magic[4];
  std::uint32_t n1 = 0, n2 = 0, tag = 0;
  std::uint64_t seed = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&n1), 4);
  in.read(reinterpret_cast<char*>(&n2), 4);
  in.read(reinterpret_cast<char*>(&seed), 8);
  in.read(reinterpret_cast<char*>(&tag), 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("not a field file: " + path);
  }
  if (n1 < 1 || n2 < 1 || n1 > 1u << 20 || n2 > 1u << 20) {
    throw IoError("field file has implausible grid size: " + path);
  }
  FieldRealization f{GridSize{static_cast<int>(n1), static_cast<int>(n2)},
                     Grid<double>(GridSize{static_cast<int>(n1), static_cast<int>(n2)}), seed,
                     "file:" + path, method_from_tag(tag)};
  in.read(reinterpret_cast<char*>(f.values.data().data()),
          static_cast<std::streamsize>(f.values.data().size() * sizeof(double)));
  if (!in) throw IoError("truncated field file: " + path);
  return f;
}

void write_field_csv(const FieldRealization& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write field CSV: " + path);
  out << "i1,i2,value\n";
  char buf[64];
  for (int i1 = 1; i1 <= field.n.n1; ++i1) {
    for (int i2 = 1; i2 <= field.n.n2; ++i2) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g\n", i1, i2, field.values(i1, i2));
      out << buf;
    }
  }
}

}  // namespace ascltsim
