#include "taskshift/synth.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

#include "taskshift/error.hpp"

namespace taskshift {

double sign_of(double x) noexcept { return x >= 0.0 ? 1.0 : -1.0; }

Matrix sample_design(const CovarianceSpec& spec, std::size_t rows, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(spec.dim());
  const auto n = static_cast<Eigen::Index>(rows);
  Matrix X(n, d);
  // Column-major fill: column j is n draws scaled by sqrt(lambda_j).
  for (Eigen::Index j = 0; j < d; ++j) {
    const double scale = std::sqrt(spec.lambda(static_cast<std::size_t>(j)));
    double* col = X.col(j).data();
    for (Eigen::Index i = 0; i < n; ++i) col[i] = scale * rng.normal();
  }
  return X;
}

Dataset sample_dataset(const CovarianceSpec& spec, const Signal& signal, std::size_t n,
                       const SeedRecord& seed, double label_noise) {
  require_bound(spec, signal);
  if (n < 1) throw Error(ErrorCode::ParameterOutOfRange, "dataset needs n >= 1");
  if (!(label_noise >= 0.0 && label_noise < 0.5)) {
    throw Error(ErrorCode::NoiseOutOfRange, "label noise must lie in [0, 0.5)");
  }
  Rng design_rng(substream(seed, StreamPurpose::Design));
  Dataset ds;
  ds.X = sample_design(spec, n, design_rng);
  ds.label_noise = label_noise;
  ds.seed = seed;

  // Sparse signals only touch their support columns.
  if (signal.is_sparse()) {
    ds.y_reg = Vector::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t j : signal.support()) {
      const auto jj = static_cast<Eigen::Index>(j);
      ds.y_reg.noalias() += signal.theta_star()(jj) * ds.X.col(jj);
    }
  } else {
    ds.y_reg.noalias() = ds.X * signal.theta_star();
  }

  ds.y_cls = ds.y_reg.unaryExpr([](double v) { return sign_of(v); });
  if (label_noise > 0.0) {
    Rng flip_rng(substream(seed, StreamPurpose::LabelFlips));
    for (Eigen::Index i = 0; i < ds.y_cls.size(); ++i) {
      if (flip_rng.bernoulli(label_noise)) ds.y_cls(i) = -ds.y_cls(i);
    }
  }
  return ds;
}

Dataset make_dataset(Matrix X, Vector y_reg, Vector y_cls) {
  if (y_reg.size() != X.rows() || y_cls.size() != X.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "label vectors must have one entry per row");
  }
  Dataset ds;
  ds.X = std::move(X);
  ds.y_reg = std::move(y_reg);
  ds.y_cls = std::move(y_cls);
  return ds;
}

FewShotSet sample_fewshot(const CovarianceSpec& spec, const Signal& signal, std::size_t m,
                          double sigma2, const SeedRecord& seed) {
  require_bound(spec, signal);
  if (m < 1) throw Error(ErrorCode::ParameterOutOfRange, "few-shot set needs m >= 1");
  if (!(sigma2 >= 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "sigma2 must be >= 0");
  Rng design_rng(substream(seed, StreamPurpose::FewShotDesign));
  FewShotSet fs;
  fs.Xp = sample_design(spec, m, design_rng);
  fs.yp.noalias() = fs.Xp * signal.theta_star();
  fs.sigma2 = sigma2;
  fs.seed = seed;
  if (sigma2 > 0.0) {
    Rng noise_rng(substream(seed, StreamPurpose::FewShotNoise));
    const double sd = std::sqrt(sigma2);
    for (Eigen::Index i = 0; i < fs.yp.size(); ++i) fs.yp(i) += sd * noise_rng.normal();
  }
  return fs;
}

DependentNoise dependent_noise(const Dataset& ds) {
  if (ds.label_noise > 0.0) {
    throw Error(ErrorCode::NoisyLabels, "dependent-noise form needs noiseless labels");
  }
  DependentNoise out;
  out.diag.resize(ds.y_reg.size());
  for (Eigen::Index i = 0; i < ds.y_reg.size(); ++i) {
    const double y = ds.y_reg(i);
    if (std::abs(y) < 1e-300) {
      throw Error(ErrorCode::DegenerateLabel,
                  "regression label " + std::to_string(i) + " is numerically zero");
    }
    out.diag(i) = (ds.y_cls(i) - y) / y;
  }
  return out;
}

Vector reconstruct_labels(const Dataset& ds, const DependentNoise& noise) {
  return ds.y_reg + noise.diag.cwiseProduct(ds.y_reg);
}

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'N', 'I', 'X', '0', '0', '0', '1'};

template <class T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), sizeof(T))) throw Error(ErrorCode::Io, "truncated design file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

void write_design(std::ostream& out, const Matrix& X) {
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (static_cast<std::uint64_t>(X.rows()) > kMax || static_cast<std::uint64_t>(X.cols()) > kMax) {
    throw Error(ErrorCode::DimensionOverflow, "design too large for a 32-bit header");
  }
  out.write(kMagic.data(), kMagic.size());
  put_le(out, static_cast<std::uint32_t>(X.rows()));
  put_le(out, static_cast<std::uint32_t>(X.cols()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) put_le(out, X(i, j));
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing design file");
}

Matrix read_design(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error(ErrorCode::Io, "missing MNIX0001 magic");
  }
  const auto n = get_le<std::uint32_t>(in);
  const auto d = get_le<std::uint32_t>(in);
  Matrix X(n, d);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = get_le<double>(in);
  }
  return X;
}

}  // namespace taskshift
