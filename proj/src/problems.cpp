#include "blockcd/problems.hpp"

#include "blockcd/error.hpp"

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace bcd {

namespace {

Matrix symmetrized(const Matrix& m) { return SymmetricMatrix(m, 1e-12).dense(); }

double stable_sigmoid(double t) {
  // 1 / (1 + e^t)
  if (t > 0.0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

Matrix random_orthogonal(RngStream& rng, Index d) {
  Matrix g(d, d);
  for (Index c = 0; c < d; ++c)
    for (Index r = 0; r < d; ++r) g(r, c) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(d, d);
}

Matrix spectrum_matrix(RngStream& rng, Index d, double kappa, bool convex) {
  if (convex && kappa == 1.0) return Matrix::Identity(d, d);
  Vector e(d);
  for (Index k = 0; k < d; ++k) e[k] = 1.0 + (kappa - 1.0) * rng.uniform();
  if (convex) {
    e[0] = 1.0;
    if (d > 1) e[d - 1] = kappa;
  } else {
    for (Index k = 0; k < d; ++k)
      if (rng.uniform() < 0.5) e[k] = -e[k];
    e[0] = -std::abs(e[0]);
    if (d > 1) e[1] = std::abs(e[1]);
  }
  Matrix u = random_orthogonal(rng, d);
  return symmetrized(u * e.asDiagonal() * u.transpose());
}

Vector normal_vector(RngStream& rng, Index d) {
  Vector v(d);
  for (Index k = 0; k < d; ++k) v[k] = rng.normal();
  return v;
}

void check_sizes(std::size_t n, Index d, const BlockPartition& partition) {
  if (n < 1) throw std::invalid_argument("need at least one component");
  if (d < 1) throw std::invalid_argument("dimension must be positive");
  if (partition.dim() != d) throw std::invalid_argument("partition does not cover d coordinates");
}

double block_spectral_norm(const Matrix& a, Range r) {
  Matrix blk = a.block(r.offset, r.offset, r.size, r.size);
  Eigen::SelfAdjointEigenSolver<Matrix> es(blk, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

DiagonalMetric metric_from_scalars(std::vector<double> scalars, const BlockPartition& p) {
  for (double& s : scalars)
    if (!(s > 0.0)) s = 1.0;  // zero curvature: any positive metric works
  return DiagonalMetric::from_block_scalars(scalars, p);
}

}  // namespace

// ---------------------------------------------------------------- quadratic

QuadraticFiniteSum::QuadraticFiniteSum(std::vector<Matrix> A, std::vector<Vector> b,
                                       std::vector<double> c, BlockPartition partition,
                                       bool box_recommended)
    : Objective(std::move(partition)),
      A_(std::move(A)),
      b_(std::move(b)),
      c_(std::move(c)),
      box_recommended_(box_recommended) {
  const Index d = dim();
  if (A_.empty()) throw std::invalid_argument("quadratic needs at least one component");
  if (b_.size() != A_.size() || c_.size() != A_.size())
    throw std::invalid_argument("A, b, c must have one entry per component");
  mean_A_ = Matrix::Zero(d, d);
  mean_b_ = Vector::Zero(d);
  for (std::size_t i = 0; i < A_.size(); ++i) {
    if (A_[i].rows() != d || A_[i].cols() != d || b_[i].size() != d)
      throw std::invalid_argument("component " + std::to_string(i) + " has wrong dimensions");
    A_[i] = symmetrized(A_[i]);
    mean_A_ += A_[i];
    mean_b_ += b_[i];
    mean_c_ += c_[i];
  }
  const double n = static_cast<double>(A_.size());
  mean_A_ /= n;
  mean_b_ /= n;
  mean_c_ /= n;
}

double QuadraticFiniteSum::value(const Vector& x) const {
  check_dim(x);
  return 0.5 * x.dot(mean_A_ * x) + mean_b_.dot(x) + mean_c_;
}

Vector QuadraticFiniteSum::grad_rows(Range r, const Vector& x) const {
  check_dim(x);
  return mean_A_.middleRows(r.offset, r.size) * x + mean_b_.segment(r.offset, r.size);
}

double QuadraticFiniteSum::component_value(ComponentId i, const Vector& x) const {
  check_component(i);
  check_dim(x);
  return 0.5 * x.dot(A_[i] * x) + b_[i].dot(x) + c_[i];
}

Vector QuadraticFiniteSum::component_grad_rows(ComponentId i, Range r, const Vector& x) const {
  check_component(i);
  check_dim(x);
  return A_[i].middleRows(r.offset, r.size) * x + b_[i].segment(r.offset, r.size);
}

Vector QuadraticFiniteSum::minibatch_grad_diff_rows(const std::vector<ComponentId>& batch, Range r,
                                                    const Vector& x, const Vector& y) const {
  if (batch.empty()) throw std::invalid_argument("empty minibatch");
  check_dim(x);
  check_dim(y);
  const Vector diff = x - y;
  Vector acc = Vector::Zero(r.size);
  for (ComponentId i : batch) {
    check_component(i);
    acc.noalias() += A_[i].middleRows(r.offset, r.size) * diff;
  }
  return acc / static_cast<double>(batch.size());
}

std::optional<Vector> QuadraticFiniteSum::minimizer() const {
  Eigen::LLT<Matrix> llt(mean_A_);
  if (llt.info() != Eigen::Success) return std::nullopt;
  return Vector(llt.solve(-mean_b_));
}

QuadraticFiniteSum QuadraticFiniteSum::with_partition(BlockPartition partition) const {
  return QuadraticFiniteSum(A_, b_, c_, std::move(partition), box_recommended_);
}

// ---------------------------------------------------------------- sigmoid

SigmoidClassification::SigmoidClassification(Matrix data, Vector labels, BlockPartition partition)
    : Objective(std::move(partition)), data_(std::move(data)), labels_(std::move(labels)) {
  if (data_.rows() < 1) throw std::invalid_argument("need at least one sample");
  if (data_.cols() != dim() || labels_.size() != data_.rows())
    throw std::invalid_argument("sigmoid data has wrong dimensions");
  for (Index i = 0; i < labels_.size(); ++i)
    if (labels_[i] != 1.0 && labels_[i] != -1.0)
      throw std::invalid_argument("labels must be +1 or -1");
}

double SigmoidClassification::value(const Vector& x) const {
  check_dim(x);
  const Vector t = (data_ * x).cwiseProduct(labels_);
  double acc = 0.0;
  for (Index i = 0; i < t.size(); ++i) acc += stable_sigmoid(t[i]);
  return acc / static_cast<double>(t.size());
}

Vector SigmoidClassification::grad_rows(Range r, const Vector& x) const {
  check_dim(x);
  const Vector t = (data_ * x).cwiseProduct(labels_);
  Vector coef(t.size());
  for (Index i = 0; i < t.size(); ++i) {
    const double s = stable_sigmoid(t[i]);
    coef[i] = -s * (1.0 - s) * labels_[i];
  }
  return data_.middleCols(r.offset, r.size).transpose() * coef / static_cast<double>(t.size());
}

double SigmoidClassification::component_value(ComponentId i, const Vector& x) const {
  check_component(i);
  check_dim(x);
  const auto row = static_cast<Index>(i);
  return stable_sigmoid(labels_[row] * data_.row(row).dot(x));
}

Vector SigmoidClassification::component_grad_rows(ComponentId i, Range r, const Vector& x) const {
  check_component(i);
  check_dim(x);
  const auto row = static_cast<Index>(i);
  const double s = stable_sigmoid(labels_[row] * data_.row(row).dot(x));
  return (-s * (1.0 - s) * labels_[row]) * data_.row(row).segment(r.offset, r.size).transpose();
}

SigmoidClassification SigmoidClassification::with_partition(BlockPartition partition) const {
  return SigmoidClassification(data_, labels_, std::move(partition));
}

// ---------------------------------------------------------------- streaming

StreamingQuadratic::StreamingQuadratic(Matrix A, Vector b, double noise, std::uint64_t seed,
                                       BlockPartition partition)
    : Objective(std::move(partition)), A_(symmetrized(A)), b_(std::move(b)), noise_(noise), seed_(seed) {
  if (A_.rows() != dim() || b_.size() != dim())
    throw std::invalid_argument("streaming quadratic has wrong dimensions");
  if (!(noise_ >= 0.0)) throw std::invalid_argument("noise level must be nonnegative");
}

Vector StreamingQuadratic::noise_vector(ComponentId xi) const {
  std::mt19937_64 eng(splitmix64(seed_ ^ splitmix64(xi)));
  std::normal_distribution<double> nd;
  Vector z(dim());
  for (Index k = 0; k < z.size(); ++k) z[k] = nd(eng);
  return z;
}

double StreamingQuadratic::value(const Vector& x) const {
  check_dim(x);
  return 0.5 * x.dot(A_ * x) + b_.dot(x);
}

Vector StreamingQuadratic::grad_rows(Range r, const Vector& x) const {
  check_dim(x);
  return A_.middleRows(r.offset, r.size) * x + b_.segment(r.offset, r.size);
}

double StreamingQuadratic::component_value(ComponentId xi, const Vector& x) const {
  return value(x) + noise_ * noise_vector(xi).dot(x);
}

Vector StreamingQuadratic::component_grad_rows(ComponentId xi, Range r, const Vector& x) const {
  return grad_rows(r, x) + noise_ * noise_vector(xi).segment(r.offset, r.size);
}

Vector StreamingQuadratic::minibatch_grad_diff_rows(const std::vector<ComponentId>& batch,
                                                    Range r, const Vector& x,
                                                    const Vector& y) const {
  if (batch.empty()) throw std::invalid_argument("empty minibatch");
  check_dim(x);
  check_dim(y);
  // the noise cancels; keep the per-sample loop so the arithmetic matches
  // the finite-sum path
  const Vector diff = x - y;
  Vector acc = Vector::Zero(r.size);
  for (std::size_t s = 0; s < batch.size(); ++s) acc.noalias() += A_.middleRows(r.offset, r.size) * diff;
  return acc / static_cast<double>(batch.size());
}

// ---------------------------------------------------------------- generators

QuadraticFiniteSum generate_quadratic(std::uint64_t seed, std::size_t n, Index d,
                                      const BlockPartition& partition, double condition_number,
                                      bool convex) {
  check_sizes(n, d, partition);
  if (!(condition_number >= 1.0) || !std::isfinite(condition_number))
    throw std::invalid_argument("condition number must be >= 1");
  RngStream rng(seed, "quadratic");
  std::vector<Matrix> A;
  std::vector<Vector> b;
  A.reserve(n);
  b.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    A.push_back(spectrum_matrix(rng, d, condition_number, convex));
    b.push_back(normal_vector(rng, d));
  }
  return QuadraticFiniteSum(std::move(A), std::move(b), std::vector<double>(n, 0.0), partition,
                            !convex);
}

SigmoidClassification generate_classification(std::uint64_t seed, std::size_t n, Index d,
                                              const BlockPartition& partition, double margin) {
  check_sizes(n, d, partition);
  if (!(margin > 0.0)) throw std::invalid_argument("margin must be positive");
  RngStream rng(seed, "classification");
  Vector w = normal_vector(rng, d);
  const double wn = w.norm() > 0.0 ? w.norm() : 1.0;
  Matrix data(static_cast<Index>(n), d);
  Vector labels(static_cast<Index>(n));
  for (Index i = 0; i < static_cast<Index>(n); ++i) {
    for (Index k = 0; k < d; ++k) data(i, k) = rng.normal();
    const double t = data.row(i).dot(w) / wn + rng.normal() / margin;
    labels[i] = t >= 0.0 ? 1.0 : -1.0;
  }
  return SigmoidClassification(std::move(data), std::move(labels), partition);
}

StreamingQuadratic generate_streaming(std::uint64_t seed, Index d, const BlockPartition& partition,
                                      double condition_number, double noise) {
  check_sizes(1, d, partition);
  if (!(condition_number >= 1.0)) throw std::invalid_argument("condition number must be >= 1");
  RngStream rng(seed, "streaming");
  Matrix A = spectrum_matrix(rng, d, condition_number, true);
  Vector b = normal_vector(rng, d);
  return StreamingQuadratic(std::move(A), std::move(b), noise, splitmix64(seed), partition);
}

// ---------------------------------------------------------------- Q matrices

SymmetricMatrix exact_Qj(const QuadraticFiniteSum& prob, Index j, const DiagonalMetric& metric,
                         QKind kind) {
  const auto& part = prob.partition();
  if (!(metric.partition() == part)) throw std::invalid_argument("metric partition differs");
  const Range r = part.range(j);
  const Vector scale = metric.block(j).cwiseInverse().cwiseSqrt();
  const Index d = prob.dim();
  if (kind == QKind::mean_function) {
    Matrix rows = scale.asDiagonal() * prob.mean_A().middleRows(r.offset, r.size);
    return SymmetricMatrix(Matrix(rows.transpose() * rows), 1e-9);
  }
  Matrix q = Matrix::Zero(d, d);
  for (const Matrix& a : prob.A()) {
    Matrix rows = scale.asDiagonal() * a.middleRows(r.offset, r.size);
    q.noalias() += rows.transpose() * rows;
  }
  q /= static_cast<double>(prob.n());
  return SymmetricMatrix(q, 1e-9);
}

SymmetricMatrix exact_Qj(const StreamingQuadratic& prob, Index j, const DiagonalMetric& metric) {
  const Range r = prob.partition().range(j);
  const Vector scale = metric.block(j).cwiseInverse().cwiseSqrt();
  Matrix rows = scale.asDiagonal() * prob.A().middleRows(r.offset, r.size);
  return SymmetricMatrix(Matrix(rows.transpose() * rows), 1e-9);
}

std::vector<SymmetricMatrix> exact_Q_list(const QuadraticFiniteSum& prob,
                                          const DiagonalMetric& metric, QKind kind) {
  std::vector<SymmetricMatrix> out;
  for (Index j = 0; j < prob.partition().num_blocks(); ++j)
    out.push_back(exact_Qj(prob, j, metric, kind));
  return out;
}

std::vector<SymmetricMatrix> exact_Q_list(const StreamingQuadratic& prob,
                                          const DiagonalMetric& metric) {
  std::vector<SymmetricMatrix> out;
  for (Index j = 0; j < prob.partition().num_blocks(); ++j) out.push_back(exact_Qj(prob, j, metric));
  return out;
}

DiagonalMetric quadratic_block_metric(const QuadraticFiniteSum& prob) {
  const auto& part = prob.partition();
  std::vector<double> scalars;
  for (Index j = 0; j < part.num_blocks(); ++j) {
    double acc = 0.0;
    for (const Matrix& a : prob.A()) acc += block_spectral_norm(a, part.range(j));
    scalars.push_back(acc / static_cast<double>(prob.n()));
  }
  return metric_from_scalars(std::move(scalars), part);
}

DiagonalMetric quadratic_block_metric(const StreamingQuadratic& prob) {
  const auto& part = prob.partition();
  std::vector<double> scalars;
  for (Index j = 0; j < part.num_blocks(); ++j)
    scalars.push_back(block_spectral_norm(prob.A(), part.range(j)));
  return metric_from_scalars(std::move(scalars), part);
}

double pl_constant(const Matrix& mean_A, const DiagonalMetric& metric) {
  const Vector s = metric.diag().cwiseInverse().cwiseSqrt();
  Matrix scaled = s.asDiagonal() * mean_A * s.asDiagonal();
  scaled = 0.5 * (scaled + scaled.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(scaled, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// ---------------------------------------------------------------- variance

double estimate_sigma_sq(const Objective& prob, const DiagonalMetric& metric,
                         const std::vector<Vector>& probes) {
  auto n = prob.num_components();
  if (!n)
    throw std::invalid_argument(
        "exact variance needs a finite sum; use estimate_sigma_sq_sampled for streaming");
  double best = 0.0;
  for (const Vector& x : probes) {
    const Vector g = prob.full_grad(x);
    double acc = 0.0;
    for (ComponentId i = 0; i < *n; ++i)
      acc += metric_norm_sq(prob.component_grad(i, x) - g, metric, true);
    best = std::max(best, acc / static_cast<double>(*n));
  }
  return best;
}

double estimate_sigma_sq_sampled(const Objective& prob, const DiagonalMetric& metric,
                                 const std::vector<Vector>& probes, std::uint64_t seed,
                                 std::uint64_t samples) {
  if (samples < 1) throw std::invalid_argument("need at least one sample");
  RngStream rng(seed, "sigma");
  auto n = prob.num_components();
  double best = 0.0;
  for (const Vector& x : probes) {
    const Vector g = prob.full_grad(x);
    double acc = 0.0;
    for (std::uint64_t s = 0; s < samples; ++s) {
      const ComponentId i = n ? rng.uniform_index(*n) : rng.next();
      acc += metric_norm_sq(prob.component_grad(i, x) - g, metric, true);
    }
    best = std::max(best, acc / static_cast<double>(samples));
  }
  return best;
}

double composite_value(const Objective& prob, const Regularizer& reg, const Vector& x) {
  const double r = reg.value(x);
  if (std::isinf(r)) return r;
  return prob.value(x) + r;
}

// ---------------------------------------------------------------- text format

namespace {

void put(std::ostream& os, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  os.write(buf, res.ptr - buf);
}

void put_row(std::ostream& os, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  for (Index k = 0; k < row.size(); ++k) {
    if (k) os << ' ';
    put(os, row[k]);
  }
  os << '\n';
}

void put_header(std::ostream& os, const char* family, std::size_t n, const BlockPartition& p) {
  os << family << ' ' << n << ' ' << p.dim() << ' ' << p.num_blocks() << '\n';
  for (Index j = 0; j < p.num_blocks(); ++j) os << (j ? " " : "") << p.size(j);
  os << '\n';
}

double get(std::istream& is) {
  std::string tok;
  if (!(is >> tok)) throw Error("instance file ended early");
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw Error("bad number in instance file: '" + tok + "'");
  return v;
}

}  // namespace

void write_instance(std::ostream& os, const QuadraticFiniteSum& prob) {
  put_header(os, "quadratic", prob.n(), prob.partition());
  for (std::size_t i = 0; i < prob.n(); ++i) {
    for (Index r = 0; r < prob.dim(); ++r) put_row(os, prob.A()[i].row(r));
    put_row(os, prob.b()[i].transpose());
    put(os, prob.c()[i]);
    os << '\n';
  }
}

void write_instance(std::ostream& os, const SigmoidClassification& prob) {
  put_header(os, "sigmoid", static_cast<std::size_t>(prob.data().rows()), prob.partition());
  for (Index i = 0; i < prob.data().rows(); ++i) put_row(os, prob.data().row(i));
  put_row(os, prob.labels().transpose());
}

std::unique_ptr<Objective> read_instance(std::istream& is) {
  std::string family;
  long long n = 0, d = 0, m = 0;
  if (!(is >> family >> n >> d >> m)) throw Error("instance header must be '<family> n d m'");
  if (n < 1 || d < 1 || m < 1 || m > d) throw Error("instance header has invalid sizes");
  std::vector<Index> sizes(static_cast<std::size_t>(m));
  for (auto& s : sizes)
    if (!(is >> s)) throw Error("instance file: missing block sizes");
  BlockPartition part(sizes);
  if (part.dim() != d) throw Error("instance block sizes do not sum to d");
  if (family == "quadratic") {
    std::vector<Matrix> A;
    std::vector<Vector> b;
    std::vector<double> c;
    bool indefinite = false;
    for (long long i = 0; i < n; ++i) {
      Matrix a(d, d);
      for (Index r = 0; r < d; ++r)
        for (Index k = 0; k < d; ++k) a(r, k) = get(is);
      Vector bi(d);
      for (Index k = 0; k < d; ++k) bi[k] = get(is);
      c.push_back(get(is));
      Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
      indefinite = indefinite || es.eigenvalues().minCoeff() < 0.0;
      A.push_back(std::move(a));
      b.push_back(std::move(bi));
    }
    return std::make_unique<QuadraticFiniteSum>(std::move(A), std::move(b), std::move(c), part,
                                                indefinite);
  }
  if (family == "sigmoid") {
    Matrix data(n, d);
    for (Index i = 0; i < n; ++i)
      for (Index k = 0; k < d; ++k) data(i, k) = get(is);
    Vector labels(n);
    for (Index i = 0; i < n; ++i) labels[i] = get(is);
    return std::make_unique<SigmoidClassification>(std::move(data), std::move(labels), part);
  }
  throw Error("unknown instance family '" + family + "'");
}

}  // namespace bcd
