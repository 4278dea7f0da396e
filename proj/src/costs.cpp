#include "ranrc/costs.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "ranrc/rng.hpp"

namespace ranrc {

namespace {

// log(1 + exp(-m)) without overflow for large |m|.
double softplus_neg(double m) {
  return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

// sigma(-m) = 1 / (1 + exp(m)).
double sigmoid_neg(double m) {
  if (m >= 0.0) {
    const double e = std::exp(-m);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(m));
}

}  // namespace

void CostModel::check_dimension(const Eigen::VectorXd& x) const {
  if (x.size() != dimension())
    throw std::invalid_argument("CostModel: x has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(dimension()));
}

QuadraticCost::QuadraticCost(Eigen::MatrixXd a, Eigen::VectorXd b, double c0)
    : a_(std::move(a)), b_(std::move(b)), c0_(c0) {
  if (a_.rows() != a_.cols() || a_.rows() != b_.size())
    throw std::invalid_argument("QuadraticCost: A must be square and match b");
  if (!a_.isApprox(a_.transpose()))
    throw std::invalid_argument("QuadraticCost: A must be symmetric");
}

QuadraticCost QuadraticCost::centered(Eigen::MatrixXd a, const Eigen::VectorXd& center) {
  Eigen::VectorXd b = a * center;
  const double c0 = 0.5 * center.dot(b);
  return QuadraticCost(std::move(a), std::move(b), c0);
}

double QuadraticCost::eval(const Eigen::VectorXd& x) const {
  check_dimension(x);
  return 0.5 * x.dot(a_ * x) - b_.dot(x) + c0_;
}

Eigen::VectorXd QuadraticCost::gradient(const Eigen::VectorXd& x) const {
  check_dimension(x);
  return a_ * x - b_;
}

Eigen::MatrixXd QuadraticCost::hessian(const Eigen::VectorXd& x) const {
  check_dimension(x);
  return a_;
}

BinomialDevianceCost::BinomialDevianceCost(Eigen::MatrixXd features, Eigen::VectorXd labels,
                                           double gamma)
    : features_(std::move(features)), labels_(std::move(labels)), gamma_(gamma) {
  if (features_.rows() != labels_.size())
    throw std::invalid_argument("BinomialDevianceCost: feature/label row counts differ");
  for (long j = 0; j < labels_.size(); ++j)
    if (labels_[j] != 1.0 && labels_[j] != -1.0)
      throw std::invalid_argument("BinomialDevianceCost: labels must be -1 or +1");
  if (gamma_ < 0.0) throw std::invalid_argument("BinomialDevianceCost: gamma must be >= 0");
}

Eigen::VectorXd BinomialDevianceCost::margins(const Eigen::VectorXd& x) const {
  const long p = features_.cols();
  Eigen::VectorXd m = features_ * x.head(p);
  m.array() += x[p];
  return m.cwiseProduct(labels_);
}

double BinomialDevianceCost::eval(const Eigen::VectorXd& x) const {
  check_dimension(x);
  const Eigen::VectorXd m = margins(x);
  double total = 0.0;
  for (long j = 0; j < m.size(); ++j) total += softplus_neg(m[j]);
  return total + gamma_ * x.head(features_.cols()).squaredNorm();
}

Eigen::VectorXd BinomialDevianceCost::gradient(const Eigen::VectorXd& x) const {
  check_dimension(x);
  const long p = features_.cols();
  const Eigen::VectorXd m = margins(x);
  // d/dx softplus_neg(m_j) = -sigma(-m_j) y_j w_j with w_j = (chi_j, 1)
  Eigen::VectorXd coeff(m.size());
  for (long j = 0; j < m.size(); ++j) coeff[j] = -sigmoid_neg(m[j]) * labels_[j];
  Eigen::VectorXd grad(dimension());
  grad.head(p) = features_.transpose() * coeff + 2.0 * gamma_ * x.head(p);
  grad[p] = coeff.sum();
  return grad;
}

Eigen::MatrixXd BinomialDevianceCost::hessian(const Eigen::VectorXd& x) const {
  check_dimension(x);
  const long p = features_.cols();
  const Eigen::VectorXd m = margins(x);
  Eigen::VectorXd w(m.size());
  for (long j = 0; j < m.size(); ++j) {
    const double s = sigmoid_neg(m[j]);
    w[j] = s * (1.0 - s);
  }
  Eigen::MatrixXd hess(dimension(), dimension());
  const Eigen::MatrixXd weighted = features_.transpose() * w.asDiagonal();
  hess.topLeftCorner(p, p) = weighted * features_;
  hess.topLeftCorner(p, p).diagonal().array() += 2.0 * gamma_;
  hess.block(0, p, p, 1) = weighted.rowwise().sum();
  hess.block(p, 0, 1, p) = hess.block(0, p, p, 1).transpose();
  hess(p, p) = w.sum();
  return hess;
}

Eigen::MatrixXd local_h(const CostModel& model, const Eigen::VectorXd& x, DescentVariant variant) {
  switch (variant) {
    case DescentVariant::NewtonRaphson:
      return model.hessian(x);
    case DescentVariant::Jacobi:
      return model.hessian(x).diagonal().asDiagonal();
    case DescentVariant::Gradient:
      return Eigen::MatrixXd::Identity(model.dimension(), model.dimension());
  }
  throw std::logic_error("local_h: unknown variant");
}

Eigen::VectorXd local_g(const CostModel& model, const Eigen::VectorXd& x, DescentVariant variant) {
  return local_h(model, x, variant) * x - model.gradient(x);
}

DerivativeReport check_derivatives(const CostModel& model, const Eigen::VectorXd& x, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("check_derivatives: step must be > 0");
  const int n = model.dimension();
  const Eigen::VectorXd grad = model.gradient(x);
  const Eigen::MatrixXd hess = model.hessian(x);

  Eigen::VectorXd grad_fd(n);
  Eigen::MatrixXd hess_fd(n, n);
  Eigen::VectorXd xp = x, xm = x;
  for (int t = 0; t < n; ++t) {
    xp[t] += step;
    xm[t] -= step;
    grad_fd[t] = (model.eval(xp) - model.eval(xm)) / (2.0 * step);
    hess_fd.col(t) = (model.gradient(xp) - model.gradient(xm)) / (2.0 * step);
    xp[t] = x[t];
    xm[t] = x[t];
  }

  DerivativeReport report;
  report.max_grad_err =
      (grad - grad_fd).cwiseAbs().maxCoeff() / (1.0 + grad.cwiseAbs().maxCoeff());
  report.max_hess_err =
      (hess - hess_fd).cwiseAbs().maxCoeff() / (1.0 + hess.cwiseAbs().maxCoeff());
  return report;
}

std::vector<std::shared_ptr<const CostModel>> make_random_quadratics(int count, int dim,
                                                                     double cond_max,
                                                                     std::uint64_t seed) {
  if (count < 1 || dim < 1) throw std::invalid_argument("make_random_quadratics: bad sizes");
  if (cond_max < 1.0) throw std::invalid_argument("make_random_quadratics: cond_max must be >= 1");
  Rng rng(seed);
  std::vector<std::shared_ptr<const CostModel>> models;
  models.reserve(count);
  for (int i = 0; i < count; ++i) {
    // Eigenvalues log-uniform in [1, cond_max] cap the condition number; a
    // random orthogonal basis comes from the QR factor of a Gaussian matrix.
    Eigen::MatrixXd gauss(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) gauss(r, c) = rng.normal();
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ();
    Eigen::VectorXd eig(dim);
    for (int t = 0; t < dim; ++t) eig[t] = std::exp(rng.uniform() * std::log(cond_max));
    const Eigen::MatrixXd a = q * eig.asDiagonal() * q.transpose();
    Eigen::VectorXd center(dim);
    for (int t = 0; t < dim; ++t) center[t] = rng.normal();
    models.push_back(std::make_shared<QuadraticCost>(
        QuadraticCost::centered(0.5 * (a + a.transpose()), center)));
  }
  return models;
}

}  // namespace ranrc
