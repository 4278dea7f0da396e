#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <vector>

namespace ranrc {

/// Which Hessian surrogate drives the descent. Jacobi keeps only the diagonal
/// of the Hessian; Gradient replaces it with the identity. Both trade
/// convergence speed for communication (scalars instead of full matrices).
enum class DescentVariant { NewtonRaphson, Jacobi, Gradient };

/// A node's local cost term. Immutable and reentrant; hessian() must be
/// symmetric everywhere.
class CostModel {
 public:
  virtual ~CostModel() = default;

  virtual int dimension() const = 0;
  virtual double eval(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const = 0;

 protected:
  void check_dimension(const Eigen::VectorXd& x) const;
};

/// f(x) = 1/2 x'Ax - b'x + c0 with A symmetric positive definite.
class QuadraticCost final : public CostModel {
 public:
  QuadraticCost(Eigen::MatrixXd a, Eigen::VectorXd b, double c0 = 0.0);

  /// 1/2 (x-center)'A(x-center): zero at its minimizer `center`.
  static QuadraticCost centered(Eigen::MatrixXd a, const Eigen::VectorXd& center);

  int dimension() const override { return static_cast<int>(b_.size()); }
  double eval(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const override;

  const Eigen::MatrixXd& a() const { return a_; }
  const Eigen::VectorXd& b() const { return b_; }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  double c0_;
};

/// Binomial-deviance (logistic) loss over a local email subset:
///   f(x) = sum_j log(1 + exp(-y_j (chi_j' x' + x0))) + gamma ||x'||^2
/// with x = (x', x0), the intercept x0 stored last and excluded from the
/// regularizer. Labels must be in {-1, +1}.
class BinomialDevianceCost final : public CostModel {
 public:
  BinomialDevianceCost(Eigen::MatrixXd features, Eigen::VectorXd labels, double gamma);

  int dimension() const override { return static_cast<int>(features_.cols()) + 1; }
  double eval(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const override;

  long email_count() const { return features_.rows(); }
  double gamma() const { return gamma_; }

 private:
  // margins(x)[j] = y_j (chi_j' x' + x0)
  Eigen::VectorXd margins(const Eigen::VectorXd& x) const;

  Eigen::MatrixXd features_;
  Eigen::VectorXd labels_;
  double gamma_;
};

/// h_i for the chosen variant: full Hessian, its diagonal, or the identity.
Eigen::MatrixXd local_h(const CostModel& model, const Eigen::VectorXd& x,
                        DescentVariant variant = DescentVariant::NewtonRaphson);

/// g_i = h_i x - grad f_i(x), with h_i the same surrogate local_h returns, so
/// the (g, h) pair stays consistent across variants.
Eigen::VectorXd local_g(const CostModel& model, const Eigen::VectorXd& x,
                        DescentVariant variant = DescentVariant::NewtonRaphson);

struct DerivativeReport {
  double max_grad_err = 0.0;  // relative, against central differences of eval
  double max_hess_err = 0.0;  // relative, against central differences of gradient
};

/// Central-difference self-check of gradient() and hessian() at x.
/// Errors are max-norm differences scaled by 1/(1 + max-norm of the analytic value).
DerivativeReport check_derivatives(const CostModel& model, const Eigen::VectorXd& x, double step);

/// N random SPD quadratics of the given dimension with condition number at
/// most cond_max and standard-normal minimizers. Deterministic given seed.
std::vector<std::shared_ptr<const CostModel>> make_random_quadratics(int count, int dim,
                                                                     double cond_max,
                                                                     std::uint64_t seed);

}  // namespace ranrc
