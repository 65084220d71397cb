#pragma once

#include <atomic>
#include <memory>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "vptpd/action.hpp"
#include "vptpd/energy.hpp"
#include "vptpd/grid.hpp"
#include "vptpd/mobility.hpp"

namespace vptpd {

/// Positive diagonal operator in the stacked (rho, m_1..m_d) layout.
struct DiagOperator
{
  Vector entries;

  Index size() const { return entries.size(); }
  Vector apply(const Vector& x) const { return entries.cwiseProduct(x); }
  Vector apply_inverse(const Vector& x) const { return x.cwiseQuotient(entries); }
};

/// Floor applied to every I_u entry: max(r, 1e-8) dV.
double default_iu_floor(const ActionParams& params, const GridSpec& g);

/// I_u = diag of the Hessian of (1/2tau) sum phi_hat dV + J_h at the previous JKO solution,
/// floored at `floor` (<= 0 picks default_iu_floor).
DiagOperator build_Iu(const Vector& u_prev, const Mobility<double>& mob, const EnergyModel& model,
                      const ActionParams& params, const GridSpec& g, double floor = -1);

enum class DualSolverMode
{
  Cholesky,
  ConjugateGradient,
};

struct DualSolverOptions
{
  Index direct_threshold = 200000;
  double rtol = 1e-10;
  int cg_max_iter = 10000;
  bool force_cg = false;
};

/// Owns I_p = B diag(Iu)^-1 B^T and its factorization; build once per JKO step.
class DualPreconditioner
{
public:
  using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

  DualPreconditioner(const SparseMatrix& B, const DiagOperator& Iu, const DualSolverOptions& opts = {});
  /// I_p = scale * B B^T (constant preconditioner of the primal-dual baseline).
  static DualPreconditioner scaled_gram(const SparseMatrix& B, double scale, const DualSolverOptions& opts = {});

  ScalarField solve(const ScalarField& rhs) const;

  const ColMatrix& matrix() const { return matrix_; }
  DualSolverMode mode() const { return mode_; }
  /// Number of numeric factorizations performed (one per construction).
  int factorizations() const { return factorizations_; }
  long solves() const { return *solves_; }
  const std::string& warning() const { return warning_; }

private:
  DualPreconditioner(ColMatrix matrix, const DualSolverOptions& opts);
  void factorize();

  using Cholesky = Eigen::SimplicialLDLT<ColMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;
  using CG = Eigen::ConjugateGradient<ColMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>>;

  ColMatrix matrix_;
  DualSolverOptions opts_;
  DualSolverMode mode_ = DualSolverMode::Cholesky;
  std::shared_ptr<Cholesky> chol_;
  std::shared_ptr<CG> cg_;
  int factorizations_ = 0;
  std::shared_ptr<std::atomic<long>> solves_ = std::make_shared<std::atomic<long>>(0);
  std::string warning_;
};

} // namespace vptpd
