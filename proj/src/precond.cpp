#include "vptpd/precond.hpp"

#include <algorithm>
#include <sstream>

#include "vptpd/errors.hpp"
#include "vptpd/prox.hpp"

namespace vptpd {

double default_iu_floor(const ActionParams& params, const GridSpec& g)
{
  return std::max(params.r, 1e-8) * g.cell_volume();
}

DiagOperator build_Iu(const Vector& u_prev, const Mobility<double>& mob, const EnergyModel& model,
                      const ActionParams& params, const GridSpec& g, double floor)
{
  check_shape(u_prev.size() == g.unknowns(), "build_Iu: state size must be N(1+d)");
  if (floor <= 0) { floor = default_iu_floor(params, g); }
  const Index n = g.size();
  const auto rho = rho_block(u_prev, g);
  const auto m = flux_block(u_prev, g);

  // Fractional-power mobilities have unbounded M' at their endpoints; the
  // Hessian is taken a small offset inside instead.
  const auto [lo, hi] = mob.bounds();
  const double inset = mob.regular_at_bounds() ? 0.0 : default_delta_off(mob);

  const ScalarField energy_diag = energy_hess_diag(model, project_to_energy_domain(model, rho), g);
  DiagOperator iu{Vector(g.unknowns())};
  for (Index c = 0; c < n; ++c) {
    const double r = std::clamp(rho[c], lo + inset, hi - inset);
    const auto h = action_hess_cell(r, m.row(c).squaredNorm(), mob, params.tau, params.r, g.cell_volume());
    iu.entries[c] = std::max(h.h_rho + energy_diag[c], floor);
    for (int j = 0; j < g.dim(); ++j) { iu.entries[(j + 1) * n + c] = std::max(h.h_m, floor); }
  }
  return iu;
}

DualPreconditioner::DualPreconditioner(ColMatrix matrix, const DualSolverOptions& opts)
  : matrix_(std::move(matrix))
  , opts_(opts)
{
  factorize();
}

DualPreconditioner::DualPreconditioner(const SparseMatrix& B, const DiagOperator& Iu, const DualSolverOptions& opts)
  : opts_(opts)
{
  check_shape(B.cols() == Iu.size(), "build_Ip: B and I_u disagree on size");
  if ((Iu.entries.array() <= 0).any()) { throw DomainError("build_Ip: I_u must be positive"); }
  const ColMatrix Bc = B;
  const Vector inv = Iu.entries.cwiseInverse();
  ColMatrix scaled = Bc * inv.asDiagonal();
  matrix_ = scaled * Bc.transpose();
  matrix_.makeCompressed();
  factorize();
}

DualPreconditioner DualPreconditioner::scaled_gram(const SparseMatrix& B, double scale, const DualSolverOptions& opts)
{
  if (!(scale > 0)) { throw DomainError("scaled_gram: scale must be positive"); }
  const ColMatrix Bc = B;
  ColMatrix m = scale * (Bc * Bc.transpose());
  m.makeCompressed();
  return DualPreconditioner(std::move(m), opts);
}

void DualPreconditioner::factorize()
{
  mode_ = opts_.force_cg || matrix_.rows() > opts_.direct_threshold ? DualSolverMode::ConjugateGradient
                                                                      : DualSolverMode::Cholesky;
  if (mode_ == DualSolverMode::Cholesky) {
    chol_ = std::make_shared<Cholesky>();
    chol_->compute(matrix_);
    ++factorizations_;
    if (chol_->info() == Eigen::Success) { return; }
    chol_.reset();
    warning_ = "sparse Cholesky factorization of I_p failed; falling back to preconditioned CG";
    mode_ = DualSolverMode::ConjugateGradient;
  }
  cg_ = std::make_shared<CG>();
  cg_->setTolerance(opts_.rtol);
  cg_->setMaxIterations(opts_.cg_max_iter);
  cg_->compute(matrix_);
  ++factorizations_;
  if (cg_->info() != Eigen::Success) { throw ConvergenceError("incomplete Cholesky of I_p failed"); }
}

ScalarField DualPreconditioner::solve(const ScalarField& rhs) const
{
  check_shape(rhs.size() == matrix_.rows(), "solve_Ip: rhs length must equal N");
  ++*solves_;
  if (rhs.isZero(0.0)) { return ScalarField::Zero(rhs.size()); }
  if (mode_ == DualSolverMode::Cholesky) { return chol_->solve(rhs); }
  ScalarField x = cg_->solve(rhs);
  if (cg_->info() != Eigen::Success) {
    std::ostringstream os;
    os << "solve_Ip: CG did not reach rtol " << opts_.rtol << " in " << cg_->iterations()
       << " iterations (relative residual " << cg_->error() << ")";
    throw ConvergenceError(os.str());
  }
  return x;
}

} // namespace vptpd
