#include "vptpd/action.hpp"

namespace vptpd {

double action_total(const Vector& u, const Mobility<double>& mob, const GridSpec& g)
{
  check_shape(u.size() == g.unknowns(), "action_total: state size must be N(1+d)");
  const auto rho = rho_block(u, g);
  const auto m = flux_block(u, g);
  double acc = 0;
  for (Index c = 0; c < g.size(); ++c) { acc += phi(rho[c], m.row(c).squaredNorm(), mob); }
  return acc * g.cell_volume();
}

ActionHessDiag action_hess_diag(const Vector& u, const Mobility<double>& mob, const ActionParams& params,
                                const GridSpec& g)
{
  check_shape(u.size() == g.unknowns(), "action_hess_diag: state size must be N(1+d)");
  const auto rho = rho_block(u, g);
  const auto m = flux_block(u, g);
  ActionHessDiag out{ScalarField(g.size()), FluxField(g.size(), g.dim())};
  for (Index c = 0; c < g.size(); ++c) {
    const auto h = action_hess_cell(rho[c], m.row(c).squaredNorm(), mob, params.tau, params.r, g.cell_volume());
    out.h_rho[c] = h.h_rho;
    out.h_m.row(c).setConstant(h.h_m);
  }
  return out;
}

} // namespace vptpd
