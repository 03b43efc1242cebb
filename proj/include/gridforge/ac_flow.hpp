#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gridforge/per_unit.hpp"

namespace gridforge::opf::acflow {

// Values and derivatives of the four series branch flows with respect to the
// local variables, ordered [th_i, th_k, v_i, v_k]. Function order: pf, qf,
// pt, qt (pf/qf measured at the from bus flowing toward to, pt/qt at the to
// bus flowing toward from).
struct Flow4 {
    double val[4] = {0, 0, 0, 0};
    double grad[4][4] = {};
    double hess[4][4][4] = {};  // filled when requested; symmetric in last two
};

void branch_flows(const PuBranch& br, double th_i, double th_k, double v_i, double v_k,
                  bool with_hess, Flow4& out);

// Net injections the network draws from each bus: P_i = sum of outgoing series
// flows, Q_i = sum of outgoing series flows - bs_i v_i^2 (bus shunt plus lumped
// line charging). A feasible point satisfies P_i = Pg_i - Pd_i etc.
void bus_injections(const PuNetwork& net, const Eigen::VectorXd& va, const Eigen::VectorXd& vm,
                    Eigen::VectorXd& p, Eigen::VectorXd& q);

// Analytic Jacobian of [P; Q] with respect to [va; vm], size 2n x 2n.
Eigen::SparseMatrix<double> injection_jacobian(const PuNetwork& net, const Eigen::VectorXd& va,
                                               const Eigen::VectorXd& vm);

// Effective shunt at each bus: explicit bs plus half the charging susceptance
// of every incident branch.
Eigen::VectorXd lumped_shunts(const PuNetwork& net);

}  // namespace gridforge::opf::acflow
