#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

namespace gridforge::opf {

// minimize c.x subject to A x = b, lo <= x <= hi. Bounds may be +/-infinity.
struct LpProblem {
    Eigen::VectorXd c;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd lo, hi;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    Eigen::VectorXd x;
    double objective = 0;
    int iterations = 0;
};

// Dense two-phase primal simplex with bounded variables. Dantzig pricing with
// a Bland fallback after stalling, so runs are deterministic and finite.
LpResult solve_lp(const LpProblem& lp, int max_iterations = 20000);

inline constexpr double kLpInf = std::numeric_limits<double>::infinity();

}  // namespace gridforge::opf
