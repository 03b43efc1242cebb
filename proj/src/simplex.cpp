#include "gridforge/simplex.hpp"

#include <algorithm>
#include <cmath>

namespace gridforge::opf {

namespace {

constexpr double kTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kPhase1Tol = 1e-7;
constexpr int kStallLimit = 100;  // non-improving pivots before Bland pricing

enum Stat : signed char { at_lower, at_upper, basic, free_zero };

}  // namespace

LpResult solve_lp(const LpProblem& lp, int max_iterations) {
    const int m = static_cast<int>(lp.A.rows());
    const int n = static_cast<int>(lp.A.cols());
    const int total = n + m;  // structural + artificial

    LpResult res;
    for (int j = 0; j < n; ++j) {
        if (lp.lo[j] > lp.hi[j] + kTol) return res;  // infeasible box
    }

    // bounds and costs over the extended variable set
    Eigen::VectorXd lo(total), hi(total), cost(total);
    for (int j = 0; j < n; ++j) {
        lo[j] = lp.lo[j];
        hi[j] = lp.hi[j];
    }
    for (int j = n; j < total; ++j) {
        lo[j] = 0;
        hi[j] = kLpInf;
    }

    // start: structural at a finite bound (or 0 when free), artificials basic
    std::vector<signed char> stat(total);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(total);
    for (int j = 0; j < n; ++j) {
        if (std::isfinite(lo[j])) {
            x[j] = lo[j];
            stat[j] = at_lower;
        } else if (std::isfinite(hi[j])) {
            x[j] = hi[j];
            stat[j] = at_upper;
        } else {
            x[j] = 0;
            stat[j] = free_zero;
        }
    }

    Eigen::VectorXd resid = lp.b - lp.A * x.head(n);
    Eigen::VectorXd art_sign(m);
    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) {
        art_sign[i] = resid[i] < 0 ? -1.0 : 1.0;
        basis[i] = n + i;
        stat[n + i] = basic;
        x[n + i] = std::abs(resid[i]);
    }

    auto column = [&](int j, Eigen::VectorXd& out) {
        if (j < n) {
            out = lp.A.col(j);
        } else {
            out.setZero(m);
            out[j - n] = art_sign[j - n];
        }
    };

    int phase = 1;
    for (int j = 0; j < total; ++j) cost[j] = j < n ? 0.0 : 1.0;

    int iterations = 0;
    int stall = 0;
    bool bland = false;
    double last_obj = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd B(m, m);
    Eigen::VectorXd col(m), w(m), y(m), cb(m);

    while (true) {
        if (iterations >= max_iterations) {
            res.status = LpStatus::iteration_limit;
            res.iterations = iterations;
            return res;
        }

        for (int i = 0; i < m; ++i) {
            column(basis[i], col);
            B.col(i) = col;
            cb[i] = cost[basis[i]];
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
        y = lu.transpose().solve(cb);

        // pricing
        int enter = -1;
        double best_score = kTol;
        int dir = 0;  // +1 entering increases, -1 decreases
        for (int j = 0; j < total; ++j) {
            if (stat[j] == basic) continue;
            if (hi[j] - lo[j] <= kTol && stat[j] != free_zero) continue;  // fixed
            column(j, col);
            const double d = cost[j] - y.dot(col);
            double score = 0;
            int cand_dir = 0;
            if (stat[j] == at_lower && d < -kTol) {
                score = -d;
                cand_dir = 1;
            } else if (stat[j] == at_upper && d > kTol) {
                score = d;
                cand_dir = -1;
            } else if (stat[j] == free_zero && std::abs(d) > kTol) {
                score = std::abs(d);
                cand_dir = d < 0 ? 1 : -1;
            }
            if (cand_dir == 0) continue;
            if (bland) {  // first eligible index
                enter = j;
                dir = cand_dir;
                break;
            }
            if (score > best_score) {
                best_score = score;
                enter = j;
                dir = cand_dir;
            }
        }

        if (enter < 0) {
            // optimal for the current phase
            double obj = 0;
            for (int j = 0; j < total; ++j) obj += cost[j] * x[j];
            if (phase == 1) {
                if (obj > kPhase1Tol) {
                    res.status = LpStatus::infeasible;
                    res.iterations = iterations;
                    return res;
                }
                // pin artificials to zero and switch to the real objective
                for (int j = n; j < total; ++j) {
                    hi[j] = 0;
                    x[j] = std::min(x[j], 0.0);
                }
                for (int j = 0; j < total; ++j) cost[j] = j < n ? lp.c[j] : 0.0;
                phase = 2;
                stall = 0;
                bland = false;
                last_obj = std::numeric_limits<double>::infinity();
                continue;
            }
            res.status = LpStatus::optimal;
            res.x = x.head(n);
            res.objective = lp.c.dot(res.x);
            res.iterations = iterations;
            return res;
        }

        column(enter, col);
        w = lu.solve(col);

        // ratio test: basics hitting a bound, or the entering variable flipping
        double t = hi[enter] - lo[enter];  // own range (inf for free/one-sided)
        if (stat[enter] == free_zero) t = kLpInf;
        int leave_pos = -1;
        double leave_bound = 0;
        for (int i = 0; i < m; ++i) {
            const double step = w[i] * dir;  // basic i moves by -step * t
            double ratio;
            double bound;
            if (step > kPivotTol && std::isfinite(lo[basis[i]])) {
                ratio = std::max(x[basis[i]] - lo[basis[i]], 0.0) / step;
                bound = lo[basis[i]];
            } else if (step < -kPivotTol && std::isfinite(hi[basis[i]])) {
                ratio = std::max(hi[basis[i]] - x[basis[i]], 0.0) / (-step);
                bound = hi[basis[i]];
            } else {
                continue;
            }
            if (ratio < t - kTol) {  // first minimum wins ties, deterministic
                t = ratio;
                leave_pos = i;
                leave_bound = bound;
            }
        }

        if (!std::isfinite(t)) {
            res.status = phase == 1 ? LpStatus::infeasible : LpStatus::unbounded;
            res.iterations = iterations;
            return res;
        }

        // apply the step
        x[enter] += dir * t;
        for (int i = 0; i < m; ++i) x[basis[i]] -= w[i] * dir * t;

        if (leave_pos < 0) {
            // bound flip, basis unchanged
            stat[enter] = dir > 0 ? at_upper : at_lower;
            x[enter] = dir > 0 ? hi[enter] : lo[enter];
        } else {
            const int leaving = basis[leave_pos];
            x[leaving] = leave_bound;
            stat[leaving] =
                leave_bound == hi[leaving] && hi[leaving] != lo[leaving] ? at_upper : at_lower;
            basis[leave_pos] = enter;
            stat[enter] = basic;
        }

        ++iterations;
        double obj = 0;
        for (int j = 0; j < total; ++j) obj += cost[j] * x[j];
        if (obj < last_obj - 1e-12) {
            last_obj = obj;
            stall = 0;
        } else if (++stall >= kStallLimit) {
            bland = true;
        }
    }
}

}  // namespace gridforge::opf
