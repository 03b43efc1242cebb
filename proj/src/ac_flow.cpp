#include "gridforge/ac_flow.hpp"

#include <cmath>
#include <vector>

namespace gridforge::opf::acflow {

namespace {

// Each series flow has the shape k1 v1^2 + k2 v2^2 + v1 v2 phi(theta) with
// phi a sin/cos combination, so phi'' = -phi.
struct FlowShape {
    double k1, k2, phi, dphi;
};

}  // namespace

void branch_flows(const PuBranch& br, double th_i, double th_k, double v_i, double v_k,
                  bool with_hess, Flow4& out) {
    const double denom = br.r * br.r + br.x * br.x;
    const double g = br.r / denom;
    const double b = -br.x / denom;
    const double th = th_i - th_k;
    const double c = std::cos(th);
    const double s = std::sin(th);

    const FlowShape shapes[4] = {
        {g, 0.0, -(g * c + b * s), g * s - b * c},   // pf
        {-b, 0.0, -(g * s - b * c), -(g * c + b * s)},  // qf
        {0.0, g, -(g * c - b * s), g * s + b * c},   // pt
        {0.0, -b, g * s + b * c, g * c - b * s},     // qt
    };

    for (int f = 0; f < 4; ++f) {
        const FlowShape& sh = shapes[f];
        out.val[f] = sh.k1 * v_i * v_i + sh.k2 * v_k * v_k + v_i * v_k * sh.phi;
        out.grad[f][0] = v_i * v_k * sh.dphi;
        out.grad[f][1] = -v_i * v_k * sh.dphi;
        out.grad[f][2] = 2 * sh.k1 * v_i + v_k * sh.phi;
        out.grad[f][3] = 2 * sh.k2 * v_k + v_i * sh.phi;
        if (!with_hess) continue;
        const double ddphi = -sh.phi;
        double (&h)[4][4] = out.hess[f];
        h[0][0] = v_i * v_k * ddphi;
        h[0][1] = h[1][0] = -v_i * v_k * ddphi;
        h[1][1] = v_i * v_k * ddphi;
        h[0][2] = h[2][0] = v_k * sh.dphi;
        h[0][3] = h[3][0] = v_i * sh.dphi;
        h[1][2] = h[2][1] = -v_k * sh.dphi;
        h[1][3] = h[3][1] = -v_i * sh.dphi;
        h[2][2] = 2 * sh.k1;
        h[3][3] = 2 * sh.k2;
        h[2][3] = h[3][2] = sh.phi;
    }
}

Eigen::VectorXd lumped_shunts(const PuNetwork& net) {
    Eigen::VectorXd bs(net.buses.size());
    for (size_t i = 0; i < net.buses.size(); ++i) bs[i] = net.buses[i].bs;
    for (const PuBranch& br : net.branches) {
        bs[br.from] += br.b / 2;
        bs[br.to] += br.b / 2;
    }
    return bs;
}

void bus_injections(const PuNetwork& net, const Eigen::VectorXd& va, const Eigen::VectorXd& vm,
                    Eigen::VectorXd& p, Eigen::VectorXd& q) {
    const int n = static_cast<int>(net.buses.size());
    p.setZero(n);
    q.setZero(n);
    Flow4 fl;
    for (const PuBranch& br : net.branches) {
        branch_flows(br, va[br.from], va[br.to], vm[br.from], vm[br.to], false, fl);
        p[br.from] += fl.val[0];
        q[br.from] += fl.val[1];
        p[br.to] += fl.val[2];
        q[br.to] += fl.val[3];
    }
    const Eigen::VectorXd bs = lumped_shunts(net);
    for (int i = 0; i < n; ++i) q[i] -= bs[i] * vm[i] * vm[i];
}

Eigen::SparseMatrix<double> injection_jacobian(const PuNetwork& net, const Eigen::VectorXd& va,
                                               const Eigen::VectorXd& vm) {
    const int n = static_cast<int>(net.buses.size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(net.branches.size() * 16 + n);
    Flow4 fl;
    for (const PuBranch& br : net.branches) {
        branch_flows(br, va[br.from], va[br.to], vm[br.from], vm[br.to], false, fl);
        const int rows[4] = {br.from, n + br.from, br.to, n + br.to};  // pf qf pt qt
        const int cols[4] = {br.from, br.to, n + br.from, n + br.to};  // th_i th_k v_i v_k
        for (int f = 0; f < 4; ++f)
            for (int v = 0; v < 4; ++v)
                if (fl.grad[f][v] != 0.0) trip.emplace_back(rows[f], cols[v], fl.grad[f][v]);
    }
    const Eigen::VectorXd bs = lumped_shunts(net);
    for (int i = 0; i < n; ++i)
        if (bs[i] != 0.0) trip.emplace_back(n + i, n + i, -2 * bs[i] * vm[i]);
    Eigen::SparseMatrix<double> jac(2 * n, 2 * n);
    jac.setFromTriplets(trip.begin(), trip.end());
    return jac;
}

}  // namespace gridforge::opf::acflow
