#include "cobf/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cobf/error.hpp"

namespace cobf {

namespace {

// Real coordinates of an N x N Hermitian matrix: N diagonal entries, then
// (Re, Im) of every a < b entry.
struct HermitianBasis {
    int n = 0;
    std::vector<std::pair<int, int>> pairs;

    explicit HermitianBasis(int size) : n(size)
    {
        for (int a = 0; a < n; ++a) {
            for (int b = a + 1; b < n; ++b) {
                pairs.emplace_back(a, b);
            }
        }
    }

    int dim() const { return n * n; }

    // tr(M E_p) for every basis element E_p
    void coefficients(const CMat& m, double* out) const
    {
        for (int a = 0; a < n; ++a) {
            out[a] = m(a, a).real();
        }
        int p = n;
        for (const auto& [a, b] : pairs) {
            out[p++] = 2.0 * m(a, b).real();
            out[p++] = 2.0 * m(a, b).imag();
        }
    }

    CMat matrix(const double* x) const
    {
        CMat w = CMat::Zero(n, n);
        for (int a = 0; a < n; ++a) {
            w(a, a) = x[a];
        }
        int p = n;
        for (const auto& [a, b] : pairs) {
            const cplx v(x[p], x[p + 1]);
            w(a, b) = v;
            w(b, a) = std::conj(v);
            p += 2;
        }
        return w;
    }

    void coordinates(const CMat& w, double* x) const
    {
        for (int a = 0; a < n; ++a) {
            x[a] = w(a, a).real();
        }
        int p = n;
        for (const auto& [a, b] : pairs) {
            x[p++] = w(a, b).real();
            x[p++] = w(a, b).imag();
        }
    }

    // V E_p V for Hermitian V
    CMat sandwich(const CMat& v, int p) const
    {
        if (p < n) {
            return v.col(p) * v.col(p).adjoint();
        }
        const auto& [a, b] = pairs[static_cast<std::size_t>((p - n) / 2)];
        const CMat ab = v.col(a) * v.col(b).adjoint();
        if ((p - n) % 2 == 0) {
            return ab + ab.adjoint();
        }
        const cplx i(0.0, 1.0);
        return i * ab - i * ab.adjoint();
    }
};

struct Barrier {
    const BlockSdpProblem& p;
    HermitianBasis basis;
    int nb;      // real coordinates per block
    int nvar;    // all blocks plus t
    RMat rows;   // row gradients in x (t excluded)

    explicit Barrier(const BlockSdpProblem& prob)
        : p(prob), basis(prob.block_size), nb(basis.dim()),
          nvar(prob.num_blocks * basis.dim() + 1)
    {
        rows = RMat::Zero(p.num_rows(), nvar - 1);
        std::vector<double> c(static_cast<std::size_t>(nb));
        for (int i = 0; i < p.num_rows(); ++i) {
            for (int k = 0; k < p.num_blocks; ++k) {
                basis.coefficients(p.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)],
                                   c.data());
                for (int q = 0; q < nb; ++q) {
                    rows(i, k * nb + q) = c[static_cast<std::size_t>(q)];
                }
            }
        }
    }

    CMat block(const RVec& z, int k) const { return basis.matrix(z.data() + k * nb); }

    double trace_slack(const RVec& z, int k) const
    {
        double tr = 0.0;
        for (int a = 0; a < p.block_size; ++a) {
            tr += z(k * nb + a);
        }
        return p.trace_cap[static_cast<std::size_t>(k)] - tr;
    }

    RVec row_slacks(const RVec& z) const
    {
        RVec s = rows * z.head(nvar - 1);
        for (int i = 0; i < p.num_rows(); ++i) {
            s(i) += p.b[static_cast<std::size_t>(i)] - z(nvar - 1);
        }
        return s;
    }

    // Barrier objective -tau t - sum log(slacks) - sum logdet W_k; +inf outside the domain.
    double value(const RVec& z, double tau) const
    {
        const RVec s = row_slacks(z);
        if ((s.array() <= 0).any()) {
            return std::numeric_limits<double>::infinity();
        }
        double f = -tau * z(nvar - 1) - s.array().log().sum();
        for (int k = 0; k < p.num_blocks; ++k) {
            const double c = trace_slack(z, k);
            if (!(c > 0)) {
                return std::numeric_limits<double>::infinity();
            }
            Eigen::LLT<CMat> llt(block(z, k));
            if (llt.info() != Eigen::Success) {
                return std::numeric_limits<double>::infinity();
            }
            const CMat& l = llt.matrixLLT();
            double logdet = 0.0;
            for (Eigen::Index a = 0; a < l.rows(); ++a) {
                const double v = l(a, a).real();
                if (!(v > 0)) {
                    return std::numeric_limits<double>::infinity();
                }
                logdet += 2.0 * std::log(v);
            }
            f -= std::log(c) + logdet;
        }
        return f;
    }

    void derivatives(const RVec& z, double tau, RVec& g, RMat& h) const
    {
        g = RVec::Zero(nvar);
        h = RMat::Zero(nvar, nvar);
        g(nvar - 1) = -tau;
        const RVec s = row_slacks(z);
        RVec grad_row(nvar);
        for (int i = 0; i < p.num_rows(); ++i) {
            grad_row.head(nvar - 1) = rows.row(i).transpose();
            grad_row(nvar - 1) = -1.0;
            g -= grad_row / s(i);
            h.noalias() += grad_row * grad_row.transpose() / (s(i) * s(i));
        }
        std::vector<double> c(static_cast<std::size_t>(nb));
        for (int k = 0; k < p.num_blocks; ++k) {
            const int off = k * nb;
            const double ck = trace_slack(z, k);
            for (int a = 0; a < p.block_size; ++a) {
                g(off + a) += 1.0 / ck;
                for (int b2 = 0; b2 < p.block_size; ++b2) {
                    h(off + a, off + b2) += 1.0 / (ck * ck);
                }
            }
            const CMat v = block(z, k).inverse();
            const CMat vh = 0.5 * (v + v.adjoint());
            basis.coefficients(vh, c.data());
            for (int q = 0; q < nb; ++q) {
                g(off + q) -= c[static_cast<std::size_t>(q)];
            }
            for (int q = 0; q < nb; ++q) {
                basis.coefficients(basis.sandwich(vh, q), c.data());
                for (int r = 0; r < nb; ++r) {
                    h(off + q, off + r) += c[static_cast<std::size_t>(r)];
                }
            }
        }
    }
};

std::vector<double> normalized_multipliers(const RVec& slacks, double tau)
{
    std::vector<double> lam(static_cast<std::size_t>(slacks.size()));
    double sum = 0.0;
    for (Eigen::Index i = 0; i < slacks.size(); ++i) {
        lam[static_cast<std::size_t>(i)] = 1.0 / (tau * slacks(i));
        sum += lam[static_cast<std::size_t>(i)];
    }
    for (double& l : lam) {
        l /= sum;
    }
    return lam;
}

CMat aggregate(const BlockSdpProblem& p, const std::vector<double>& lambda, int k)
{
    CMat m = CMat::Zero(p.block_size, p.block_size);
    for (int i = 0; i < p.num_rows(); ++i) {
        m += lambda[static_cast<std::size_t>(i)] *
             p.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
    return 0.5 * (m + m.adjoint());
}

} // namespace

void BlockSdpProblem::validate() const
{
    if (num_blocks <= 0 || block_size <= 0) {
        throw InvalidArgument("BlockSdpProblem: empty dimensions");
    }
    if (a.size() != b.size() || static_cast<int>(trace_cap.size()) != num_blocks) {
        throw DimensionMismatch("BlockSdpProblem: inconsistent sizes");
    }
    for (const auto& row : a) {
        if (static_cast<int>(row.size()) != num_blocks) {
            throw DimensionMismatch("BlockSdpProblem: row has wrong block count");
        }
        for (const CMat& m : row) {
            if (m.rows() != block_size || m.cols() != block_size) {
                throw DimensionMismatch("BlockSdpProblem: coefficient size");
            }
            if ((m - m.adjoint()).norm() > 1e-12 * std::max(1.0, m.norm())) {
                throw InvalidArgument("BlockSdpProblem: coefficient not Hermitian");
            }
        }
    }
    for (double c : trace_cap) {
        if (!(c > 0)) {
            throw InvalidArgument("BlockSdpProblem: trace caps must be positive");
        }
    }
}

std::vector<double> row_values(const BlockSdpProblem& p, const std::vector<CMat>& w)
{
    std::vector<double> out(p.b);
    for (int i = 0; i < p.num_rows(); ++i) {
        for (int k = 0; k < p.num_blocks; ++k) {
            out[static_cast<std::size_t>(i)] +=
                (p.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] *
                 w[static_cast<std::size_t>(k)])
                    .trace()
                    .real();
        }
    }
    return out;
}

double dual_bound(const BlockSdpProblem& p, const std::vector<double>& lambda)
{
    double ub = 0.0;
    for (int i = 0; i < p.num_rows(); ++i) {
        ub += lambda[static_cast<std::size_t>(i)] * p.b[static_cast<std::size_t>(i)];
    }
    for (int k = 0; k < p.num_blocks; ++k) {
        ub += p.trace_cap[static_cast<std::size_t>(k)] *
              std::max(0.0, lambda_max(aggregate(p, lambda, k)));
    }
    return ub;
}

SdpSolution solve_max_slack(const BlockSdpProblem& p, const SdpOptions& opts)
{
    p.validate();
    SdpSolution sol;
    const int nt = p.block_size;
    sol.w.reserve(static_cast<std::size_t>(p.num_blocks));
    for (int k = 0; k < p.num_blocks; ++k) {
        sol.w.push_back(CMat::Identity(nt, nt) *
                        (p.trace_cap[static_cast<std::size_t>(k)] / (2.0 * nt)));
    }
    if (p.num_rows() == 0) {
        sol.t = sol.upper = std::numeric_limits<double>::infinity();
        sol.status = SdpStatus::Optimal;
        return sol;
    }

    const Barrier bar(p);
    RVec z(bar.nvar);
    for (int k = 0; k < p.num_blocks; ++k) {
        bar.basis.coordinates(sol.w[static_cast<std::size_t>(k)], z.data() + k * bar.nb);
    }
    z(bar.nvar - 1) = 0.0;
    z(bar.nvar - 1) = bar.row_slacks(z).minCoeff() - 1.0;

    double tau = 1.0 / (1.0 + std::abs(z(bar.nvar - 1)));
    RVec g;
    RMat h;
    auto finish = [&](SdpStatus status, const std::vector<double>& lam) {
        for (int k = 0; k < p.num_blocks; ++k) {
            sol.w[static_cast<std::size_t>(k)] = bar.block(z, k);
        }
        sol.t = z(bar.nvar - 1);
        sol.lambda = lam;
        sol.upper = dual_bound(p, lam);
        sol.gap = sol.upper - sol.t;
        sol.status = status;
        return sol;
    };

    std::vector<double> lam = normalized_multipliers(bar.row_slacks(z), tau);
    while (true) {
        // centering
        while (true) {
            if (sol.newton_steps >= opts.max_newton_steps) {
                return finish(SdpStatus::MaxIterations, lam);
            }
            bar.derivatives(z, tau, g, h);
            const RVec d = h.ldlt().solve(-g);
            const double dec2 = -g.dot(d);
            if (!d.allFinite()) {
                return finish(SdpStatus::MaxIterations, lam);
            }
            if (dec2 / 2.0 <= opts.newton_tol) {
                break;
            }
            const double f0 = bar.value(z, tau);
            double step = 1.0;
            RVec trial = z + d;
            double f1 = bar.value(trial, tau);
            while (!(f1 <= f0 - 0.25 * step * dec2) && step > 1e-20) {
                step *= 0.5;
                trial = z + step * d;
                f1 = bar.value(trial, tau);
            }
            ++sol.newton_steps;
            if (!(f1 < f0)) {
                break; // no further progress possible at this tau
            }
            z = trial;
            if (opts.sign_only) {
                lam = normalized_multipliers(bar.row_slacks(z), tau);
                if (z(bar.nvar - 1) > 0 || dual_bound(p, lam) < 0) {
                    return finish(SdpStatus::SignDecided, lam);
                }
            }
        }
        lam = normalized_multipliers(bar.row_slacks(z), tau);
        const double t = z(bar.nvar - 1);
        const double ub = dual_bound(p, lam);
        if (opts.sign_only && (t > 0 || ub < 0)) {
            return finish(SdpStatus::SignDecided, lam);
        }
        if (ub - t <= opts.tol * (1.0 + std::abs(t))) {
            return finish(SdpStatus::Optimal, lam);
        }
        tau /= opts.mu_factor;
    }
}

bool verify_kkt(const BlockSdpProblem& p, const SdpSolution& sol, double tol)
{
    if (p.num_rows() == 0) {
        return std::isinf(sol.t);
    }
    const double scale = 1.0 + std::abs(sol.t);
    const double lim = tol * scale;
    const auto g = row_values(p, sol.w);
    if (sol.lambda.size() != g.size()) {
        return false;
    }
    double lam_sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g[i] - sol.t < -lim || sol.lambda[i] < 0) {
            return false;
        }
        if (sol.lambda[i] * (g[i] - sol.t) > lim) {
            return false;
        }
        lam_sum += sol.lambda[i];
    }
    if (std::abs(lam_sum - 1.0) > tol) {
        return false;
    }
    for (int k = 0; k < p.num_blocks; ++k) {
        const CMat& w = sol.w[static_cast<std::size_t>(k)];
        const double cap = p.trace_cap[static_cast<std::size_t>(k)];
        if (Eigen::SelfAdjointEigenSolver<CMat>(w).eigenvalues().minCoeff() < -lim ||
            w.trace().real() > cap + lim) {
            return false;
        }
        // nu_k is the smallest multiplier making Z_k = nu_k I - sum_i lambda_i A_ik PSD
        const CMat agg = aggregate(p, sol.lambda, k);
        const double nu = std::max(0.0, lambda_max(agg));
        const CMat zk = nu * CMat::Identity(p.block_size, p.block_size) - agg;
        if (nu * (cap - w.trace().real()) > lim) {
            return false;
        }
        if ((zk * w).trace().real() > lim) {
            return false;
        }
    }
    return dual_bound(p, sol.lambda) - sol.t <= lim;
}

} // namespace cobf
