#include "cobf/linalg.hpp"

namespace cobf {

double lambda_max(const CMat& q)
{
    Eigen::SelfAdjointEigenSolver<CMat> es(q, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

CVec principal_eigenvector(const CMat& q)
{
    Eigen::SelfAdjointEigenSolver<CMat> es(q);
    // eigenvalues are sorted ascending
    CVec v = es.eigenvectors().col(q.rows() - 1);
    return v / v.norm();
}

CMat psd_sqrt(const CMat& q)
{
    Eigen::SelfAdjointEigenSolver<CMat> es(q);
    RVec s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const CMat& u = es.eigenvectors();
    CMat r = u * s.cast<cplx>().asDiagonal() * u.adjoint();
    return 0.5 * (r + r.adjoint());
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

CVec random_complex_normal(Rng& rng, Eigen::Index n)
{
    ComplexNormal draw;
    CVec v(n);
    for (Eigen::Index a = 0; a < n; ++a) {
        v(a) = draw(rng);
    }
    return v;
}

} // namespace cobf
