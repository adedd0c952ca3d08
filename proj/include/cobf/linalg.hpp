#pragma once

#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace cobf {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

/// Real part of w^H Q w for Hermitian Q.
inline double quad_form(const CMat& q, const CVec& w)
{
    return w.dot(q * w).real();
}

/// Largest eigenvalue of a Hermitian matrix.
double lambda_max(const CMat& q);

/// Unit-norm principal eigenvector of a Hermitian matrix.
CVec principal_eigenvector(const CMat& q);

/// Hermitian PSD square root S with S*S = Q (negative eigenvalues clipped to 0).
CMat psd_sqrt(const CMat& q);

/// 64-bit mixing function used to derive independent child seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Child seed for stream `index` of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
    return splitmix64(splitmix64(master) ^ (index + 0x9e3779b97f4a7c15ULL));
}

using Rng = std::mt19937_64;

/// Draws of CN(0,1): real and imaginary parts i.i.d. N(0, 1/2).
class ComplexNormal {
public:
    cplx operator()(Rng& rng)
    {
        const double re = n_(rng);
        const double im = n_(rng);
        return {re, im};
    }

private:
    std::normal_distribution<double> n_{0.0, std::sqrt(0.5)};
};

CVec random_complex_normal(Rng& rng, Eigen::Index n);

} // namespace cobf
