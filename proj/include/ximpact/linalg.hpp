// Symmetric-matrix utilities: square roots, regularized inverses, PSD repair.
//
// All routines go through SelfAdjointEigenSolver so the results are symmetric
// by construction. Regularization is always relative to the largest eigenvalue.
#pragma once

#include "ximpact/types.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ximpact {

inline constexpr double kDefaultRidge = 1e-8;       // relative eigenvalue floor for inversions
inline constexpr double kPsdClipFloor = 1e-10;      // relative floor used by clip_to_psd
inline constexpr double kSymmetryTol = 1e-10;

namespace detail {

template <class D>
void require_finite(const Eigen::MatrixBase<D>& a, const char* what) {
    if (!a.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

template <class D>
void require_symmetric(const Eigen::MatrixBase<D>& a, double tol, const char* what) {
    using S = typename D::Scalar;
    require_finite(a, what);
    if (a.rows() != a.cols()) throw std::invalid_argument(std::string(what) + ": not square");
    const S scale = std::max(S(1), a.template lpNorm<Eigen::Infinity>());
    const S asym = (a - a.transpose()).template lpNorm<Eigen::Infinity>();
    if (asym > tol * scale) {
        std::ostringstream os;
        os << what << ": asymmetry " << asym << " exceeds tolerance " << tol * scale;
        throw std::invalid_argument(os.str());
    }
}

}  // namespace detail

// Unique symmetric PSD square root. Eigenvalues in [-tol*lambda_max, 0) are
// treated as estimation noise and clipped to zero; anything lower throws.
template <class D>
Mat<typename D::Scalar> matrix_sqrt(const Eigen::MatrixBase<D>& a,
                                    double negative_tol = kPsdClipFloor) {
    using S = typename D::Scalar;
    detail::require_symmetric(a, kSymmetryTol, "matrix_sqrt");
    Eigen::SelfAdjointEigenSolver<Mat<S>> es(a.derived());
    Vec<S> ev = es.eigenvalues();
    const S lmax = std::max(S(0), ev.maxCoeff());
    const S floor = -negative_tol * std::max(S(1), lmax);
    for (Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < floor) {
            std::ostringstream os;
            os << "matrix_sqrt: eigenvalue " << ev(i) << " below tolerance " << floor;
            throw std::invalid_argument(os.str());
        }
        ev(i) = ev(i) > S(0) ? std::sqrt(ev(i)) : S(0);
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Symmetric inverse square root of a PSD matrix, with eigenvalues floored at
// ridge * lambda_max before inversion. Throws when the matrix has no positive
// eigenvalue at all (rank-deficient beyond repair).
template <class D>
Mat<typename D::Scalar> inv_sqrt_factor(const Eigen::MatrixBase<D>& omega,
                                        double ridge = kDefaultRidge) {
    using S = typename D::Scalar;
    detail::require_symmetric(omega, kSymmetryTol, "inv_sqrt_factor");
    Eigen::SelfAdjointEigenSolver<Mat<S>> es(omega.derived());
    Vec<S> ev = es.eigenvalues();
    const S lmax = ev.maxCoeff();
    if (!(lmax > S(0))) {
        std::ostringstream os;
        os << "inv_sqrt_factor: rank-deficient beyond repair (lambda_max=" << lmax
           << ", condition=inf)";
        throw std::invalid_argument(os.str());
    }
    const S floor = ridge * lmax;
    for (Index i = 0; i < ev.size(); ++i) ev(i) = S(1) / std::sqrt(std::max(ev(i), floor));
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Regularized symmetric inverse: eigenvalues floored at ridge * lambda_max.
template <class D>
Mat<typename D::Scalar> reg_inverse(const Eigen::MatrixBase<D>& a, double ridge = kDefaultRidge) {
    using S = typename D::Scalar;
    detail::require_symmetric(a, kSymmetryTol, "reg_inverse");
    Eigen::SelfAdjointEigenSolver<Mat<S>> es(a.derived());
    Vec<S> ev = es.eigenvalues();
    const S lmax = ev.maxCoeff();
    if (!(lmax > S(0))) throw std::invalid_argument("reg_inverse: no positive eigenvalue");
    const S floor = ridge * lmax;
    for (Index i = 0; i < ev.size(); ++i) ev(i) = S(1) / std::max(ev(i), floor);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Eigenvalue clipping at rel_floor * lambda_max followed by re-symmetrization.
// Idempotent: a second application leaves the matrix unchanged.
template <class D>
Mat<typename D::Scalar> clip_to_psd(const Eigen::MatrixBase<D>& a,
                                    double rel_floor = kPsdClipFloor) {
    using S = typename D::Scalar;
    Mat<S> sym = S(0.5) * (a.derived() + a.derived().transpose());
    Eigen::SelfAdjointEigenSolver<Mat<S>> es(sym);
    Vec<S> ev = es.eigenvalues();
    const S lmax = std::max(S(0), ev.maxCoeff());
    const S floor = rel_floor * lmax;
    bool touched = false;
    for (Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < floor) {
            ev(i) = floor;
            touched = true;
        }
    }
    if (!touched) return sym;
    Mat<S> out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    return S(0.5) * (out + out.transpose());
}

template <class D>
typename D::Scalar min_eigenvalue(const Eigen::MatrixBase<D>& a) {
    Eigen::SelfAdjointEigenSolver<Mat<typename D::Scalar>> es(
        a.derived(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace ximpact
