// Cross-impact models: diagonal, maximum-likelihood and Kyle.
//
// Each model maps a (Sigma, Omega, R) moment triple to an impact matrix
// scaled by the Y-ratio. The Kyle matrix is the unique symmetric PSD
// solution L of L Omega L = Sigma; the factor used for Omega^{1/2} does not
// change the result and is fixed to the symmetric square root by default.
#pragma once

#include "ximpact/ingest.hpp"
#include "ximpact/linalg.hpp"
#include "ximpact/moments.hpp"
#include "ximpact/types.hpp"

#include <stdexcept>

namespace ximpact {

enum class OmegaFactor { Symmetric, Cholesky };

struct ImpactMatrix {
    ModelKind kind = ModelKind::Diagonal;
    double y = 1.0;
    double tau_seconds = 0.0;
    Matrix lambda;
};

// Residuals delta_p - Lambda q per bin.
struct Prediction {
    Matrix predicted;  // bins x assets
    Matrix residuals;  // bins x assets
};

template <class DO, class DR>
Matrix lambda_diag(const Eigen::MatrixBase<DO>& omega, const Eigen::MatrixBase<DR>& response,
                   double y) {
    const Index n = omega.rows();
    Matrix out = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        if (omega(i, i) <= 0.0)
            throw std::invalid_argument("lambda_diag: non-positive flow variance");
        out(i, i) = y * response(i, i) / omega(i, i);
    }
    return out;
}

template <class DO, class DR>
Matrix lambda_ml(const Eigen::MatrixBase<DO>& omega, const Eigen::MatrixBase<DR>& response,
                 double y, double ridge = kDefaultRidge) {
    return y * response.derived() * reg_inverse(omega, ridge);
}

template <class DS, class DO>
Matrix lambda_kyle(const Eigen::MatrixBase<DS>& sigma, const Eigen::MatrixBase<DO>& omega,
                   double y, double ridge = kDefaultRidge,
                   OmegaFactor factor = OmegaFactor::Symmetric) {
    Matrix f, fi;  // f * f^T = Omega, fi = f^{-1}
    if (factor == OmegaFactor::Symmetric) {
        f = matrix_sqrt(clip_to_psd(omega.derived()));
        fi = inv_sqrt_factor(omega, ridge);
    } else {
        Eigen::LLT<Matrix> llt(omega.derived());
        if (llt.info() != Eigen::Success)
            throw std::invalid_argument("lambda_kyle: Cholesky factor requires positive definite flow covariance");
        f = llt.matrixL();
        fi = f.triangularView<Eigen::Lower>().solve(Matrix::Identity(omega.rows(), omega.cols()));
    }
    // Estimation noise can push the sandwiched matrix slightly indefinite.
    const Matrix middle = clip_to_psd(f.transpose() * sigma.derived() * f, 0.0);
    return y * fi.transpose() * matrix_sqrt(middle) * fi;
}

inline Matrix lambda_diag(const MomentSet& ms, double y) { return lambda_diag(ms.Omega, ms.R, y); }
inline Matrix lambda_ml(const MomentSet& ms, double y, double ridge = kDefaultRidge) {
    return lambda_ml(ms.Omega, ms.R, y, ridge);
}
inline Matrix lambda_kyle(const MomentSet& ms, double y, double ridge = kDefaultRidge,
                          OmegaFactor factor = OmegaFactor::Symmetric) {
    return lambda_kyle(ms.Sigma, ms.Omega, y, ridge, factor);
}

inline Matrix build_lambda(ModelKind kind, const MomentSet& ms, double y,
                           double ridge = kDefaultRidge) {
    switch (kind) {
        case ModelKind::Diagonal: return lambda_diag(ms, y);
        case ModelKind::ML: return lambda_ml(ms, y, ridge);
        case ModelKind::Kyle: return lambda_kyle(ms, y, ridge);
    }
    throw std::logic_error("build_lambda: bad kind");
}

inline ImpactMatrix make_impact(ModelKind kind, const MomentSet& ms, double y, double tau_seconds,
                                double ridge = kDefaultRidge) {
    return ImpactMatrix{kind, y, tau_seconds, build_lambda(kind, ms, y, ridge)};
}

// Predicted increments Lambda q per bin (rows are bins).
inline Prediction predict(const Matrix& lambda, const Matrix& delta_p, const Matrix& flow) {
    if (lambda.cols() != flow.cols() || delta_p.rows() != flow.rows() ||
        delta_p.cols() != flow.cols())
        throw std::invalid_argument("predict: dimension mismatch");
    Prediction out;
    out.predicted = flow * lambda.transpose();
    out.residuals = delta_p - out.predicted;
    return out;
}

inline Prediction predict(const ImpactMatrix& impact, const BinnedPanel& panel) {
    return predict(impact.lambda, panel.delta_p, panel.flow);
}

// Closed-form weighted least-squares Y against the base model (Y = 1):
//   Y = sum_t dp_t' M dphat0_t / sum_t dphat0_t' M dphat0_t.
inline double calibrate_y(const Matrix& delta_p, const Matrix& flow, ModelKind kind,
                          const MomentSet& ms, const Matrix& weight,
                          double ridge = kDefaultRidge) {
    const Matrix base = build_lambda(kind, ms, 1.0, ridge);
    const Matrix predicted = flow * base.transpose();
    const Matrix pw = predicted * weight;
    const double den = (pw.array() * predicted.array()).sum();
    if (!(den > 0.0)) throw std::invalid_argument("calibrate_y: zero predicted variance");
    const double num = (delta_p.array() * pw.array()).sum();
    return num / den;
}

inline double calibrate_y(const BinnedPanel& training, ModelKind kind, const MomentSet& ms,
                          const Matrix& weight, double ridge = kDefaultRidge) {
    if (training.n_bins() < 1) throw std::invalid_argument("calibrate_y: empty training panel");
    return calibrate_y(training.delta_p, training.flow, kind, ms, weight, ridge);
}

}  // namespace ximpact
