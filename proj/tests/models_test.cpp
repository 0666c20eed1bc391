#include "ximpact/models.hpp"

#include "ximpact/simulator.hpp"
#include "support.hpp"

#include <doctest.h>
#include <Eigen/QR>

#include <cmath>

using namespace ximpact;
using testsupport::max_abs;
using testsupport::random_moments;
using testsupport::rel_frobenius;

namespace {

// Independent 2x2 symmetric eigendecomposition (closed form), used to
// evaluate the Kyle formula without touching the library's solver path.
struct Eigen2 {
    double l1, l2;       // eigenvalues
    Matrix v;            // columns are eigenvectors
};

Eigen2 eig2(const Matrix& a) {
    const double tr = a(0, 0) + a(1, 1);
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    Eigen2 out;
    out.l1 = tr / 2.0 + disc;
    out.l2 = tr / 2.0 - disc;
    out.v.resize(2, 2);
    if (std::abs(a(0, 1)) > 1e-300) {
        Vector v1(2), v2(2);
        v1 << out.l1 - a(1, 1), a(0, 1);
        v2 << out.l2 - a(1, 1), a(0, 1);
        out.v.col(0) = v1.normalized();
        out.v.col(1) = v2.normalized();
    } else {
        out.v = Matrix::Identity(2, 2);
    }
    return out;
}

Matrix apply2(const Matrix& a, double (*fn)(double)) {
    const Eigen2 e = eig2(a);
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = fn(e.l1);
    d(1, 1) = fn(e.l2);
    return e.v * d * e.v.transpose();
}

double sqrt_fn(double x) { return std::sqrt(std::max(0.0, x)); }
double inv_sqrt_fn(double x) { return 1.0 / std::sqrt(x); }

MomentSet to_ms(const testsupport::MomentFixture& f) { return {f.Sigma, f.Omega, f.R}; }

}  // namespace

TEST_CASE("lambda_diag: definition and scaling") {
    MomentSet ms;
    ms.Omega = Matrix::Zero(2, 2);
    ms.Omega(0, 0) = 4.0;
    ms.Omega(1, 1) = 9.0;
    ms.R = Matrix::Zero(2, 2);
    ms.R(0, 0) = 2.0;
    ms.R(1, 1) = 3.0;
    ms.Sigma = Matrix::Identity(2, 2);
    const Matrix lam = lambda_diag(ms, 1.0);
    CHECK(lam(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(lam(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(lam(0, 1) == 0.0);
    CHECK(max_abs(lambda_diag(ms, 0.0)) == 0.0);
}

TEST_CASE("lambda_diag equals univariate uncentered OLS slopes") {
    BinSimConfig cfg;
    cfg.n_assets = 3;
    auto s = rng::Stream::keyed(21);
    cfg.lambda_true = testsupport::random_matrix(s, 3, 3);
    cfg.omega_true = testsupport::random_spd(s, 3);
    cfg.sigma_eta_true = testsupport::random_spd(s, 3, 1.0);
    cfg.n_bins = 4000;
    cfg.seed = 77;
    const auto sim = simulate_bin_level(cfg);
    const MomentSet ms = sample_moments(sim.panel);
    const Matrix lam = lambda_diag(ms, 1.0);
    for (int i = 0; i < 3; ++i) {
        double num = 0.0, den = 0.0;  // direct per-asset regression oracle
        for (Index b = 0; b < sim.panel.n_bins(); ++b) {
            num += sim.panel.delta_p(b, i) * sim.panel.flow(b, i);
            den += sim.panel.flow(b, i) * sim.panel.flow(b, i);
        }
        CHECK(std::abs(lam(i, i) - num / den) < 1e-12 * std::max(1.0, std::abs(num / den)));
    }
}

TEST_CASE("lambda_ml: substitution cases") {
    auto s = rng::Stream::keyed(22);
    MomentSet ms;
    ms.Omega = Matrix::Identity(3, 3);
    ms.R = testsupport::random_matrix(s, 3, 3);
    ms.Sigma = Matrix::Identity(3, 3);
    CHECK(max_abs(lambda_ml(ms, 1.0) - ms.R) < 1e-10);
    ms.R.setZero();
    CHECK(max_abs(lambda_ml(ms, 1.0)) < 1e-15);
}

TEST_CASE("lambda_ml equals the multivariate normal-equations oracle") {
    BinSimConfig cfg;
    cfg.n_assets = 4;
    auto s = rng::Stream::keyed(23);
    cfg.lambda_true = testsupport::random_matrix(s, 4, 4);
    cfg.omega_true = testsupport::random_spd(s, 4);
    cfg.sigma_eta_true = testsupport::random_spd(s, 4, 1.0);
    cfg.n_bins = 2000;
    cfg.seed = 5;
    const auto sim = simulate_bin_level(cfg);
    const MomentSet ms = sample_moments(sim.panel);
    const Matrix lam = lambda_ml(ms, 1.0);
    // Oracle: least squares on the raw stacked data via QR, one target at a time.
    Eigen::ColPivHouseholderQR<Matrix> qr(sim.panel.flow);
    for (int i = 0; i < 4; ++i) {
        const Vector beta = qr.solve(sim.panel.delta_p.col(i));
        CHECK((lam.row(i).transpose() - beta).norm() < 1e-10 * std::max(1.0, beta.norm()));
    }
}

TEST_CASE("lambda_kyle: substitution cases") {
    MomentSet ms;
    ms.Sigma = Matrix::Identity(3, 3);
    ms.Omega = Matrix::Identity(3, 3);
    ms.R = Matrix::Zero(3, 3);
    CHECK(max_abs(lambda_kyle(ms, 1.0) - Matrix::Identity(3, 3)) < 1e-12);

    auto s = rng::Stream::keyed(24);
    ms.Sigma = testsupport::random_spd(s, 3);
    CHECK(max_abs(lambda_kyle(ms, 2.0) - 2.0 * matrix_sqrt(ms.Sigma)) < 1e-10);
}

TEST_CASE("lambda_kyle: 2x2 fixture against the independent eigen oracle") {
    Matrix sigma(2, 2), omega(2, 2);
    sigma << 2.0, 1.0, 1.0, 2.0;
    omega << 4.0, 0.0, 0.0, 1.0;
    // Oracle path: closed-form 2x2 eigendecompositions only.
    const Matrix f = apply2(omega, sqrt_fn);
    const Matrix fi = apply2(omega, inv_sqrt_fn);
    const Matrix expected = fi * apply2(f * sigma * f, sqrt_fn) * fi;

    const Matrix got = lambda_kyle(sigma, omega, 1.0);
    CHECK(max_abs(got - expected) < 1e-10);
    const Matrix tri = lambda_kyle(sigma, omega, 1.0, kDefaultRidge, OmegaFactor::Cholesky);
    CHECK(max_abs(tri - got) < 1e-8);
}

TEST_CASE("lambda_kyle: symmetry, PSD and factor-choice invariance") {
    auto s = rng::Stream::keyed(25);
    for (int trial = 0; trial < 50; ++trial) {
        const Index n = 2 + static_cast<Index>(s.next_u64() % 4);
        const Matrix sigma = testsupport::random_spd(s, n);
        const Matrix omega = testsupport::random_spd(s, n);
        const Matrix lam = lambda_kyle(sigma, omega, 1.0);
        CHECK(max_abs(lam - lam.transpose()) < 1e-10);
        const double lmax = std::max(1.0, lam.norm());
        CHECK(min_eigenvalue(lam) >= -1e-10 * lmax);
        const Matrix tri = lambda_kyle(sigma, omega, 1.0, kDefaultRidge, OmegaFactor::Cholesky);
        CHECK(max_abs(tri - lam) < 1e-8 * std::max(1.0, max_abs(lam)));
        // Defining Riccati identity: Lambda Omega Lambda = Sigma.
        CHECK((lam * omega * lam - sigma).norm() < 1e-8 * std::max(1.0, sigma.norm()));
    }
}

TEST_CASE("model laws: permutation equivariance for all three") {
    auto s = rng::Stream::keyed(26);
    const std::vector<int> perm = {2, 0, 3, 1};
    const Matrix p = testsupport::permutation_matrix(perm);
    for (int trial = 0; trial < 20; ++trial) {
        const auto f = random_moments(s, 4);
        const MomentSet ms = to_ms(f);
        MomentSet tms;
        tms.Sigma = p * f.Sigma * p.transpose();
        tms.Omega = p * f.Omega * p.transpose();
        tms.R = p * f.R * p.transpose();
        for (const ModelKind kind : {ModelKind::Diagonal, ModelKind::ML, ModelKind::Kyle}) {
            const Matrix lam = build_lambda(kind, ms, 1.0);
            const Matrix tlam = build_lambda(kind, tms, 1.0);
            CHECK(max_abs(tlam - p * lam * p.transpose()) < 1e-10 * std::max(1.0, max_abs(lam)));
        }
    }
}

TEST_CASE("model laws: per-asset cash and split for diagonal and ML") {
    auto s = rng::Stream::keyed(27);
    for (int trial = 0; trial < 20; ++trial) {
        const auto f = random_moments(s, 4);
        const MomentSet ms = to_ms(f);
        const Vector dv = testsupport::random_positive(s, 4);
        const Vector vv = testsupport::random_positive(s, 4);
        const Matrix d = dv.asDiagonal();
        const Matrix v = vv.asDiagonal();
        for (const ModelKind kind : {ModelKind::Diagonal, ModelKind::ML}) {
            const Matrix lam = build_lambda(kind, ms, 1.0);
            MomentSet cash;
            cash.Sigma = d * f.Sigma * d;
            cash.Omega = f.Omega;
            cash.R = d * f.R;
            CHECK(max_abs(build_lambda(kind, cash, 1.0) - d * lam) <
                  1e-10 * std::max(1.0, max_abs(lam)));
            MomentSet split;
            split.Sigma = f.Sigma;
            split.Omega = v * f.Omega * v;
            split.R = f.R * v;
            CHECK(max_abs(build_lambda(kind, split, 1.0) - lam * v.inverse()) <
                  1e-10 * std::max(1.0, max_abs(lam)));
        }
    }
}

// The Kyle matrix is symmetric by construction, so the one-sided diagonal
// transformations cannot hold for it; the financially-grounded versions do:
// a common currency rescale and the joint stock-split (prices scaled by D,
// volumes by D^{-1}).
TEST_CASE("model laws: Kyle scalar-cash, scalar-split and joint-split") {
    auto s = rng::Stream::keyed(28);
    for (int trial = 0; trial < 20; ++trial) {
        const auto f = random_moments(s, 4);
        const Matrix lam = lambda_kyle(f.Sigma, f.Omega, 1.0);
        const double c = s.uniform(0.5, 2.0);
        CHECK(max_abs(lambda_kyle(Matrix(c * c * f.Sigma), f.Omega, 1.0) - c * lam) <
              1e-8 * std::max(1.0, max_abs(lam)));
        const double v = s.uniform(0.5, 2.0);
        CHECK(max_abs(lambda_kyle(f.Sigma, Matrix(v * v * f.Omega), 1.0) - lam / v) <
              1e-8 * std::max(1.0, max_abs(lam)));
        const Vector dv = testsupport::random_positive(s, 4);
        const Matrix d = dv.asDiagonal();
        const Matrix di = d.inverse();
        CHECK(max_abs(lambda_kyle(Matrix(d * f.Sigma * d), Matrix(di * f.Omega * di), 1.0) -
                      d * lam * d) < 1e-8 * std::max(1.0, max_abs(d * lam * d)));
    }
}

TEST_CASE("model laws: rotational equivariance for ML and Kyle") {
    auto s = rng::Stream::keyed(29);
    for (int trial = 0; trial < 20; ++trial) {
        const auto f = random_moments(s, 4);
        const Matrix o = testsupport::random_orthogonal(s, 4);
        MomentSet ms = to_ms(f);
        MomentSet rms;
        rms.Sigma = o * f.Sigma * o.transpose();
        rms.Omega = o * f.Omega * o.transpose();
        rms.R = o * f.R * o.transpose();
        for (const ModelKind kind : {ModelKind::ML, ModelKind::Kyle}) {
            const Matrix lam = build_lambda(kind, ms, 1.0);
            const Matrix rlam = build_lambda(kind, rms, 1.0);
            CHECK(max_abs(rlam - o * lam * o.transpose()) < 1e-8 * std::max(1.0, max_abs(lam)));
        }
    }
}

TEST_CASE("model laws: seeded counterexample for diagonal rotation") {
    auto s = rng::Stream::keyed(30);
    const auto f = random_moments(s, 3);
    const Matrix o = testsupport::random_orthogonal(s, 3);
    MomentSet ms = to_ms(f);
    MomentSet rms;
    rms.Sigma = o * f.Sigma * o.transpose();
    rms.Omega = o * f.Omega * o.transpose();
    rms.R = o * f.R * o.transpose();
    const Matrix lam = lambda_diag(ms, 1.0);
    const Matrix rlam = lambda_diag(rms, 1.0);
    CHECK(max_abs(rlam - o * lam * o.transpose()) > 1e-3);
}

TEST_CASE("ML in-sample optimality") {
    BinSimConfig cfg;
    cfg.n_assets = 3;
    auto s = rng::Stream::keyed(31);
    cfg.lambda_true = testsupport::random_matrix(s, 3, 3);
    cfg.omega_true = testsupport::random_spd(s, 3);
    cfg.sigma_eta_true = testsupport::random_spd(s, 3, 1.0);
    cfg.n_bins = 1500;
    cfg.seed = 9;
    const auto sim = simulate_bin_level(cfg);
    const MomentSet ms = sample_moments(sim.panel);
    const Matrix lam = lambda_ml(ms, 1.0);
    const auto loss = [&](const Matrix& l) {
        return (sim.panel.delta_p - sim.panel.flow * l.transpose()).squaredNorm();
    };
    const double base = loss(lam);
    for (int trial = 0; trial < 25; ++trial) {
        const Matrix noise = 1e-3 * testsupport::random_matrix(s, 3, 3);
        CHECK(loss(lam + noise) >= base);
    }
}

TEST_CASE("Kyle identity at the planted optimum (diagonal fixture)") {
    BinSimConfig cfg;
    cfg.n_assets = 3;
    Vector lam_diag(3), omega_diag(3);
    lam_diag << 0.5, 1.2, 0.8;
    omega_diag << 2.0, 1.0, 0.5;
    cfg.lambda_true = lam_diag.asDiagonal();
    cfg.omega_true = omega_diag.asDiagonal();
    cfg.sigma_eta_true = Matrix::Zero(3, 3);
    const PlantedMoments truth = planted_moments(cfg);
    const Matrix kyle = lambda_kyle(truth.sigma, truth.omega, 1.0, 0.0);
    CHECK(max_abs(kyle - cfg.lambda_true) < 1e-8);
}

TEST_CASE("calibrate_y: trivial and Monte Carlo recovery") {
    // dp-hat equals dp: Y = 1; dp-hat = dp / 2: Y = 2.
    Matrix dp(3, 1);
    dp << 1.0, -1.0, 2.0;
    MomentSet ms;
    ms.Sigma = Matrix::Identity(1, 1);
    ms.Omega = Matrix::Identity(1, 1);
    ms.R = Matrix::Identity(1, 1);  // lambda (ML, Y=1) = 1
    Matrix weight = Matrix::Identity(1, 1);
    CHECK(calibrate_y(dp, dp, ModelKind::ML, ms, weight) == doctest::Approx(1.0));
    CHECK(calibrate_y(dp, Matrix(0.5 * dp), ModelKind::ML, ms, weight) == doctest::Approx(2.0));

    Matrix zero = Matrix::Zero(3, 1);
    CHECK_THROWS_AS((void)calibrate_y(dp, zero, ModelKind::ML, ms, weight),
                    std::invalid_argument);
}

TEST_CASE("predict: trivial and hand fixtures") {
    Matrix dp(2, 2), q(2, 2);
    dp << 0.5, -0.25, 1.0, 0.75;
    q << 1.0, 2.0, -1.0, 0.5;
    const Prediction zero = predict(Matrix::Zero(2, 2), dp, q);
    CHECK(max_abs(zero.predicted) == 0.0);
    CHECK(max_abs(zero.residuals - dp) == 0.0);

    const Prediction ident = predict(Matrix::Identity(2, 2), dp, q);
    CHECK(max_abs(ident.predicted - q) == 0.0);

    Matrix lam(2, 2);
    lam << 0.1, 0.2, -0.3, 0.4;
    const Prediction mixed = predict(lam, dp, q);
    // Hand products: row t of prediction is lam * q_t.
    CHECK(mixed.predicted(0, 0) == doctest::Approx(0.1 * 1.0 + 0.2 * 2.0));
    CHECK(mixed.predicted(0, 1) == doctest::Approx(-0.3 * 1.0 + 0.4 * 2.0));
    CHECK(mixed.predicted(1, 0) == doctest::Approx(0.1 * -1.0 + 0.2 * 0.5));
    CHECK(mixed.predicted(1, 1) == doctest::Approx(-0.3 * -1.0 + 0.4 * 0.5));

    Matrix bad(1, 3);
    CHECK_THROWS_AS((void)predict(lam, dp, bad), std::invalid_argument);
}
