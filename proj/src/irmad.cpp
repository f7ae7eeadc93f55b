#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "pixel_matrix.hpp"
#include "protochange/baselines.hpp"
#include "protochange/error.hpp"

namespace protochange {

double chi_square_quantile(double probability, double dof)
{
    return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), probability);
}

double chi_square_survival(double statistic, double dof)
{
    if (statistic <= 0.0) return 1.0;
    return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

namespace {

Eigen::MatrixXd weighted_cross(const Eigen::MatrixXd& xc, const Eigen::MatrixXd& yc, const Eigen::VectorXd& w,
                               double wsum)
{
    return (xc.transpose() * w.asDiagonal() * yc) / wsum;
}

void require_positive_definite(const Eigen::MatrixXd& m, const char* what)
{
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::SingularCovariance, std::string(what) + " is not positive definite after ridge");
}

}  // namespace

CanonicalCorrelation canonical_correlation(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                           const Eigen::VectorXd& weights, double ridge)
{
    if (x.rows() != y.rows() || x.cols() != y.cols() || weights.size() != x.rows())
        throw Error(ErrorCode::ShapeMismatch, "CCA inputs must agree in shape");
    const double wsum = weights.sum();
    if (!(wsum > 0.0)) throw Error(ErrorCode::SingularCovariance, "all observation weights are zero");
    const Eigen::Index bands = x.cols();

    CanonicalCorrelation cc;
    cc.mean_x = (weights.transpose() * x) / wsum;
    cc.mean_y = (weights.transpose() * y) / wsum;
    const Eigen::MatrixXd xc = x.rowwise() - cc.mean_x;
    const Eigen::MatrixXd yc = y.rowwise() - cc.mean_y;
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(bands, bands);
    cc.s11 = weighted_cross(xc, xc, weights, wsum) + ridge * identity;
    cc.s22 = weighted_cross(yc, yc, weights, wsum) + ridge * identity;
    cc.s12 = weighted_cross(xc, yc, weights, wsum);
    require_positive_definite(cc.s11, "pre-image covariance");
    require_positive_definite(cc.s22, "post-image covariance");

    const Eigen::LLT<Eigen::MatrixXd> s22_llt(cc.s22);
    const Eigen::MatrixXd s22_inv_s21 = s22_llt.solve(cc.s12.transpose());
    Eigen::MatrixXd lhs = cc.s12 * s22_inv_s21;
    lhs = 0.5 * (lhs + lhs.transpose());

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(lhs, cc.s11);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::SingularCovariance, "canonical correlation eigenproblem failed");

    cc.rho = solver.eigenvalues().cwiseMax(0.0).cwiseMin(1.0).cwiseSqrt();
    cc.a = solver.eigenvectors();
    cc.b.resize(bands, bands);

    // Fallback basis for vanishing correlations: the post-side problem.
    std::optional<Eigen::MatrixXd> post_basis;
    for (Eigen::Index j = 0; j < bands; ++j) {
        Eigen::VectorXd a = cc.a.col(j);
        // Positive summed correlation with the pre bands.
        if ((cc.s11 * a).sum() < 0.0) a = -a;
        cc.a.col(j) = a;
        if (cc.rho(j) > 1e-12) {
            cc.b.col(j) = s22_inv_s21 * a / cc.rho(j);
        } else {
            if (!post_basis) {
                Eigen::MatrixXd lhs2 = cc.s12.transpose() * Eigen::LLT<Eigen::MatrixXd>(cc.s11).solve(cc.s12);
                lhs2 = 0.5 * (lhs2 + lhs2.transpose());
                post_basis = Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd>(lhs2, cc.s22).eigenvectors();
            }
            cc.b.col(j) = post_basis->col(j);
        }
    }
    return cc;
}

IrmadResult irmad_baseline(const ImagePair& pair, const IrmadOptions& options)
{
    const Eigen::MatrixXd x = detail::pixel_matrix(pair.pre());
    const Eigen::MatrixXd y = detail::pixel_matrix(pair.post());
    const Eigen::Index n = x.rows();
    const Eigen::Index bands = x.cols();
    const double dof = static_cast<double>(bands);

    IrmadResult out;
    out.scores = ScoreMap{pair.width(), pair.height(), std::vector<double>(static_cast<std::size_t>(n), 0.0)};
    out.weights.assign(static_cast<std::size_t>(n), 1.0);
    out.threshold = chi_square_quantile(options.confidence, dof);

    Eigen::VectorXd weights = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd previous;
    std::vector<double>& z = out.scores.scores;

    for (int iter = 1; iter <= std::max(options.max_iter, 1); ++iter) {
        const CanonicalCorrelation cc = canonical_correlation(x, y, weights, options.ridge);
        const Eigen::MatrixXd u = (x.rowwise() - cc.mean_x) * cc.a;
        const Eigen::MatrixXd v = (y.rowwise() - cc.mean_y) * cc.b;
        const Eigen::MatrixXd mad = u - v;
        // Var(MAD_j) = 2 (1 - rho_j) under the canonical normalisation.
        const Eigen::ArrayXd sigma2 = (2.0 * (1.0 - cc.rho.array())).max(1e-300);
        for (Eigen::Index i = 0; i < n; ++i) {
            z[i] = (mad.row(i).array().square() / sigma2.transpose()).sum();
            weights(i) = chi_square_survival(z[i], dof);
        }

        out.rho_history.push_back(cc.rho);
        out.rho = cc.rho;
        out.iterations = iter;
        if (previous.size() == cc.rho.size()) {
            out.final_delta = (cc.rho - previous).cwiseAbs().maxCoeff();
            if (out.final_delta < options.eps) {
                out.converged = true;
                break;
            }
        }
        previous = cc.rho;
    }

    out.weights.assign(weights.data(), weights.data() + n);
    out.mask = ChangeMask(pair.width(), pair.height());
    for (int r = 0; r < pair.height(); ++r)
        for (int c = 0; c < pair.width(); ++c)
            out.mask.set(r, c, z[static_cast<std::size_t>(r) * pair.width() + c] > out.threshold);
    return out;
}

}  // namespace protochange
