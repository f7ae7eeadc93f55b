#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>

#include "pixel_matrix.hpp"
#include "protochange/baselines.hpp"
#include "protochange/error.hpp"

namespace protochange {

namespace {

/// Zero mean, unit variance per band; constant bands are only centred.
Eigen::MatrixXd standardize(const Eigen::MatrixXd& m)
{
    const Eigen::RowVectorXd mean = m.colwise().mean();
    Eigen::MatrixXd out = m.rowwise() - mean;
    for (Eigen::Index b = 0; b < out.cols(); ++b) {
        const double sd = std::sqrt(out.col(b).squaredNorm() / static_cast<double>(out.rows()));
        if (sd > 0.0) out.col(b) /= sd;
    }
    return out;
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& centred)
{
    return centred.transpose() * centred / static_cast<double>(centred.rows());
}

}  // namespace

SfaResult sfa_baseline(const ImagePair& pair, const SfaOptions& options)
{
    const Eigen::MatrixXd x = standardize(detail::pixel_matrix(pair.pre()));
    const Eigen::MatrixXd y = standardize(detail::pixel_matrix(pair.post()));
    const Eigen::Index n = x.rows();
    const Eigen::Index bands = x.cols();

    Eigen::MatrixXd delta = x - y;
    delta = delta.rowwise() - delta.colwise().mean();

    SfaResult out;
    out.scores = ScoreMap{pair.width(), pair.height(), std::vector<double>(static_cast<std::size_t>(n), 0.0)};
    out.mask = ChangeMask(pair.width(), pair.height());
    out.sigma_delta = covariance(delta);
    out.sigma_bar = 0.5 * (covariance(x) + covariance(y)) +
                    options.ridge * Eigen::MatrixXd::Identity(bands, bands);

    Eigen::LLT<Eigen::MatrixXd> llt(out.sigma_bar);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::SingularCovariance, "average covariance is not positive definite after ridge");

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(out.sigma_delta, out.sigma_bar);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::SingularCovariance, "SFA eigenproblem failed");

    // Drop directions with (numerically) no difference variance: their
    // projections are identically zero and would divide 0 by 0.
    const Eigen::VectorXd& lambda = solver.eigenvalues();
    const double largest = lambda.maxCoeff();
    std::vector<Eigen::Index> kept;
    for (Eigen::Index j = 0; j < bands; ++j) {
        if (largest > 0.0 && lambda(j) > 1e-12 * largest) kept.push_back(j);
    }
    out.eigenvalues.resize(static_cast<Eigen::Index>(kept.size()));
    out.eigenvectors.resize(bands, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) {
        Eigen::VectorXd w = solver.eigenvectors().col(kept[i]);
        Eigen::Index arg = 0;
        w.cwiseAbs().maxCoeff(&arg);
        if (w(arg) < 0.0) w = -w;
        out.eigenvalues(static_cast<Eigen::Index>(i)) = lambda(kept[i]);
        out.eigenvectors.col(static_cast<Eigen::Index>(i)) = w;
    }
    if (kept.empty()) return out;

    out.threshold = chi_square_quantile(options.confidence, static_cast<double>(kept.size()));
    const Eigen::MatrixXd projected = delta * out.eigenvectors;
    const Eigen::ArrayXXd normalised =
        projected.array().square().rowwise() / out.eigenvalues.transpose().array();
    const Eigen::VectorXd score = normalised.rowwise().sum();
    for (Eigen::Index i = 0; i < n; ++i) out.scores.scores[static_cast<std::size_t>(i)] = score(i);
    for (int r = 0; r < pair.height(); ++r)
        for (int c = 0; c < pair.width(); ++c)
            out.mask.set(r, c, out.scores.scores[static_cast<std::size_t>(r) * pair.width() + c] > out.threshold);
    return out;
}

}  // namespace protochange
