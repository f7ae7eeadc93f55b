#include <Eigen/SVD>

#include "protochange/cva.hpp"
#include "protochange/error.hpp"

namespace protochange {

Eigen::MatrixXd PcaModel::transform(const Eigen::MatrixXd& x) const
{
    if (x.cols() != mean.size()) throw Error(ErrorCode::ShapeMismatch, "PCA input width differs from the fit");
    return (x.rowwise() - mean) * components.transpose();
}

PcaResult pca_fit_transform(const Eigen::MatrixXd& x, int components)
{
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    if (components < 1 || components > std::min(n, d)) {
        throw Error(ErrorCode::InvalidComponentCount, "requested " + std::to_string(components) +
                                                          " components for a " + std::to_string(n) + "x" +
                                                          std::to_string(d) + " matrix");
    }
    if (n < 2) throw Error(ErrorCode::DegenerateData, "PCA needs at least two samples");

    PcaResult result;
    PcaModel& model = result.model;
    model.mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - model.mean;
    const double denom = static_cast<double>(n - 1);
    model.total_variance = centered.squaredNorm() / denom;
    if (!(model.total_variance > 0.0)) throw Error(ErrorCode::DegenerateData, "data has zero total variance");

    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const Eigen::MatrixXd& v = svd.matrixV();

    model.components.resize(components, d);
    model.explained_variance.resize(components);
    for (int j = 0; j < components; ++j) {
        Eigen::RowVectorXd axis = v.col(j).transpose();
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < d; ++i) {
            if (std::abs(axis(i)) > best) {
                best = std::abs(axis(i));
                arg = i;
            }
        }
        if (axis(arg) < 0.0) axis = -axis;
        model.components.row(j) = axis;
        model.explained_variance(j) = sv(j) * sv(j) / denom;
    }
    result.projections = centered * model.components.transpose();
    return result;
}

}  // namespace protochange
