#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "protochange/raster.hpp"

namespace protochange {

/// Per-pixel nonnegative change magnitude.
struct ScoreMap {
    int width = 0;
    int height = 0;
    std::vector<double> scores;
};

/// Histogram Otsu over `bins` equal-width bins spanning [lo, hi]. Class
/// means use the bin index as grey level, so the criterion depends only on
/// integer counts. Values in bins >= cut are the upper class.
struct OtsuResult {
    double threshold = 0.0;  // lo + cut * (hi - lo) / bins
    int cut = 0;             // 1..bins-1
    double lo = 0.0;
    double hi = 0.0;
    int bins = 256;

    int bin_of(double v) const noexcept;
    bool above(double v) const noexcept { return bin_of(v) >= cut; }
};

/// Throws ConstantScores when all scores are equal.
OtsuResult otsu_threshold(std::span<const double> scores, int bins = 256);

/// Between-class variance criterion (up to a constant factor) for one cut,
/// given exact integer class statistics. Exposed so an independent recount
/// can be compared against otsu_threshold bit for bit.
double otsu_criterion(std::uint64_t n0, std::uint64_t level_sum0, std::uint64_t n_total,
                      std::uint64_t level_sum_total) noexcept;

struct CvaResult {
    ScoreMap scores;
    ChangeMask mask;
    std::optional<OtsuResult> otsu;  // absent when the scores are constant
};

/// |post - pre| (L2 over bands), Otsu-binarised. A constant score map yields
/// an all-unchanged mask.
CvaResult cva_baseline(const ImagePair& pair, int bins = 256);

struct PcaKmeansOptions {
    int block = 4;
    int components = 3;
    std::uint64_t seed = 0;
};

/// Smallest multiple of `block` that is >= extent.
int padded_extent(int extent, int block) noexcept;

/// Block-PCA eigenspace of the absolute difference image, h x h neighbourhood
/// projections per pixel, k-means with k = 2; the cluster with the larger mean
/// difference is "changed". Throws TooSmallImage / InvalidArgument.
ChangeMask pca_kmeans_baseline(const ImagePair& pair, const PcaKmeansOptions& options = {});

struct CanonicalCorrelation {
    Eigen::VectorXd rho;  // ascending
    Eigen::MatrixXd a;    // columns: pre-side canonical vectors, a^T S11 a = 1
    Eigen::MatrixXd b;    // columns: post-side canonical vectors, b^T S22 b = 1
    Eigen::RowVectorXd mean_x;
    Eigen::RowVectorXd mean_y;
    Eigen::MatrixXd s11, s22, s12;  // weighted covariances (ridge included on s11, s22)
};

/// Weighted CCA between x (n x B) and y (n x B) via the symmetric-definite
/// problem S12 S22^-1 S21 a = rho^2 S11 a. Throws SingularCovariance.
CanonicalCorrelation canonical_correlation(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                           const Eigen::VectorXd& weights, double ridge);

struct IrmadOptions {
    int max_iter = 30;
    double eps = 1e-6;
    double ridge = 1e-8;
    double confidence = 0.99;  // chi-square quantile used for the mask
};

struct IrmadResult {
    ScoreMap scores;  // chi-square statistic per pixel
    ChangeMask mask;
    std::vector<double> weights;  // no-change probabilities, in [0,1]
    Eigen::VectorXd rho;
    std::vector<Eigen::VectorXd> rho_history;
    int iterations = 0;
    bool converged = false;
    double final_delta = 0.0;  // max |rho_t - rho_{t-1}| at the last step
    double threshold = 0.0;
};

IrmadResult irmad_baseline(const ImagePair& pair, const IrmadOptions& options = {});

struct SfaOptions {
    double ridge = 1e-8;
    double confidence = 0.99;
};

struct SfaResult {
    ScoreMap scores;
    ChangeMask mask;
    Eigen::VectorXd eigenvalues;   // retained, ascending
    Eigen::MatrixXd eigenvectors;  // retained columns, w^T Sbar w = 1
    Eigen::MatrixXd sigma_delta;
    Eigen::MatrixXd sigma_bar;     // ridge included
    double threshold = 0.0;
};

SfaResult sfa_baseline(const ImagePair& pair, const SfaOptions& options = {});

/// Upper-tail chi-square quantile helpers shared by IRMAD and SFA.
double chi_square_quantile(double probability, double dof);
double chi_square_survival(double statistic, double dof);

enum class BaselineMethod { Cva, PcaKmeans, Irmad, Sfa };

std::optional<BaselineMethod> parse_baseline(std::string_view name) noexcept;
std::string_view to_string(BaselineMethod method) noexcept;

struct BaselineOptions {
    int otsu_bins = 256;
    PcaKmeansOptions pca_kmeans;
    IrmadOptions irmad;
    SfaOptions sfa;
};

ChangeMask run_baseline(BaselineMethod method, const ImagePair& pair, const BaselineOptions& options = {});

}  // namespace protochange
