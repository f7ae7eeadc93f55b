#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "protochange/features.hpp"
#include "protochange/prototype.hpp"
#include "protochange/raster.hpp"

namespace protochange {

/// One row per grid cell (row-major over the grid), columns [s21 | s11 | s22].
struct ChangeVectors {
    PatchGrid grid;
    int feature_dim = 0;  // D; data has 3*D columns
    Eigen::MatrixXd data;
};

ChangeVectors build_change_vectors(const DifferenceMap& s21, const DifferenceMap& s11, const DifferenceMap& s22);

struct PcaModel {
    Eigen::RowVectorXd mean;
    Eigen::MatrixXd components;          // c x d, orthonormal rows
    Eigen::VectorXd explained_variance;  // non-increasing
    double total_variance = 0.0;

    /// (x - mean) * components^T
    Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
};

struct PcaResult {
    PcaModel model;
    Eigen::MatrixXd projections;  // n x c
};

/// PCA through the SVD of the column-centred data. Each component is
/// sign-normalised so its largest-magnitude entry (first on ties) is positive.
/// Throws InvalidComponentCount unless 1 <= c <= min(n, d), and
/// DegenerateData for n < 2 or when the centred data is all zero.
PcaResult pca_fit_transform(const Eigen::MatrixXd& x, int components = 1);

struct KMeansOptions {
    int k = 2;
    std::uint64_t seed = 0;
    int max_iter = 100;
    double tol = 1e-6;
    int n_init = 10;  // seeding + Lloyd restarts; the lowest final inertia wins
};

struct KMeansResult {
    Eigen::MatrixXd centroids;  // k x c
    std::vector<int> labels;
    double inertia = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Inertia after every Lloyd iteration of the kept run; never increases.
    std::vector<double> inertia_history;
    int best_run = 0;
};

/// k-means++ seeding followed by Lloyd iterations until the largest centroid
/// shift drops below tol. A cluster that empties out takes the point farthest
/// from its own centroid. All n_init runs draw from one generator seeded with
/// `seed`; the first run with the lowest inertia is returned.
/// Throws TooFewPoints when n < k.
KMeansResult kmeans(const Eigen::MatrixXd& x, const KMeansOptions& options = {});

/// Sum of squared distances from each row to its labelled centroid.
double kmeans_inertia(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centroids, std::span<const int> labels);

struct ClusterVote {
    int cluster = 0;
    std::vector<std::size_t> tally;       // votes per cluster id
    std::vector<double> mean_s21_norm;    // mean |s21| over each cluster's cells
    bool tie_broken = false;
};

/// Majority label over the prototype cells. Ties go to the cluster whose
/// cells have the larger mean s21 magnitude, then to the lower id.
/// Throws EmptyPrototypeCells.
ClusterVote assign_change_cluster(std::span<const int> labels, std::span<const CellIndex> proto_cells,
                                  const DifferenceMap& s21, int k = 2);

struct CoarseChangeMap {
    PatchGrid grid;
    std::vector<std::uint8_t> cells;  // row-major, 1 = changed

    std::size_t changed_count() const noexcept;
};

CoarseChangeMap coarse_map(std::span<const int> labels, int change_id, const PatchGrid& grid);

/// Replicates each cell into its patch x patch pixel block.
ChangeMask upsample(const CoarseChangeMap& coarse);

}  // namespace protochange
