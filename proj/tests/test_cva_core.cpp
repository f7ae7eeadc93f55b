#include <algorithm>
#include <numeric>

#include "protochange/cva.hpp"
#include "protochange/random.hpp"
#include "test_util.hpp"

using namespace protochange;

namespace {

DifferenceMap filled_diff(const PatchGrid& g, int dim, double base)
{
    std::vector<double> v(g.cells() * dim);
    std::iota(v.begin(), v.end(), base);
    return DifferenceMap(g, dim, std::move(v));
}

Eigen::MatrixXd random_matrix(int n, int d, std::uint64_t seed)
{
    Rng rng(seed);
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
    return x;
}

}  // namespace

TEST(ChangeVectors, ConcatenationLayout)
{
    const PatchGrid g = patch_grid(28, 28);
    const ChangeVectors cv = build_change_vectors(filled_diff(g, 2, 0.0), filled_diff(g, 2, 100.0),
                                                  filled_diff(g, 2, 200.0));
    ASSERT_EQ(cv.data.rows(), 4);
    ASSERT_EQ(cv.data.cols(), 6);
    EXPECT_EQ(cv.feature_dim, 2);
    for (int i = 0; i < 4; ++i)
        for (int d = 0; d < 2; ++d) {
            EXPECT_EQ(cv.data(i, d), 2 * i + d);
            EXPECT_EQ(cv.data(i, 2 + d), 100 + 2 * i + d);
            EXPECT_EQ(cv.data(i, 4 + d), 200 + 2 * i + d);
        }
    EXPECT_CODE(build_change_vectors(filled_diff(g, 2, 0.0), filled_diff(g, 3, 0.0), filled_diff(g, 2, 0.0)),
                ErrorCode::ShapeMismatch);
}

TEST(Pca, PointsOnALine)
{
    Eigen::MatrixXd x(5, 2);
    for (int i = 0; i < 5; ++i) x.row(i) << 1.0 + 2.0 * i, 3.0 - 1.0 * i;
    const PcaResult r = pca_fit_transform(x, 1);
    const Eigen::RowVector2d dir = Eigen::RowVector2d(2.0, -1.0).normalized();
    EXPECT_NEAR(std::abs(r.model.components.row(0).dot(dir)), 1.0, 1e-12);
    EXPECT_GT(r.model.components(0, 0), 0.0);
    EXPECT_NEAR(r.model.explained_variance(0), r.model.total_variance, 1e-10);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(r.projections(i, 0), (i - 2) * std::sqrt(5.0), 1e-10);
}

TEST(Pca, ComponentCountAndDegenerate)
{
    const Eigen::MatrixXd x = random_matrix(6, 3, 1);
    EXPECT_CODE(pca_fit_transform(x, 0), ErrorCode::InvalidComponentCount);
    EXPECT_CODE(pca_fit_transform(x, 4), ErrorCode::InvalidComponentCount);
    EXPECT_CODE(pca_fit_transform(random_matrix(2, 5, 1), 3), ErrorCode::InvalidComponentCount);
    EXPECT_CODE(pca_fit_transform(Eigen::MatrixXd::Constant(5, 3, 2.0), 1), ErrorCode::DegenerateData);
    EXPECT_CODE(pca_fit_transform(random_matrix(1, 3, 1), 1), ErrorCode::DegenerateData);
}

TEST(Pca, InvariantToTranslation)
{
    const Eigen::MatrixXd x = random_matrix(40, 5, 2);
    Eigen::MatrixXd shifted = x;
    shifted.rowwise() += Eigen::RowVectorXd::LinSpaced(5, -3.0, 7.0);
    const PcaResult a = pca_fit_transform(x, 3), b = pca_fit_transform(shifted, 3);
    EXPECT_LT((a.projections - b.projections).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((a.model.transform(x) - a.projections).cwiseAbs().maxCoeff(), 1e-12);
    for (int i = 1; i < 3; ++i) EXPECT_GE(a.model.explained_variance(i - 1), a.model.explained_variance(i));
}

TEST(KMeans, SingleClusterIsColumnMean)
{
    const Eigen::MatrixXd x = random_matrix(30, 2, 3);
    KMeansOptions opt;
    opt.k = 1;
    const KMeansResult r = kmeans(x, opt);
    EXPECT_LT((r.centroids.row(0) - x.colwise().mean()).norm(), 1e-12);
    EXPECT_TRUE(std::ranges::all_of(r.labels, [](int l) { return l == 0; }));
}

TEST(KMeans, Errors)
{
    KMeansOptions opt;
    EXPECT_CODE(kmeans(random_matrix(1, 2, 0), opt), ErrorCode::TooFewPoints);
    opt.k = 0;
    EXPECT_CODE(kmeans(random_matrix(5, 2, 0), opt), ErrorCode::InvalidArgument);
    opt.k = 2;
    opt.n_init = 0;
    EXPECT_CODE(kmeans(random_matrix(5, 2, 0), opt), ErrorCode::InvalidArgument);
}

TEST(KMeans, SeparatedGroupsAndMonotoneInertia)
{
    Eigen::MatrixXd x = random_matrix(60, 1, 4) * 0.1;
    for (int i = 30; i < 60; ++i) x(i, 0) += 10.0;
    KMeansOptions opt;
    opt.seed = 9;
    const KMeansResult r = kmeans(x, opt);
    EXPECT_TRUE(r.converged);
    for (int i = 1; i < 30; ++i) EXPECT_EQ(r.labels[i], r.labels[0]);
    for (int i = 30; i < 60; ++i) EXPECT_NE(r.labels[i], r.labels[0]);
    EXPECT_NEAR(r.inertia, kmeans_inertia(x, r.centroids, r.labels), 1e-9);
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i)
        EXPECT_LE(r.inertia_history[i], r.inertia_history[i - 1] + 1e-12);
    const KMeansResult again = kmeans(x, opt);
    EXPECT_EQ(again.labels, r.labels);
    EXPECT_EQ(again.best_run, r.best_run);
}

TEST(Vote, MajorityAndTieBreak)
{
    const PatchGrid g = patch_grid(28, 28);
    const DifferenceMap s21(g, 1, {0.1, 5.0, 0.2, 0.3});
    const std::vector<int> labels{0, 1, 0, 0};
    const std::vector<CellIndex> three_one{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    const ClusterVote v = assign_change_cluster(labels, three_one, s21);
    EXPECT_EQ(v.cluster, 0);
    EXPECT_EQ(v.tally, (std::vector<std::size_t>{3, 1}));
    EXPECT_FALSE(v.tie_broken);

    const std::vector<CellIndex> tie{{0, 0}, {0, 1}};
    const ClusterVote t = assign_change_cluster(labels, tie, s21);
    EXPECT_EQ(t.cluster, 1);
    EXPECT_TRUE(t.tie_broken);
    EXPECT_CODE(assign_change_cluster(labels, {}, s21), ErrorCode::EmptyPrototypeCells);
}

TEST(Vote, FollowsLabelPermutation)
{
    const PatchGrid g = patch_grid(42, 42);
    Rng rng(6);
    std::vector<double> s(9);
    for (double& v : s) v = rng.uniform();
    const DifferenceMap s21(g, 1, s);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<int> labels(9);
        for (int& l : labels) l = static_cast<int>(rng.below(2));
        std::vector<CellIndex> cells;
        for (int i = 0; i < 9; ++i)
            if (rng.uniform() < 0.5) cells.push_back({i / 3, i % 3});
        if (cells.empty()) continue;
        std::vector<int> swapped = labels;
        for (int& l : swapped) l = 1 - l;
        const int a = assign_change_cluster(labels, cells, s21).cluster;
        const int b = assign_change_cluster(swapped, cells, s21).cluster;
        EXPECT_EQ(b, 1 - a);
        std::vector<std::uint8_t> ca = coarse_map(labels, a, g).cells, cb = coarse_map(swapped, b, g).cells;
        EXPECT_EQ(ca, cb);
    }
}

TEST(Coarse, UpsampleFillsBlocks)
{
    const PatchGrid g = patch_grid(42, 28);
    const CoarseChangeMap c = coarse_map(std::vector<int>{0, 1, 0, 0, 0, 1}, 1, g);
    EXPECT_EQ(c.changed_count(), 2u);
    const ChangeMask m = upsample(c);
    EXPECT_EQ(m.width(), 42);
    EXPECT_EQ(m.height(), 28);
    EXPECT_EQ(m.count(), 2u * 196u);
    for (int r = 0; r < 14; ++r)
        for (int col = 14; col < 28; ++col) EXPECT_TRUE(m.at(r, col));
    EXPECT_TRUE(m.at(27, 41));
    EXPECT_FALSE(m.at(13, 13));
    EXPECT_FALSE(m.at(14, 14));
}

TEST(Pipeline, ClusteringIgnoresScale)
{
    const Eigen::MatrixXd x = random_matrix(50, 6, 12);
    const PcaResult a = pca_fit_transform(x, 1), b = pca_fit_transform(x * 7.5, 1);
    KMeansOptions opt;
    opt.seed = 3;
    EXPECT_EQ(kmeans(a.projections, opt).labels, kmeans(b.projections, opt).labels);
}
