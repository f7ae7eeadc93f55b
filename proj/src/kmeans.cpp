#include <limits>

#include "protochange/cva.hpp"
#include "protochange/error.hpp"
#include "protochange/random.hpp"

namespace protochange {

namespace {

double squared_distance(const Eigen::MatrixXd& x, Eigen::Index row, const Eigen::MatrixXd& c, Eigen::Index crow)
{
    return (x.row(row) - c.row(crow)).squaredNorm();
}

Eigen::MatrixXd plus_plus_seeding(const Eigen::MatrixXd& x, int k, Rng& rng)
{
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd centroids(k, x.cols());
    centroids.row(0) = x.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));

    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    for (int j = 1; j < k; ++j) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(x, i, centroids, j - 1));
            total += nearest[i];
        }
        Eigen::Index pick = n - 1;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double cumulative = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                cumulative += nearest[i];
                if (cumulative > target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
        }
        centroids.row(j) = x.row(pick);
    }
    return centroids;
}

}  // namespace

double kmeans_inertia(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centroids, std::span<const int> labels)
{
    double sum = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) sum += squared_distance(x, i, centroids, labels[i]);
    return sum;
}

namespace {

KMeansResult lloyd(const Eigen::MatrixXd& x, const KMeansOptions& options, Rng& rng)
{
    const int k = options.k;
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd centroids = plus_plus_seeding(x, k, rng);

    KMeansResult result;
    result.labels.assign(static_cast<std::size_t>(n), 0);
    std::vector<std::size_t> counts(k);

    for (int iter = 1; iter <= std::max(options.max_iter, 1); ++iter) {
        // Assignment: compare distances only, lowest id wins ties.
        std::fill(counts.begin(), counts.end(), 0);
        std::vector<double> dist(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = squared_distance(x, i, centroids, 0);
            for (int j = 1; j < k; ++j) {
                const double d = squared_distance(x, i, centroids, j);
                if (d < best_d) {
                    best_d = d;
                    best = j;
                }
            }
            result.labels[i] = best;
            dist[i] = best_d;
            ++counts[best];
        }

        for (int j = 0; j < k; ++j) {
            if (counts[j] != 0) continue;
            Eigen::Index far = -1;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (counts[result.labels[i]] < 2) continue;
                if (far < 0 || dist[i] > dist[far]) far = i;
            }
            --counts[result.labels[far]];
            result.labels[far] = j;
            dist[far] = 0.0;
            ++counts[j];
        }

        Eigen::MatrixXd updated = Eigen::MatrixXd::Zero(k, x.cols());
        for (Eigen::Index i = 0; i < n; ++i) updated.row(result.labels[i]) += x.row(i);
        for (int j = 0; j < k; ++j) updated.row(j) /= static_cast<double>(counts[j]);

        double shift = 0.0;
        for (int j = 0; j < k; ++j) shift = std::max(shift, (updated.row(j) - centroids.row(j)).norm());
        centroids = std::move(updated);

        result.inertia_history.push_back(kmeans_inertia(x, centroids, result.labels));
        result.iterations = iter;
        if (shift < options.tol) {
            result.converged = true;
            break;
        }
    }

    result.centroids = std::move(centroids);
    result.inertia = result.inertia_history.back();
    return result;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& x, const KMeansOptions& options)
{
    const Eigen::Index n = x.rows();
    if (options.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    if (options.n_init < 1) throw Error(ErrorCode::InvalidArgument, "n_init must be >= 1");
    if (n < options.k)
        throw Error(ErrorCode::TooFewPoints,
                    std::to_string(n) + " points cannot form " + std::to_string(options.k) + " clusters");

    Rng rng(options.seed);
    KMeansResult best = lloyd(x, options, rng);
    for (int run = 1; run < options.n_init; ++run) {
        KMeansResult r = lloyd(x, options, rng);
        if (r.inertia < best.inertia) {
            best = std::move(r);
            best.best_run = run;
        }
    }
    return best;
}

}  // namespace protochange
