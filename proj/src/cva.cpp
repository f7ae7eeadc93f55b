#include <cmath>

#include "protochange/cva.hpp"
#include "protochange/error.hpp"

namespace protochange {

ChangeVectors build_change_vectors(const DifferenceMap& s21, const DifferenceMap& s11, const DifferenceMap& s22)
{
    if (!s21.same_shape(s11) || !s21.same_shape(s22))
        throw Error(ErrorCode::ShapeMismatch, "difference maps must share grid and dimension");

    const int d = s21.dim();
    const auto n = static_cast<Eigen::Index>(s21.grid().cells());
    ChangeVectors out{s21.grid(), d, Eigen::MatrixXd(n, 3 * d)};
    const DifferenceMap* blocks[3] = {&s21, &s11, &s22};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int b = 0; b < 3; ++b) {
            const auto cell = blocks[b]->cell(static_cast<std::size_t>(i));
            for (int j = 0; j < d; ++j) out.data(i, b * d + j) = cell[j];
        }
    }
    return out;
}

ClusterVote assign_change_cluster(std::span<const int> labels, std::span<const CellIndex> proto_cells,
                                  const DifferenceMap& s21, int k)
{
    if (proto_cells.empty()) throw Error(ErrorCode::EmptyPrototypeCells, "prototype covers no grid cell");
    const PatchGrid& grid = s21.grid();
    if (labels.size() != grid.cells())
        throw Error(ErrorCode::ShapeMismatch, "labels do not cover the grid");

    ClusterVote vote;
    vote.tally.assign(k, 0);
    for (const CellIndex& cell : proto_cells) {
        if (cell.row < 0 || cell.col < 0 || cell.row >= grid.rows || cell.col >= grid.cols)
            throw Error(ErrorCode::OutOfBounds, "prototype cell outside the grid");
        const int label = labels[static_cast<std::size_t>(cell.row) * grid.cols + cell.col];
        if (label < 0 || label >= k) throw Error(ErrorCode::InvalidArgument, "label outside [0, k)");
        ++vote.tally[label];
    }

    std::vector<double> norm_sum(k, 0.0);
    std::vector<std::size_t> members(k, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto v = s21.cell(i);
        double sq = 0.0;
        for (double x : v) sq += x * x;
        norm_sum[labels[i]] += std::sqrt(sq);
        ++members[labels[i]];
    }
    vote.mean_s21_norm.resize(k);
    for (int j = 0; j < k; ++j) vote.mean_s21_norm[j] = members[j] ? norm_sum[j] / members[j] : 0.0;

    std::size_t top = 0;
    for (auto t : vote.tally) top = std::max(top, t);
    int winner = -1;
    int tied = 0;
    for (int j = 0; j < k; ++j) {
        if (vote.tally[j] != top) continue;
        ++tied;
        if (winner < 0 || vote.mean_s21_norm[j] > vote.mean_s21_norm[winner]) winner = j;
    }
    vote.cluster = winner;
    vote.tie_broken = tied > 1;
    return vote;
}

std::size_t CoarseChangeMap::changed_count() const noexcept
{
    std::size_t n = 0;
    for (auto c : cells) n += c;
    return n;
}

CoarseChangeMap coarse_map(std::span<const int> labels, int change_id, const PatchGrid& grid)
{
    if (labels.size() != grid.cells()) throw Error(ErrorCode::ShapeMismatch, "labels do not cover the grid");
    CoarseChangeMap out{grid, std::vector<std::uint8_t>(grid.cells())};
    for (std::size_t i = 0; i < labels.size(); ++i) out.cells[i] = labels[i] == change_id ? 1 : 0;
    return out;
}

ChangeMask upsample(const CoarseChangeMap& coarse)
{
    const PatchGrid& g = coarse.grid;
    ChangeMask mask(g.cols * g.patch, g.rows * g.patch);
    for (int r = 0; r < g.rows; ++r) {
        for (int c = 0; c < g.cols; ++c) {
            if (!coarse.cells[static_cast<std::size_t>(r) * g.cols + c]) continue;
            for (int y = 0; y < g.patch; ++y)
                for (int x = 0; x < g.patch; ++x) mask.set(r * g.patch + y, c * g.patch + x, true);
        }
    }
    return mask;
}

}  // namespace protochange
