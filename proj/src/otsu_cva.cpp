#include <algorithm>
#include <cctype>
#include <cmath>

#include "protochange/baselines.hpp"
#include "protochange/error.hpp"

namespace protochange {

int OtsuResult::bin_of(double v) const noexcept
{
    const int b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
    return std::clamp(b, 0, bins - 1);
}

double otsu_criterion(std::uint64_t n0, std::uint64_t level_sum0, std::uint64_t n_total,
                      std::uint64_t level_sum_total) noexcept
{
    const std::uint64_t n1 = n_total - n0;
    // n0*n1*(mu0 - mu1)^2 * N^2 rewritten over integer statistics.
    const double num = static_cast<double>(level_sum_total) * static_cast<double>(n0) -
                       static_cast<double>(n_total) * static_cast<double>(level_sum0);
    return num * num / (static_cast<double>(n0) * static_cast<double>(n1));
}

OtsuResult otsu_threshold(std::span<const double> scores, int bins)
{
    if (scores.empty()) throw Error(ErrorCode::ConstantScores, "no scores to threshold");
    if (bins < 2) throw Error(ErrorCode::InvalidArgument, "Otsu needs at least two bins");
    const auto [mn, mx] = std::minmax_element(scores.begin(), scores.end());
    OtsuResult r;
    r.lo = *mn;
    r.hi = *mx;
    r.bins = bins;
    if (!(r.hi > r.lo)) throw Error(ErrorCode::ConstantScores, "all scores are equal");

    std::vector<std::uint64_t> hist(bins, 0);
    for (double v : scores) ++hist[r.bin_of(v)];
    const std::uint64_t total = scores.size();
    std::uint64_t level_total = 0;
    for (int i = 0; i < bins; ++i) level_total += static_cast<std::uint64_t>(i) * hist[i];

    std::uint64_t n0 = 0;
    std::uint64_t s0 = 0;
    double best = -1.0;
    for (int cut = 1; cut < bins; ++cut) {
        n0 += hist[cut - 1];
        s0 += static_cast<std::uint64_t>(cut - 1) * hist[cut - 1];
        if (n0 == 0 || n0 == total) continue;
        const double crit = otsu_criterion(n0, s0, total, level_total);
        if (crit > best) {
            best = crit;
            r.cut = cut;
        }
    }
    r.threshold = r.lo + r.cut * (r.hi - r.lo) / bins;
    return r;
}

CvaResult cva_baseline(const ImagePair& pair, int bins)
{
    const int w = pair.width();
    const int h = pair.height();
    const int bands = pair.bands();
    CvaResult out{ScoreMap{w, h, std::vector<double>(static_cast<std::size_t>(w) * h)}, ChangeMask(w, h),
                  std::nullopt};
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double sq = 0.0;
            for (int b = 0; b < bands; ++b) {
                const double d = pair.post().at(r, c, b) - pair.pre().at(r, c, b);
                sq += d * d;
            }
            out.scores.scores[static_cast<std::size_t>(r) * w + c] = std::sqrt(sq);
        }
    }
    try {
        out.otsu = otsu_threshold(out.scores.scores, bins);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ConstantScores) throw;
        return out;  // no contrast, nothing changed
    }
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) out.mask.set(r, c, out.otsu->above(out.scores.scores[static_cast<std::size_t>(r) * w + c]));
    return out;
}

std::optional<BaselineMethod> parse_baseline(std::string_view name) noexcept
{
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "cva") return BaselineMethod::Cva;
    if (lower == "pcakmeans" || lower == "pca-kmeans") return BaselineMethod::PcaKmeans;
    if (lower == "irmad") return BaselineMethod::Irmad;
    if (lower == "sfa") return BaselineMethod::Sfa;
    return std::nullopt;
}

std::string_view to_string(BaselineMethod method) noexcept
{
    switch (method) {
    case BaselineMethod::Cva: return "cva";
    case BaselineMethod::PcaKmeans: return "pcakmeans";
    case BaselineMethod::Irmad: return "irmad";
    case BaselineMethod::Sfa: return "sfa";
    }
    return "unknown";
}

ChangeMask run_baseline(BaselineMethod method, const ImagePair& pair, const BaselineOptions& options)
{
    switch (method) {
    case BaselineMethod::Cva: return cva_baseline(pair, options.otsu_bins).mask;
    case BaselineMethod::PcaKmeans: return pca_kmeans_baseline(pair, options.pca_kmeans);
    case BaselineMethod::Irmad: return irmad_baseline(pair, options.irmad).mask;
    case BaselineMethod::Sfa: return sfa_baseline(pair, options.sfa).mask;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown baseline");
}

}  // namespace protochange
