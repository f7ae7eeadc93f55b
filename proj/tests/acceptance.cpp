// Acceptance suite: one PASS/FAIL line per criterion, each with a wall-clock limit.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "protochange/baselines.hpp"
#include "protochange/cva.hpp"
#include "protochange/metrics.hpp"
#include "protochange/pipeline.hpp"
#include "protochange/refinement.hpp"

#ifndef PROTOCHANGE_CLI
#define PROTOCHANGE_CLI "protochange"
#endif

using namespace protochange;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double a)
{
    char buf[96];
    std::snprintf(buf, sizeof(buf), f, a);
    return buf;
}

// ---------------------------------------------------------------- metrics

Outcome metrics_oracle()
{
    Rng rng(20240611);
    int exact = 0;
    const int pairs = 200;
    for (int t = 0; t < pairs; ++t) {
        const double dp = t == 0 ? 0.0 : t == 1 ? 1.0 : rng.uniform();
        const double dg = t == 0 ? 0.0 : t == 2 ? 1.0 : rng.uniform();
        ChangeMask pred(32, 32), gt(32, 32);
        for (int r = 0; r < 32; ++r)
            for (int c = 0; c < 32; ++c) {
                pred.set(r, c, rng.uniform() < dp);
                gt.set(r, c, rng.uniform() < dg);
            }
        const ClassMetrics got = class_metrics(confusion(pred, gt));

        double want[9];
        for (int cls = 0; cls <= 1; ++cls) {
            double tp = 0, fp = 0, fn = 0;
            for (int r = 0; r < 32; ++r)
                for (int c = 0; c < 32; ++c) {
                    const bool p = pred.at(r, c) == (cls == 1);
                    const bool g = gt.at(r, c) == (cls == 1);
                    tp += p && g;
                    fp += p && !g;
                    fn += !p && g;
                }
            const double prec = tp + fp == 0 ? 0.0 : tp / (tp + fp);
            const double rec = tp + fn == 0 ? 0.0 : tp / (tp + fn);
            const double f1 = prec + rec == 0 ? 0.0 : 2.0 * prec * rec / (prec + rec);
            const double iou = tp + fp + fn == 0 ? 0.0 : tp / (tp + fp + fn);
            want[cls * 4 + 0] = prec;
            want[cls * 4 + 1] = rec;
            want[cls * 4 + 2] = f1;
            want[cls * 4 + 3] = iou;
        }
        double agree = 0;
        for (int r = 0; r < 32; ++r)
            for (int c = 0; c < 32; ++c) agree += pred.at(r, c) == gt.at(r, c);
        want[8] = agree / 1024.0;

        const double have[9] = {got.precision0, got.recall0, got.f1_0, got.iou0, got.precision1,
                                got.recall1,    got.f1_1,    got.iou1, got.accuracy};
        exact += std::equal(std::begin(have), std::end(have), std::begin(want));
    }
    return {exact == pairs, std::to_string(exact) + "/" + std::to_string(pairs) + " pairs exact on all nine columns"};
}

// ---------------------------------------------------------------- PCA

Eigen::MatrixXd random_matrix(Rng& rng, int n, int d)
{
    Eigen::MatrixXd x(n, d);
    Eigen::MatrixXd mix(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) mix(i, j) = rng.normal();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = rng.normal() * (1.0 + j);
    return x * mix + Eigen::MatrixXd::Constant(n, d, 3.0);
}

Outcome pca_suite()
{
    Rng rng(8);
    double worst_ortho = 0.0, worst_eig = 0.0;
    bool sorted = true, optimal = true;
    for (int t = 0; t < 50; ++t) {
        const Eigen::MatrixXd x = random_matrix(rng, 500, 8);
        const PcaResult full = pca_fit_transform(x, 8);
        const Eigen::MatrixXd gram = full.model.components * full.model.components.transpose();
        worst_ortho = std::max(worst_ortho, (gram - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff());

        const Eigen::VectorXd& ev = full.model.explained_variance;
        for (int i = 1; i < ev.size(); ++i) sorted = sorted && ev(i) <= ev(i - 1);

        const Eigen::MatrixXd centred = x.rowwise() - x.colwise().mean();
        const Eigen::MatrixXd cov = centred.transpose() * centred / 499.0;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dense(cov);
        const Eigen::VectorXd desc = dense.eigenvalues().reverse();
        worst_eig = std::max(worst_eig, (desc - ev).cwiseAbs().maxCoeff());

        const PcaResult one = pca_fit_transform(x, 1);
        const Eigen::VectorXd w = one.model.components.row(0).transpose();
        const double best = (centred * w).squaredNorm();
        for (int k = 0; k < 100; ++k) {
            Eigen::VectorXd u(8);
            for (int j = 0; j < 8; ++j) u(j) = rng.normal();
            u.normalize();
            optimal = optimal && (centred * u).squaredNorm() <= best;
        }
    }
    const bool pass = worst_ortho < 1e-8 && worst_eig < 1e-8 && sorted && optimal;
    return {pass, "orthonormality err " + fmt("%.2e", worst_ortho) + ", eigenvalue err " + fmt("%.2e", worst_eig) +
                      (sorted ? ", sorted" : ", NOT sorted") + (optimal ? ", rank-1 optimal" : ", NOT optimal")};
}

// ---------------------------------------------------------------- k-means

double partition_inertia(const Eigen::MatrixXd& x, unsigned bits)
{
    double total = 0.0;
    for (int side = 0; side <= 1; ++side) {
        Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(x.cols());
        int n = 0;
        for (int i = 0; i < x.rows(); ++i)
            if (((bits >> i) & 1u) == static_cast<unsigned>(side)) {
                sum += x.row(i);
                ++n;
            }
        if (n == 0) return std::numeric_limits<double>::infinity();
        const Eigen::RowVectorXd mean = sum / n;
        for (int i = 0; i < x.rows(); ++i)
            if (((bits >> i) & 1u) == static_cast<unsigned>(side)) total += (x.row(i) - mean).squaredNorm();
    }
    return total;
}

Outcome kmeans_suite()
{
    Rng rng(31);
    bool monotone = true;
    for (int t = 0; t < 50; ++t) {
        const int n = 60 + static_cast<int>(rng.below(200));
        Eigen::MatrixXd x(n, 3);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < 3; ++j) x(i, j) = rng.normal() + (i % 3) * 1.5;
        KMeansOptions opt;
        opt.k = 2 + static_cast<int>(rng.below(4));
        opt.seed = static_cast<std::uint64_t>(t);
        const KMeansResult r = kmeans(x, opt);
        for (std::size_t i = 1; i < r.inertia_history.size(); ++i)
            monotone = monotone && r.inertia_history[i] <= r.inertia_history[i - 1];
    }

    int separated = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng g(1000 + seed);
        Eigen::MatrixXd x(100, 2);
        for (int i = 0; i < 100; ++i) {
            x(i, 0) = g.normal() + (i < 50 ? 0.0 : 10.0);
            x(i, 1) = g.normal();
        }
        KMeansOptions opt;
        opt.seed = seed;
        const KMeansResult r = kmeans(x, opt);
        bool ok = true;
        for (int i = 0; i < 100; ++i) ok = ok && (r.labels[i] == r.labels[0]) == (i < 50);
        separated += ok;
    }

    int optimal = 0;
    std::string local;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng g(5000 + seed);
        Eigen::MatrixXd x(12, 2);
        for (int i = 0; i < 12; ++i)
            for (int j = 0; j < 2; ++j) x(i, j) = g.normal() * 2.0;
        double best = std::numeric_limits<double>::infinity();
        for (unsigned bits = 1; bits < (1u << 11); ++bits) best = std::min(best, partition_inertia(x, bits));
        KMeansOptions opt;
        opt.seed = seed;
        const KMeansResult r = kmeans(x, opt);
        if (std::abs(r.inertia - best) <= 1e-9) {
            ++optimal;
        } else {
            local += " seed " + std::to_string(seed) + ": " + fmt("%.6g", r.inertia) + " vs " + fmt("%.6g", best) + ";";
        }
    }
    const bool pass = monotone && separated == 20 && optimal >= 18;
    std::string detail = std::string(monotone ? "inertia monotone" : "inertia INCREASED") + ", separation " +
                         std::to_string(separated) + "/20, exhaustive optimum " + std::to_string(optimal) + "/20";
    if (!local.empty()) detail += " (local optima:" + local + ")";
    return {pass, detail};
}

// ---------------------------------------------------------------- IRMAD

double auc(const std::vector<double>& scores, const std::vector<bool>& positive)
{
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
    double rank_sum = 0.0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k)
            if (positive[order[k]]) {
                rank_sum += avg_rank;
                ++pos;
            }
        i = j;
    }
    const double neg = static_cast<double>(scores.size() - pos);
    return (rank_sum - static_cast<double>(pos) * (pos + 1) / 2.0) / (static_cast<double>(pos) * neg);
}

Outcome irmad_suite()
{
    const int w = 64, h = 64, bands = 3;
    IrmadOptions opt;
    opt.max_iter = 500;
    Rng rng(99);
    std::vector<double> x1(static_cast<std::size_t>(w) * h * bands);
    for (double& v : x1) v = 0.45 * rng.uniform();
    std::vector<double> x2(x1.size());
    for (std::size_t i = 0; i < x1.size(); ++i) x2[i] = 2.0 * x1[i] + 0.1;
    const IrmadResult affine =
        irmad_baseline(ImagePair(RasterImage(w, h, bands, x1), RasterImage(w, h, bands, x2)), opt);

    std::vector<double> y1(x1.size()), y2(x1.size());
    std::vector<bool> altered(static_cast<std::size_t>(w) * h, false);
    Rng g(123);
    for (std::size_t i = 0; i < y1.size(); ++i) y1[i] = 0.1 + 0.35 * g.uniform();
    for (std::size_t p = 0; p < altered.size(); ++p) altered[p] = g.uniform() < 0.05;
    for (std::size_t p = 0; p < altered.size(); ++p)
        for (int b = 0; b < bands; ++b) {
            const std::size_t i = p * bands + b;
            y2[i] = std::clamp(y1[i] + 0.01 * g.normal() + (altered[p] ? 0.5 : 0.0), 0.0, 1.0);
        }
    const IrmadResult noisy =
        irmad_baseline(ImagePair(RasterImage(w, h, bands, y1), RasterImage(w, h, bands, y2)), opt);
    const double a = auc(noisy.scores.scores, altered);

    bool weights_ok = true;
    for (double v : noisy.weights) weights_ok = weights_ok && v >= 0.0 && v <= 1.0;
    const bool certificate = noisy.converged && noisy.final_delta < opt.eps &&
                             noisy.rho_history.size() == static_cast<std::size_t>(noisy.iterations) &&
                             affine.converged && weights_ok;
    const bool pass = !affine.mask.any() && a > 0.95 && certificate;
    return {pass, "affine changed px " + std::to_string(affine.mask.count()) + ", AUC " + fmt("%.4f", a) +
                      ", certificate " + (certificate ? "ok" : "MISSING") + " (" + std::to_string(noisy.iterations) +
                      " it, delta " + fmt("%.1e", noisy.final_delta) + ")"};
}

// ---------------------------------------------------------------- SFA

Outcome sfa_suite()
{
    const int w = 80, h = 80, bands = 4;
    Rng rng(4);
    std::vector<double> x(static_cast<std::size_t>(w) * h * bands), y(x.size());
    for (std::size_t p = 0; p < static_cast<std::size_t>(w) * h; ++p) {
        const double common = rng.uniform();
        for (int b = 0; b < bands; ++b) {
            x[p * bands + b] = 0.2 + 0.3 * common + 0.1 * rng.uniform() * (b + 1) / bands;
            y[p * bands + b] = std::clamp(0.8 * x[p * bands + b] + 0.05 + 0.03 * rng.normal(), 0.0, 1.0);
        }
    }
    for (int r = 20; r < 36; ++r)
        for (int c = 30; c < 50; ++c)
            for (int b = 0; b < bands; ++b) y[(static_cast<std::size_t>(r) * w + c) * bands + b] = 0.95 - 0.1 * b;

    const ImagePair pair(RasterImage(w, h, bands, x), RasterImage(w, h, bands, y));
    const SfaResult r = sfa_baseline(pair);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < r.eigenvalues.size(); ++j) {
        const Eigen::VectorXd v = r.eigenvectors.col(j);
        worst = std::max(worst, (r.sigma_delta * v - r.eigenvalues(j) * r.sigma_bar * v).norm());
    }

    const double sx[bands] = {0.7, 0.5, 0.9, 0.6}, ox[bands] = {0.1, 0.2, 0.05, 0.3};
    const double sy[bands] = {0.8, 0.6, 0.75, 0.5}, oy[bands] = {0.0, 0.15, 0.2, 0.4};
    std::vector<double> xs(x.size()), ys(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int b = static_cast<int>(i % bands);
        xs[i] = sx[b] * x[i] + ox[b];
        ys[i] = sy[b] * y[i] + oy[b];
    }
    const SfaResult scaled = sfa_baseline(ImagePair(RasterImage(w, h, bands, xs), RasterImage(w, h, bands, ys)));
    const bool identical = scaled.mask == r.mask;
    const bool pass = worst < 1e-6 && identical && r.eigenvalues.size() > 0;
    return {pass, "max residual " + fmt("%.2e", worst) + " over " + std::to_string(r.eigenvalues.size()) +
                      " pairs, rescaled mask " + (identical ? "bit-identical" : "DIFFERS") + ", changed px " +
                      std::to_string(r.mask.count())};
}

// ---------------------------------------------------------------- refinement

SegmentMap random_segments(Rng& rng, int w, int h)
{
    // Random rectangle tiling with a few background holes.
    std::vector<std::uint32_t> ids(static_cast<std::size_t>(w) * h, 0);
    std::uint32_t next = 1;
    for (int r = 0; r < h;) {
        const int rh = 3 + static_cast<int>(rng.below(12));
        for (int c = 0; c < w;) {
            const int cw = 3 + static_cast<int>(rng.below(12));
            const std::uint32_t id = rng.uniform() < 0.1 ? 0 : next++;
            for (int rr = r; rr < std::min(h, r + rh); ++rr)
                for (int cc = c; cc < std::min(w, c + cw); ++cc) ids[static_cast<std::size_t>(rr) * w + cc] = id;
            c += cw;
        }
        r += rh;
    }
    return SegmentMap::from_ids(w, h, ids);
}

Outcome refinement_suite()
{
    Rng rng(70);
    bool unions = true, monotone = true;
    for (int t = 0; t < 30; ++t) {
        const int w = 56, h = 42;
        const SegmentMap seg = random_segments(rng, w, h);
        ChangeMask coarse(w, h);
        for (int br = 0; br < h / 14; ++br)
            for (int bc = 0; bc < w / 14; ++bc)
                if (rng.uniform() < 0.4)
                    for (int r = 0; r < 14; ++r)
                        for (int c = 0; c < 14; ++c) coarse.set(br * 14 + r, bc * 14 + c, true);
        const double threshold = rng.uniform();
        const ChangeMask out = refine(coarse, seg, threshold);
        std::vector<std::size_t> inside(seg.segment_count() + 1, 0), kept(seg.segment_count() + 1, 0);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                inside[seg.at(r, c)] += coarse.at(r, c);
                kept[seg.at(r, c)] += out.at(r, c);
            }
        unions = unions && kept[0] == 0;
        for (std::uint32_t id = 1; id <= seg.segment_count(); ++id) {
            const bool want = static_cast<double>(inside[id]) / static_cast<double>(seg.size(id)) > threshold;
            unions = unions && kept[id] == (want ? seg.size(id) : 0);
        }

        std::vector<double> ts(20);
        for (double& v : ts) v = rng.uniform();
        std::sort(ts.begin(), ts.end());
        ChangeMask prev = refine(coarse, seg, ts[0]);
        for (std::size_t i = 1; i < ts.size(); ++i) {
            const ChangeMask cur = refine(coarse, seg, ts[i]);
            for (std::size_t p = 0; p < cur.size(); ++p) monotone = monotone && (!cur.values()[p] || prev.values()[p]);
            prev = cur;
        }
    }

    auto overlap_case = [](int inside_px) {
        std::vector<std::uint32_t> ids(20 * 20, 0);
        ChangeMask coarse(20, 20);
        int placed = 0;
        for (int r = 0; r < 10; ++r)
            for (int c = 0; c < 10; ++c) {
                ids[static_cast<std::size_t>(r) * 20 + c] = 5;
                if (placed++ < inside_px) coarse.set(r, c, true);
            }
        return refine(coarse, SegmentMap::from_ids(20, 20, ids), 0.7).count();
    };
    const std::size_t at70 = overlap_case(70), at71 = overlap_case(71);
    const bool pass = unions && monotone && at70 == 0 && at71 == 100;
    return {pass, std::string(unions ? "segment unions" : "PARTIAL segments") + ", 70% -> " + std::to_string(at70) +
                      " px, 71% -> " + std::to_string(at71) + " px, " + (monotone ? "monotone" : "NOT monotone")};
}

// ---------------------------------------------------------------- end to end

PipelineConfig scene_config(const std::filesystem::path& dir, const fixtures::ChangeScene& scene)
{
    const auto mask_path = dir / "prototype.png";
    save_mask(fixtures::square_mask(256, 256, scene.squares[0]), mask_path);
    PipelineConfig config;
    apply_setting(config, "prototype.mode", "mask");
    apply_setting(config, "prototype.source", "post");
    apply_setting(config, "prototype.mask", mask_path.string());
    apply_setting(config, "refine.source", "post");
    config.seed = 7;
    return config;
}

Outcome end_to_end()
{
    const auto dir = fixtures::scratch_dir("acceptance_e2e");
    const fixtures::ChangeScene scene = fixtures::three_squares(7);
    const PipelineConfig config = scene_config(dir, scene);
    DetectOptions opts;
    opts.label = scene.truth;
    const DetectResult r = detect(scene.pair, config, opts);
    const ClassMetrics refined = class_metrics(confusion(r.mask, scene.truth));
    const ClassMetrics coarse = class_metrics(confusion(r.coarse, scene.truth));
    const bool pass = refined.f1_1 >= 0.90 && refined.f1_1 >= coarse.f1_1;
    return {pass, "refined F1 " + fmt("%.4f", refined.f1_1) + ", coarse F1 " + fmt("%.4f", coarse.f1_1)};
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism()
{
    const auto dir = fixtures::scratch_dir("acceptance_determinism");
    const fixtures::ChangeScene scene = fixtures::three_squares(7);
    save_image(scene.pair.pre(), dir / "pre.png");
    save_image(scene.pair.post(), dir / "post.png");
    save_mask(fixtures::square_mask(256, 256, scene.squares[0]), dir / "prototype.png");

    std::vector<std::string> masks, reports;
    for (int run = 0; run < 2; ++run) {
        const auto mask = dir / ("mask" + std::to_string(run) + ".png");
        const auto report = dir / ("report" + std::to_string(run) + ".json");
        const std::string cmd = std::string("\"") + PROTOCHANGE_CLI + "\" detect --pre \"" + (dir / "pre.png").string() +
                                "\" --post \"" + (dir / "post.png").string() + "\" --prototype-mask \"" +
                                (dir / "prototype.png").string() +
                                "\" --prototype-source post --refine-source post --segments builtin --seed 7 --out \"" +
                                mask.string() + "\" --report \"" + report.string() + "\" > /dev/null";
        if (std::system(cmd.c_str()) != 0) return {false, "CLI run " + std::to_string(run) + " failed"};
        masks.push_back(slurp(mask));
        reports.push_back(slurp(report));
    }
    const bool pass = !masks[0].empty() && masks[0] == masks[1] && !reports[0].empty() && reports[0] == reports[1];
    return {pass, "mask " + std::to_string(masks[0].size()) + " B " + (masks[0] == masks[1] ? "identical" : "DIFFERS") +
                      ", report " + std::to_string(reports[0].size()) + " B " +
                      (reports[0] == reports[1] ? "identical" : "DIFFERS")};
}

Outcome harness()
{
    const auto root = fixtures::scratch_dir("acceptance_dataset");
    fixtures::write_dataset(root, 5, 120, 2024);
    PipelineConfig config;
    config.seed = 1;
    std::vector<EvalResult> results;
    std::size_t failed = 0;
    std::string errors;
    for (EvalMethod m : all_eval_methods()) {
        results.push_back(evaluate(root, m, config));
        failed += results.back().failed();
        for (const auto& s : results.back().samples)
            if (!s.ok) errors += " " + std::string(to_string(m)) + "/" + s.id + ": " + s.error;
    }
    const std::string table = render_eval_table(results);
    std::printf("%s", table.c_str());
    const auto lines = std::count(table.begin(), table.end(), '\n');
    const bool shaped = table.find("Pre. (0/1)") != std::string::npos && table.find("ACC") != std::string::npos &&
                        lines == 2 + static_cast<long>(all_eval_methods().size());
    const bool pass = failed == 0 && shaped;
    return {pass, std::to_string(results.size()) + " methods x 5 samples, " + std::to_string(failed) + " failed" +
                      (shaped ? ", table shaped" : ", table MALFORMED") + errors};
}

}  // namespace

int main()
{
    const std::vector<Criterion> criteria = {
        {"metrics oracle", 5.0, metrics_oracle},
        {"PCA suite", 10.0, pca_suite},
        {"k-means suite", 20.0, kmeans_suite},
        {"IRMAD", 30.0, irmad_suite},
        {"SFA", 10.0, sfa_suite},
        {"refinement", 5.0, refinement_suite},
        {"end-to-end synthetic", 60.0, end_to_end},
        {"determinism", 60.0, determinism},
        {"baseline comparison harness", 180.0, harness},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < c.limit_s;
        const bool pass = o.pass && in_time;
        failures += !pass;
        std::printf("%s  %-28s %7.2f s / %5.0f s  %s%s\n", pass ? "PASS" : "FAIL", c.name, secs, c.limit_s,
                    o.detail.c_str(), in_time ? "" : " [over time limit]");
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
