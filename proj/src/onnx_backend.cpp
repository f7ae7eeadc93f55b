// ONNX patch-token embedder backed by the OpenCV DNN runtime.
//
// Model contract (what the export tooling must produce):
//   input  : float32 [1, 3, H, W], RGB, ImageNet mean/std normalisation
//            already applied by this side; H and W multiples of 14
//   output : float32 [1, N, D] or [N, D] with N = (H/14) * (W/14) patch
//            tokens in row-major grid order (no class or register tokens)

#include "onnx_backend.hpp"

#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>

#include <cmath>
#include <filesystem>

#include "protochange/error.hpp"

namespace protochange::detail {

namespace {

constexpr double kMean[3] = {0.485, 0.456, 0.406};
constexpr double kStd[3] = {0.229, 0.224, 0.225};

class OnnxPatchEmbedder final : public FeatureExtractor {
public:
    OnnxPatchEmbedder(std::string path, cv::dnn::Net net, int expected_dim)
        : path_(std::move(path)), net_(std::move(net)), expected_dim_(expected_dim)
    {
    }

    BackendKind kind() const noexcept override { return BackendKind::PortableModel; }

    FeatureMap extract(const RasterImage& img) override
    {
        const PatchGrid grid = patch_grid(img.width(), img.height(), kPatchSize);
        if (img.bands() == 2)
            throw Error(ErrorCode::ShapeMismatch, "portable model needs 1 or >= 3 bands, got 2");

        const int h = img.height();
        const int w = img.width();
        const int shape[4] = {1, 3, h, w};
        cv::Mat input(4, shape, CV_32F);
        float* dst = input.ptr<float>();
        const std::size_t plane = static_cast<std::size_t>(h) * w;
        for (int ch = 0; ch < 3; ++ch) {
            const int band = img.bands() == 1 ? 0 : ch;
            for (int r = 0; r < h; ++r) {
                for (int c = 0; c < w; ++c) {
                    dst[ch * plane + static_cast<std::size_t>(r) * w + c] =
                        static_cast<float>((img.at(r, c, band) - kMean[ch]) / kStd[ch]);
                }
            }
        }

        cv::Mat out;
        try {
            net_.setInput(input);
            out = net_.forward();
        } catch (const cv::Exception& e) {
            throw Error(ErrorCode::ShapeMismatch, "inference failed for " + path_ + ": " + e.what());
        }

        int tokens = 0;
        int dim = 0;
        if (out.dims == 3 && out.size[0] == 1) {
            tokens = out.size[1];
            dim = out.size[2];
        } else if (out.dims == 2) {
            tokens = out.size[0];
            dim = out.size[1];
        } else {
            throw Error(ErrorCode::ShapeMismatch, "model output must be [1,N,D] or [N,D]");
        }
        if (static_cast<std::size_t>(tokens) != grid.cells()) {
            throw Error(ErrorCode::ShapeMismatch, "model emitted " + std::to_string(tokens) + " tokens, expected " +
                                                      std::to_string(grid.cells()) + " for a " +
                                                      std::to_string(grid.rows) + "x" + std::to_string(grid.cols) +
                                                      " grid");
        }
        if (expected_dim_ > 0 && dim != expected_dim_) {
            throw Error(ErrorCode::ShapeMismatch,
                        "model token dim " + std::to_string(dim) + " != configured " + std::to_string(expected_dim_));
        }
        if (out.type() != CV_32F) out.convertTo(out, CV_32F);
        const float* src = out.ptr<float>();
        std::vector<double> data(static_cast<std::size_t>(tokens) * dim);
        for (std::size_t i = 0; i < data.size(); ++i) data[i] = src[i];
        // NaN/inf rejection happens in the FeatureMap constructor.
        return FeatureMap(grid, dim, std::move(data));
    }

private:
    std::string path_;
    cv::dnn::Net net_;
    int expected_dim_;
};

}  // namespace

std::unique_ptr<FeatureExtractor> make_onnx_extractor(const std::string& model_path, int expected_dim)
{
    std::error_code ec;
    if (model_path.empty()) throw Error(ErrorCode::ModelLoadFailure, "no model path given for the portable backend");
    if (!std::filesystem::is_regular_file(model_path, ec))
        throw Error(ErrorCode::ModelLoadFailure, "model file not found: " + model_path);
    cv::dnn::Net net;
    try {
        net = cv::dnn::readNetFromONNX(model_path);
    } catch (const cv::Exception& e) {
        throw Error(ErrorCode::ModelLoadFailure, "cannot load model " + model_path + ": " + e.what());
    }
    if (net.empty()) throw Error(ErrorCode::ModelLoadFailure, "empty model: " + model_path);
    net.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
    net.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);
    return std::make_unique<OnnxPatchEmbedder>(model_path, std::move(net), expected_dim);
}

}  // namespace protochange::detail
