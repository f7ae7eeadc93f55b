#include "protochange/error.hpp"

namespace protochange {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptData: return "CorruptData";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::UnmatchedFile: return "UnmatchedFile";
    case ErrorCode::NotMultiple: return "NotMultiple";
    case ErrorCode::ModelLoadFailure: return "ModelLoadFailure";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::NoSegments: return "NoSegments";
    case ErrorCode::InvalidComponentCount: return "InvalidComponentCount";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::EmptyPrototypeCells: return "EmptyPrototypeCells";
    case ErrorCode::ConstantScores: return "ConstantScores";
    case ErrorCode::TooSmallImage: return "TooSmallImage";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& message, const std::string& stage)
{
    std::string out;
    if (!stage.empty()) out += "[" + stage + "] ";
    out += std::string(to_string(code)) + ": " + message;
    return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::string stage)
    : std::runtime_error(compose(code, message, stage)),
      code_(code),
      stage_(std::move(stage)),
      detail_(message)
{
}

Error Error::at_stage(std::string stage) const
{
    if (!stage_.empty()) return *this;
    return Error(code_, detail_, std::move(stage));
}

}  // namespace protochange
