#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace protochange {

enum class ErrorCode {
    MissingFile,
    UnsupportedFormat,
    CorruptData,
    DimensionMismatch,
    EmptyDataset,
    UnmatchedFile,
    NotMultiple,
    ModelLoadFailure,
    ShapeMismatch,
    EmptyMask,
    OutOfBounds,
    NoSegments,
    InvalidComponentCount,
    DegenerateData,
    TooFewPoints,
    EmptyPrototypeCells,
    ConstantScores,
    TooSmallImage,
    SingularCovariance,
    EmptyMatrix,
    InvalidArgument,
    InvalidConfig,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a machine-checkable code.
/// `stage` is filled in by the pipeline when an error crosses a stage boundary.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string stage = {});

    ErrorCode code() const noexcept { return code_; }
    const std::string& stage() const noexcept { return stage_; }
    const std::string& detail() const noexcept { return detail_; }

    /// Same error, annotated with the pipeline stage it escaped from.
    Error at_stage(std::string stage) const;

private:
    ErrorCode code_;
    std::string stage_;
    std::string detail_;
};

}  // namespace protochange
