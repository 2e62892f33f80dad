#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vcd {

enum class ErrorCode {
  // graph
  kDuplicateEntityId,
  kDanglingEdgeEndpoint,
  kSelfLoopEdge,
  kDuplicateEdge,
  kUnknownEntity,
  kInvalidBox,
  kNonPositiveExtent,
  // assignment / metrics
  kNonFiniteCost,
  kEmptyGroundTruth,
  kZeroReachableRecall,
  kZeroMeanRecall,
  kEmptyBatch,
  kInvalidArgument,
  // parser
  kMissingTag,
  kMalformedList,
  kWrongKeyCount,
  kBadBox,
  // reward / service
  kUnknownGroundTruthRef,
  kPayloadTooLarge,
  kMalformedBody,
  // backend
  kTemplateFieldMissing,
  kScriptExhausted,
  kTimeout,
  kTransportFailure,
  kRateLimited,
  kAuthFailure,
  kNonRetriableServerError,
  kConfigError,
  // search
  kUnvisitedNode,
  kBackendFailure,
  kAllChildrenMalformed,
  // io
  kUnreadableFile,
  kUnwritablePath,
  kSchemaViolation,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vcd
