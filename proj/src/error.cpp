#include "vcd/error.hpp"

namespace vcd {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDuplicateEntityId: return "DuplicateEntityId";
    case ErrorCode::kDanglingEdgeEndpoint: return "DanglingEdgeEndpoint";
    case ErrorCode::kSelfLoopEdge: return "SelfLoopEdge";
    case ErrorCode::kDuplicateEdge: return "DuplicateEdge";
    case ErrorCode::kUnknownEntity: return "UnknownEntity";
    case ErrorCode::kInvalidBox: return "InvalidBox";
    case ErrorCode::kNonPositiveExtent: return "NonPositiveExtent";
    case ErrorCode::kNonFiniteCost: return "NonFiniteCost";
    case ErrorCode::kEmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorCode::kZeroReachableRecall: return "ZeroReachableRecall";
    case ErrorCode::kZeroMeanRecall: return "ZeroMeanRecall";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMissingTag: return "MissingTag";
    case ErrorCode::kMalformedList: return "MalformedList";
    case ErrorCode::kWrongKeyCount: return "WrongKeyCount";
    case ErrorCode::kBadBox: return "BadBox";
    case ErrorCode::kUnknownGroundTruthRef: return "UnknownGroundTruthRef";
    case ErrorCode::kPayloadTooLarge: return "PayloadTooLarge";
    case ErrorCode::kMalformedBody: return "MalformedBody";
    case ErrorCode::kTemplateFieldMissing: return "TemplateFieldMissing";
    case ErrorCode::kScriptExhausted: return "ScriptExhausted";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kTransportFailure: return "TransportFailure";
    case ErrorCode::kRateLimited: return "RateLimited";
    case ErrorCode::kAuthFailure: return "AuthFailure";
    case ErrorCode::kNonRetriableServerError: return "NonRetriableServerError";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kUnvisitedNode: return "UnvisitedNode";
    case ErrorCode::kBackendFailure: return "BackendFailure";
    case ErrorCode::kAllChildrenMalformed: return "AllChildrenMalformed";
    case ErrorCode::kUnreadableFile: return "UnreadableFile";
    case ErrorCode::kUnwritablePath: return "UnwritablePath";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
  }
  return "Unknown";
}

}  // namespace vcd
