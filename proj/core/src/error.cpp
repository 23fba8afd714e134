#include "fabl/error.hpp"

namespace fabl {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::joint_count_mismatch: return "JointCountMismatch";
    case ErrorCode::non_finite_coordinate: return "NonFiniteCoordinate";
    case ErrorCode::too_short: return "TooShort";
    case ErrorCode::model_mismatch: return "ModelMismatch";
    case ErrorCode::missing_mapping: return "MissingMapping";
    case ErrorCode::index_out_of_range: return "IndexOutOfRange";
    case ErrorCode::invalid_body_model: return "InvalidBodyModel";
    case ErrorCode::empty_range: return "EmptyRange";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::layout_mismatch: return "LayoutMismatch";
    case ErrorCode::empty_training_set: return "EmptyTrainingSet";
    case ErrorCode::invalid_training_set: return "InvalidTrainingSet";
    case ErrorCode::singular_system: return "SingularSystem";
    case ErrorCode::non_finite_objective: return "NonFiniteObjective";
    case ErrorCode::missing_subject_ids: return "MissingSubjectIds";
    case ErrorCode::single_subject: return "SingleSubject";
    case ErrorCode::empty_test_set: return "EmptyTestSet";
    case ErrorCode::out_of_range_label: return "OutOfRangeLabel";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::header_mismatch: return "HeaderMismatch";
    case ErrorCode::frame_size_error: return "FrameSizeError";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    }
    return "UnknownError";
}

} // namespace fabl
