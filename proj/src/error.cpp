#include "dru/error.hpp"

namespace dru {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::parameter: return "parameter error";
        case ErrorCode::input_shape: return "input-shape error";
        case ErrorCode::numeric: return "numeric error";
        case ErrorCode::configuration: return "configuration error";
        case ErrorCode::infeasible: return "infeasibility error";
        case ErrorCode::schema: return "schema error";
        case ErrorCode::estimation: return "estimation error";
        case ErrorCode::undefined_score: return "undefined-score error";
        case ErrorCode::io: return "I/O error";
        case ErrorCode::parse: return "parse error";
    }
    return "error";
}

}  // namespace dru
