#include "bfae/error.hpp"

namespace bfae {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_interval: return "invalid-interval";
        case ErrorCode::too_few_points: return "too-few-points";
        case ErrorCode::length_mismatch: return "length-mismatch";
        case ErrorCode::out_of_range: return "out-of-range";
        case ErrorCode::shape_mismatch: return "shape-mismatch";
        case ErrorCode::non_finite: return "non-finite";
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::cholesky_failure: return "cholesky-failure";
        case ErrorCode::stale_cache: return "stale-cache";
        case ErrorCode::inconsistent_shapes: return "inconsistent-shapes";
        case ErrorCode::latent_index_out_of_range: return "latent-index-out-of-range";
        case ErrorCode::divergence: return "divergence";
        case ErrorCode::degenerate_data: return "degenerate";
        case ErrorCode::single_class: return "single-class";
        case ErrorCode::singular_system: return "singular-system";
        case ErrorCode::missing_file: return "missing-file";
        case ErrorCode::malformed_row: return "malformed-row";
        case ErrorCode::ragged_rows: return "ragged-rows";
        case ErrorCode::io_failure: return "io-failure";
        case ErrorCode::invalid_config: return "invalid-config";
    }
    return "unknown";
}

}  // namespace bfae
