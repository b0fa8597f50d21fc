#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bfae {

enum class ErrorCode {
    invalid_interval,
    too_few_points,
    length_mismatch,
    out_of_range,
    shape_mismatch,
    non_finite,
    invalid_argument,
    cholesky_failure,
    stale_cache,
    inconsistent_shapes,
    latent_index_out_of_range,
    divergence,
    degenerate_data,
    single_class,
    singular_system,
    missing_file,
    malformed_row,
    ragged_rows,
    io_failure,
    invalid_config,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception; `code()` identifies the failure class.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace bfae
