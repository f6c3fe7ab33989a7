#pragma once

#include <stdexcept>
#include <string>

namespace degtheta {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct not_symmetric_error : error { using error::error; };
struct degenerate_form_error : error { using error::error; };
struct not_positive_definite_error : error { using error::error; };
struct not_isometry_error : error { using error::error; };
struct not_quasi_unipotent_error : error { using error::error; };
struct not_nilpotent_error : error { using error::error; };
struct invariant_inconsistency_error : error { using error::error; };
struct type_mismatch_error : error { using error::error; };
struct not_isotropic_error : error { using error::error; };
struct not_perp_error : error { using error::error; };
struct wrong_rank_error : error { using error::error; };
struct not_holomorphic_error : error { using error::error; };
struct rank_too_small_error : error { using error::error; };
struct negative_argument_error : error { using error::error; };
struct truncation_error : error { using error::error; };
struct weight_mismatch_error : error { using error::error; };
struct class_index_error : error { using error::error; };
struct fit_unstable_error : error { using error::error; };
struct not_in_w2_error : error { using error::error; };
struct config_error : error { using error::error; };

}  // namespace degtheta
