#pragma once

#include "scope/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace scope {

/// Central finite differences, step 1e-5, against the analytic gradients of
/// every differentiable component. One row per component with its maximum
/// relative error.
struct GradcheckRow {
  std::string component;
  Scalar max_rel_err = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckRow> rows;
  Scalar tolerance = 1e-4;

  bool passed() const {
    for (const auto& r : rows)
      if (!(r.max_rel_err < tolerance)) return false;
    return true;
  }
};

/// perturb_hook deliberately corrupts one analytic gradient so detector
/// failure paths can be exercised.
GradcheckReport run_gradcheck(std::uint64_t seed, bool perturb_hook = false);

}  // namespace scope
