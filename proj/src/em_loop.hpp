#pragma once

#include <span>

#include "zipem/weighted_em.hpp"

namespace zipem::detail {

/// Shared scoring/EM loop behind fit_scoring and fit_weighted_em. A complete
/// slice expands to itself with unit weights, so both entry points run the
/// exact same arithmetic on complete data.
WeightedFit run_em(const Slice& slice, const Params& init, const FitControl& ctrl,
                   std::span<const Index> units, Index time);

}  // namespace zipem::detail
