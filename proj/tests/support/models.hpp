#pragma once

#include <cstdint>
#include <vector>

#include "pairrank/common.hpp"
#include "pairrank/synth.hpp"

namespace testkit {

// Truncated (M = 1) kernel models fitted on small random samples of spec with
// random bandwidth, regularization and loss.
std::vector<pairrank::PairFunction> random_truncated_models(const pairrank::DistributionSpec& spec,
                                                            int count, std::uint64_t seed);

}  // namespace testkit
