#pragma once

#include <cstddef>
#include <cstdint>

#include "duraflow/ingest.hpp"

namespace duraflow {

// Synthetic accident table with the documented header plus Source. Each row
// belongs to a short or long regime decided by its weather and road features.
// Durations are lognormal within a regime, with medians near 95 and 230
// minutes, and the same features push them in opposite directions. Noise is
// redrawn so every short duration stays below 164 minutes and every long one
// above it. About 10% of rows fall outside the default filter (other state,
// other source, or before 2016-02).
RecordBatch synthesize_records(std::size_t rows, std::uint64_t seed);

}  // namespace duraflow
