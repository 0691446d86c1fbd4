#include "cohort/buckets.hpp"

#include <fmt/format.h>

#include "cohort/error.hpp"

namespace cohort {

std::size_t classify_duration(std::int64_t duration_seconds) {
    if (duration_seconds < 0) {
        throw Error(ErrorKind::Argument,
                    fmt::format("negative duration: {} s", duration_seconds));
    }
    // Buckets are few; a reverse linear probe beats binary search here.
    for (std::size_t i = kBucketCount - 1; i > 0; --i) {
        if (duration_seconds >= bucket_lower_seconds(i)) return i;
    }
    return 0;
}

}  // namespace cohort
