#pragma once

#include <optional>
#include <string>
#include <vector>

namespace stubshrink::report {

// All byte counts are canonical-printed bytes of the analyzed closure
// (sources plus production dependencies, excluding tests and dev deps).
struct SizeReport {
  std::size_t originalBytes = 0;
  std::size_t stubbedBytes = 0;
  struct FileSizes {
    std::string path;
    std::size_t originalBytes = 0;
    std::size_t stubbedBytes = 0;
  };
  std::vector<FileSizes> perFile;

  // Filled by the bench harness over a client set; a run's expanded size is
  // stubbedBytes plus the first-fetch bytes of its expansion log.
  std::optional<std::pair<std::size_t, std::size_t>> expandedBytesRange;

  double reductionPct() const {
    if (originalBytes == 0) return 0.0;
    return 100.0 * (1.0 - double(stubbedBytes) / double(originalBytes));
  }
  // May be negative: stub boilerplate plus fetched code can exceed the
  // original size.
  double reductionAfterExpansion(std::size_t expandedBytes) const {
    if (originalBytes == 0) return 0.0;
    return 100.0 * (1.0 - double(expandedBytes) / double(originalBytes));
  }

  std::string toJson() const;
};

std::size_t expandedBytes(std::size_t stubbedBytes,
                          const std::vector<std::size_t>& firstFetchBytes);

}  // namespace stubshrink::report
