#include "stubshrink/report.hpp"

#include <json.hpp>

namespace stubshrink::report {

using nlohmann::json;

std::string SizeReport::toJson() const {
  json j;
  j["originalBytes"] = originalBytes;
  j["stubbedBytes"] = stubbedBytes;
  j["reductionPct"] = reductionPct();
  json files = json::object();
  for (const auto& f : perFile)
    files[f.path] = {{"originalBytes", f.originalBytes},
                     {"stubbedBytes", f.stubbedBytes}};
  j["perFile"] = files;
  if (expandedBytesRange) {
    j["expandedBytesRange"] = {expandedBytesRange->first,
                               expandedBytesRange->second};
    j["reductionAfterExpansionRange"] = {
        reductionAfterExpansion(expandedBytesRange->second),
        reductionAfterExpansion(expandedBytesRange->first)};
  }
  return j.dump(2) + "\n";
}

std::size_t expandedBytes(std::size_t stubbedBytes,
                          const std::vector<std::size_t>& firstFetchBytes) {
  std::size_t total = stubbedBytes;
  for (std::size_t b : firstFetchBytes) total += b;
  return total;
}

}  // namespace stubshrink::report
