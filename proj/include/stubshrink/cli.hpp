#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace stubshrink::cli {

// Exit codes: 0 success; 1 test failure or behavior divergence; 2 guard-exit
// violation; 3 usage, parse, manifest or bundle errors.
int run(const std::vector<std::string>& args);

/// Copies a client package to `outDir` and rewrites every manifest
/// dependency that resolves to (or inside) `subjectDir` so it resolves to
/// the same location under `replacementDir` instead. This is the portable
/// equivalent of swapping the subject directory behind a symbolic link:
/// nested dependencies inside the subject follow along.
void repointClient(const std::filesystem::path& clientDir,
                   const std::filesystem::path& subjectDir,
                   const std::filesystem::path& replacementDir,
                   const std::filesystem::path& outDir);

}  // namespace stubshrink::cli
