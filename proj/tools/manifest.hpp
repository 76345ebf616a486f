#pragma once

// Run manifest written next to every output: what produced the directory and
// content hashes of the files it read and wrote.

#include <cstdint>
#include <string>
#include <vector>

namespace othr::cli {

/// Hex SHA-256 of a file's bytes. Throws io::IoError when unreadable.
[[nodiscard]] std::string sha256_file(const std::string& path);

[[nodiscard]] std::string sha256_hex(const std::string& bytes);

struct RunManifest {
    std::string subcommand;
    std::string config;  ///< config path, or "builtin" for the default scenario
    std::uint64_t seed = 0;
    std::string out_dir;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
};

/// Writes manifest.json into out_dir, hashing every listed input and output.
void write_manifest(const RunManifest& manifest);

/// Re-hashes the inputs recorded in a manifest and returns the ones whose
/// content changed or disappeared.
[[nodiscard]] std::vector<std::string> verify_manifest(const std::string& manifest_path);

}  // namespace othr::cli
