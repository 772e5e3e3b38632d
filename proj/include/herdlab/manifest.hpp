#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>

#include <json.hpp>

namespace herdlab {

inline constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a 64-bit content digest; used to pin inputs and outputs in run
/// manifests and to compare outputs across reruns.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes);

/// Hex digest of a file's raw bytes.
std::string file_digest(const std::filesystem::path& file);

/// Reproducibility record of one CLI run: re-running the recorded command on
/// inputs with the same digests yields outputs with the same digests.
struct RunManifest {
    std::string command;
    nlohmann::ordered_json config;
    std::map<std::string, std::string> inputs;  // path -> digest
    std::map<std::string, std::string> outputs; // path -> digest
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;

    void add_input(const std::filesystem::path& file);
    void add_output(const std::filesystem::path& file);
    void write(const std::filesystem::path& file) const;
};

} // namespace herdlab
