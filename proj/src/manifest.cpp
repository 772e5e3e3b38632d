#include "herdlab/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

#include "herdlab/errors.hpp"

namespace herdlab {

std::uint64_t fnv1a64(std::span<const unsigned char> bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string file_digest(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open file for digest: " + file.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

void RunManifest::add_input(const std::filesystem::path& file) {
    inputs[file.filename().string()] = file_digest(file);
}

void RunManifest::add_output(const std::filesystem::path& file) {
    outputs[file.filename().string()] = file_digest(file);
}

void RunManifest::write(const std::filesystem::path& file) const {
    nlohmann::ordered_json j;
    j["version"] = kToolVersion;
    j["command"] = command;
    j["config"] = config;
    j["seed"] = seed;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["wall_time_seconds"] = wall_seconds;
    std::ofstream out(file);
    if (!out) throw IoError("cannot write manifest: " + file.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + file.string());
}

} // namespace herdlab
