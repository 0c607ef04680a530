#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace davide::manifest {

/* Reproducibility sidecar written next to the report CSVs. Records exactly
 * what produced a run; the config hash lets a later rerun prove the inputs
 * did not drift. */
struct RunManifest {
    std::string artifact_version = "0.1.0";
    std::string config_path;
    std::string config_hash;    // fnv1a-64 of the config bytes, 16 hex digits
    std::string workload;       // "swf:<path>" or "synth:<n_jobs>"
    std::uint64_t seed = 0;
    std::string out_dir;
};

std::string hash_hex(std::string_view bytes);

std::string render_manifest(const RunManifest& m);

// Strict inverse of render_manifest; unknown or missing keys are errors.
RunManifest parse_manifest(const std::string& text);

// Tamper check: the recorded hash must match the config bytes as they are now.
void verify_config_hash(const RunManifest& m, std::string_view config_bytes);

}  // namespace davide::manifest
