#include "davide/manifest.hpp"

#include <cerrno>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>

#include "davide/errors.hpp"
#include "davide/ini.hpp"
#include "davide/rng.hpp"

namespace davide::manifest {

std::string hash_hex(std::string_view bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, rng::fnv1a64(bytes));
    return buf;
}

std::string render_manifest(const RunManifest& m) {
    std::string out = "[run]\n";
    out += "artifact_version = " + m.artifact_version + "\n";
    out += "config = " + m.config_path + "\n";
    out += "config_hash = " + m.config_hash + "\n";
    out += "workload = " + m.workload + "\n";
    out += "seed = " + std::to_string(m.seed) + "\n";
    out += "out = " + m.out_dir + "\n";
    return out;
}

RunManifest parse_manifest(const std::string& text) {
    const auto doc = ini::parse(text);
    const auto* run = doc.find("run");
    if (!run) throw ParseError("manifest: missing [run] section");
    RunManifest m;
    bool have_version = false, have_config = false, have_hash = false, have_workload = false,
         have_seed = false, have_out = false;
    for (const auto& e : run->entries) {
        if (e.key == "artifact_version") {
            m.artifact_version = e.value;
            have_version = true;
        } else if (e.key == "config") {
            m.config_path = e.value;
            have_config = true;
        } else if (e.key == "config_hash") {
            if (e.value.size() != 16 || e.value.find_first_not_of("0123456789abcdef") != std::string::npos)
                throw ParseError("manifest: config_hash must be 16 lowercase hex digits", e.line);
            m.config_hash = e.value;
            have_hash = true;
        } else if (e.key == "workload") {
            if (e.value.rfind("swf:", 0) != 0 && e.value.rfind("synth:", 0) != 0)
                throw ParseError("manifest: workload must be swf:<path> or synth:<n>", e.line);
            m.workload = e.value;
            have_workload = true;
        } else if (e.key == "seed") {
            errno = 0;
            char* endp = nullptr;
            const auto v = std::strtoull(e.value.c_str(), &endp, 10);
            if (errno != 0 || endp == e.value.c_str() || *endp != '\0' ||
                e.value.find('-') != std::string::npos)
                throw ParseError("manifest: seed must be an unsigned integer", e.line);
            m.seed = v;
            have_seed = true;
        } else if (e.key == "out") {
            m.out_dir = e.value;
            have_out = true;
        } else {
            throw ParseError("manifest: unknown key '" + e.key + "'", e.line);
        }
    }
    if (!have_version || !have_config || !have_hash || !have_workload || !have_seed || !have_out)
        throw ParseError("manifest: required keys are artifact_version, config, config_hash, workload, seed, out");
    return m;
}

void verify_config_hash(const RunManifest& m, std::string_view config_bytes) {
    const auto now = hash_hex(config_bytes);
    if (now != m.config_hash)
        throw DomainError("config hash mismatch: manifest records " + m.config_hash + ", file hashes to " + now);
}

}  // namespace davide::manifest
