#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace tracekg {

/// Provenance sidecar emitted next to every output file.
struct RunManifest {
    std::string command;
    std::string gateway_mode;
    std::map<std::string, std::string> config_checksums;
    std::vector<std::filesystem::path> inputs;
    std::vector<std::filesystem::path> outputs;
    std::string started_at;
    std::string finished_at;
};

std::string utc_timestamp();

/// "pairs.jsonl" + tag "rejects" + ext ".jsonl" -> "pairs.rejects.jsonl".
std::filesystem::path sidecar_path(const std::filesystem::path& out, const std::string& tag,
                                   const std::string& ext);

/// Writes <out stem>.manifest.json; input/output checksums are computed from
/// the files as they exist on disk.
void write_manifest(const std::filesystem::path& out_path, const RunManifest& manifest);

}  // namespace tracekg
