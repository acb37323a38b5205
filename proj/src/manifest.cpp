#include "tracekg/manifest.hpp"

#include <ctime>

#include <json.hpp>

#include "tracekg/checksum.hpp"
#include "tracekg/jsonl.hpp"

namespace tracekg {

using nlohmann::json;

std::string utc_timestamp() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::filesystem::path sidecar_path(const std::filesystem::path& out, const std::string& tag,
                                   const std::string& ext) {
    std::filesystem::path stem = out;
    stem.replace_extension();
    return stem.string() + "." + tag + ext;
}

void write_manifest(const std::filesystem::path& out_path, const RunManifest& manifest) {
    json doc;
    doc["command"] = manifest.command;
    doc["gateway_mode"] = manifest.gateway_mode;
    doc["config_checksums"] = manifest.config_checksums;
    auto files = [](const std::vector<std::filesystem::path>& paths) {
        json arr = json::array();
        for (const auto& p : paths) {
            json entry;
            entry["path"] = p.string();
            entry["checksum"] =
                std::filesystem::exists(p) ? file_checksum(p) : std::string("absent");
            arr.push_back(std::move(entry));
        }
        return arr;
    };
    doc["inputs"] = files(manifest.inputs);
    doc["outputs"] = files(manifest.outputs);
    doc["started_at"] = manifest.started_at;
    doc["finished_at"] = manifest.finished_at;
    write_text_file(sidecar_path(out_path, "manifest", ".json"), doc.dump(2) + "\n");
}

}  // namespace tracekg
