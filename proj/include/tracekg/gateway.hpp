#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>

namespace tracekg {

struct GatewayError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CredentialMissing : GatewayError {
    using GatewayError::GatewayError;
};
/// All attempts failed; message carries the last cause.
struct Exhausted : GatewayError {
    using GatewayError::GatewayError;
};
/// Replay mode saw a fingerprint with no recorded response.
struct FixtureMiss : GatewayError {
    using GatewayError::GatewayError;
};

enum class GatewayMode { Live, Replay, Record };

std::string to_string(GatewayMode mode);

struct ChatRequest {
    std::string model;
    std::string system_text;
    std::string user_text;
    double temperature = 0.7;
    int max_output_tokens = 32768;
    std::string request_id;
};

/// Stable hash of (model, system_text, user_text). Sampling parameters are
/// excluded so fixtures survive tuning.
std::string request_fingerprint(const ChatRequest& req);

struct GatewayConfig {
    std::string endpoint_url = "https://api.openai.com";
    std::string chat_path = "/v1/chat/completions";
    std::string credential_env_var = "TRACEKG_API_KEY";
    std::string model = "default-model";
    double timeout_seconds = 120.0;
    int max_attempts = 4;
    int max_in_flight = 4;
    GatewayMode mode = GatewayMode::Live;
    std::string fixture_path;
    double backoff_base_seconds = 1.0;
    double backoff_factor = 2.0;
    /// Optional JSON object merged into the request body (for endpoint
    /// extensions with no portable wire field).
    std::string extra_params_json;
};

struct SendStats {
    int attempts = 0;
};

/// Single boundary to any LLM. Implementations are safe for concurrent use.
class Gateway {
  public:
    virtual ~Gateway() = default;
    virtual std::string send(const ChatRequest& req, SendStats* stats = nullptr) = 0;
};

/// Deterministic gateway answering from recorded fingerprint->response pairs.
class ReplayGateway : public Gateway {
  public:
    explicit ReplayGateway(std::map<std::string, std::string> fixtures);
    static ReplayGateway from_file(const std::filesystem::path& path);

    std::string send(const ChatRequest& req, SendStats* stats = nullptr) override;

  private:
    std::map<std::string, std::string> fixtures_;
};

/// Fixture file: JSONL, header row {"version","hash_algo"} then
/// {"fingerprint","response"} rows.
std::map<std::string, std::string> load_fixtures(const std::filesystem::path& path);
void save_fixtures(const std::filesystem::path& path,
                   const std::map<std::string, std::string>& fixtures);

std::unique_ptr<Gateway> make_gateway(const GatewayConfig& config);

}  // namespace tracekg
