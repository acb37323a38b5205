#include "tracekg/gateway.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "tracekg/checksum.hpp"
#include "tracekg/jsonl.hpp"

namespace tracekg {

using nlohmann::json;

std::string to_string(GatewayMode mode) {
    switch (mode) {
        case GatewayMode::Live: return "live";
        case GatewayMode::Replay: return "replay";
        case GatewayMode::Record: return "record";
    }
    return "live";
}

std::string request_fingerprint(const ChatRequest& req) {
    std::string blob;
    blob.reserve(req.model.size() + req.system_text.size() + req.user_text.size() + 2);
    blob += req.model;
    blob += '\x1f';
    blob += req.system_text;
    blob += '\x1f';
    blob += req.user_text;
    return checksum_hex(blob);
}

std::map<std::string, std::string> load_fixtures(const std::filesystem::path& path) {
    std::map<std::string, std::string> fixtures;
    bool saw_header = false;
    for (const json& row : read_jsonl(path)) {
        if (!saw_header && row.contains("hash_algo")) {
            saw_header = true;
            if (row["hash_algo"] != kChecksumAlgo) {
                throw GatewayError("fixture file uses hash_algo " +
                                   row["hash_algo"].get<std::string>() + ", expected " +
                                   kChecksumAlgo);
            }
            continue;
        }
        fixtures[row.at("fingerprint").get<std::string>()] = row.at("response").get<std::string>();
    }
    return fixtures;
}

void save_fixtures(const std::filesystem::path& path,
                   const std::map<std::string, std::string>& fixtures) {
    std::vector<json> rows;
    rows.push_back(json{{"version", 1}, {"hash_algo", kChecksumAlgo}});
    for (const auto& [fp, response] : fixtures) {
        rows.push_back(json{{"fingerprint", fp}, {"response", response}});
    }
    write_jsonl(path, rows);
}

ReplayGateway::ReplayGateway(std::map<std::string, std::string> fixtures)
    : fixtures_(std::move(fixtures)) {}

ReplayGateway ReplayGateway::from_file(const std::filesystem::path& path) {
    return ReplayGateway(load_fixtures(path));
}

std::string ReplayGateway::send(const ChatRequest& req, SendStats* stats) {
    if (stats) stats->attempts = 1;
    auto it = fixtures_.find(request_fingerprint(req));
    if (it == fixtures_.end()) {
        throw FixtureMiss("no fixture for fingerprint " + request_fingerprint(req) +
                          " (request_id=" + req.request_id + ")");
    }
    return it->second;
}

namespace {

// Blocks senders so that at most `limit` requests are in flight.
class InFlightLimiter {
  public:
    explicit InFlightLimiter(int limit) : limit_(limit > 0 ? limit : 1) {}

    void acquire() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return active_ < limit_; });
        ++active_;
    }
    void release() {
        {
            std::lock_guard lock(mu_);
            --active_;
        }
        cv_.notify_one();
    }

  private:
    std::mutex mu_;
    std::condition_variable cv_;
    int limit_;
    int active_ = 0;
};

struct InFlightGuard {
    InFlightLimiter& limiter;
    explicit InFlightGuard(InFlightLimiter& l) : limiter(l) { limiter.acquire(); }
    ~InFlightGuard() { limiter.release(); }
};

class HttpGateway : public Gateway {
  public:
    explicit HttpGateway(GatewayConfig config)
        : config_(std::move(config)), limiter_(config_.max_in_flight) {}

    std::string send(const ChatRequest& req, SendStats* stats) override {
        InFlightGuard guard(limiter_);
        const char* key = std::getenv(config_.credential_env_var.c_str());
        if (!key || !*key) {
            throw CredentialMissing("environment variable " + config_.credential_env_var +
                                    " is not set");
        }

        json body;
        body["model"] = req.model.empty() ? config_.model : req.model;
        body["messages"] = json::array({
            json{{"role", "system"}, {"content", req.system_text}},
            json{{"role", "user"}, {"content", req.user_text}},
        });
        body["temperature"] = req.temperature;
        body["max_tokens"] = req.max_output_tokens;
        if (!config_.extra_params_json.empty()) {
            json extra = json::parse(config_.extra_params_json);
            for (auto& [k, v] : extra.items()) body[k] = v;
        }
        const std::string payload = body.dump();

        std::string last_cause = "no attempt made";
        const int max_attempts = std::max(1, config_.max_attempts);
        for (int attempt = 1; attempt <= max_attempts; ++attempt) {
            if (stats) stats->attempts = attempt;
            httplib::Client client(config_.endpoint_url);
            client.set_connection_timeout(std::chrono::milliseconds(
                static_cast<int>(config_.timeout_seconds * 1000)));
            client.set_read_timeout(std::chrono::milliseconds(
                static_cast<int>(config_.timeout_seconds * 1000)));
            client.set_default_headers({{"Authorization", std::string("Bearer ") + key}});

            auto res = client.Post(config_.chat_path, payload, "application/json");
            if (res && res->status == 200) {
                return extract_content(res->body);
            }
            bool retryable = false;
            if (!res) {
                last_cause = "transport error: " + httplib::to_string(res.error());
                retryable = true;
            } else if (res->status == 429 || res->status >= 500) {
                last_cause = "http status " + std::to_string(res->status);
                retryable = true;
            } else {
                last_cause = "http status " + std::to_string(res->status) + ": " + res->body;
            }
            if (!retryable || attempt == max_attempts) break;
            backoff_sleep(attempt);
        }
        throw Exhausted("gateway gave up after " +
                        std::to_string(stats ? stats->attempts : max_attempts) +
                        " attempt(s); last cause: " + last_cause);
    }

  private:
    static std::string extract_content(const std::string& body) {
        try {
            json doc = json::parse(body);
            return doc.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw Exhausted(std::string("unparseable completion payload: ") + e.what());
        }
    }

    void backoff_sleep(int attempt) const {
        thread_local std::mt19937 rng(std::random_device{}());
        std::uniform_real_distribution<double> jitter(0.5, 1.5);
        double factor = 1.0;
        for (int i = 1; i < attempt; ++i) factor *= config_.backoff_factor;
        double seconds = config_.backoff_base_seconds * factor * jitter(rng);
        std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    }

    GatewayConfig config_;
    InFlightLimiter limiter_;
};

// Live gateway that persists every new (fingerprint, response) pair.
class RecordGateway : public Gateway {
  public:
    explicit RecordGateway(GatewayConfig config)
        : live_(config), fixture_path_(config.fixture_path) {
        if (fixture_path_.empty()) throw GatewayError("record mode needs a fixture path");
        if (std::filesystem::exists(fixture_path_)) fixtures_ = load_fixtures(fixture_path_);
    }

    std::string send(const ChatRequest& req, SendStats* stats) override {
        std::string response = live_.send(req, stats);
        std::lock_guard lock(mu_);
        auto [it, inserted] = fixtures_.emplace(request_fingerprint(req), response);
        if (inserted) save_fixtures(fixture_path_, fixtures_);
        return response;
    }

  private:
    HttpGateway live_;
    std::filesystem::path fixture_path_;
    std::map<std::string, std::string> fixtures_;
    std::mutex mu_;
};

}  // namespace

std::unique_ptr<Gateway> make_gateway(const GatewayConfig& config) {
    switch (config.mode) {
        case GatewayMode::Replay:
            if (config.fixture_path.empty()) throw GatewayError("replay mode needs a fixture path");
            return std::make_unique<ReplayGateway>(load_fixtures(config.fixture_path));
        case GatewayMode::Record:
            return std::make_unique<RecordGateway>(config);
        case GatewayMode::Live:
            return std::make_unique<HttpGateway>(config);
    }
    return std::make_unique<HttpGateway>(config);
}

}  // namespace tracekg
