#pragma once

#include <stdexcept>

#include "tracekg/gateway.hpp"
#include "tracekg/ontology.hpp"
#include "tracekg/prompts.hpp"

namespace tracekg {

/// A model response that could not be parsed into the expected shape.
struct UnparseableResponse : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LlmOptions {
    std::string model = "default-model";
    double extract_temperature = 0.7;
    int extract_max_tokens = 32768;
    double judge_temperature = 0.1;
    int judge_max_tokens = 65536;
};

/// Everything an LLM-backed operation needs besides its own inputs.
struct LlmContext {
    Gateway& gateway;
    const PromptLibrary& prompts;
    const OntologyVocab& vocab;
    LlmOptions options;
};

}  // namespace tracekg
