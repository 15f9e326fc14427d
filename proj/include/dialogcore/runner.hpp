#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dialogcore/corpus.hpp"
#include "dialogcore/http.hpp"

namespace dialogcore {

// The opening instruction given to both agents for each condition.
std::string_view seed_prompt(Condition condition);

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct Turn {
    Agent agent = Agent::A;
    std::string text;
};

// System message with the seed prompt, then the history seen from next_agent:
// its own turns as "assistant", the partner's as "user". With concat_prompt the
// whole transcript is folded into a single user message instead.
std::vector<ChatMessage> build_messages(Condition condition, const std::vector<Turn>& history, Agent next_agent,
                                        bool concat_prompt = false);

struct SamplingParams {
    double temperature = 0.7;
    double top_p = 0.9;
    int max_tokens = 128;
    std::optional<std::int64_t> seed;
};

/// One OpenAI-compatible chat-completions endpoint.
class ChatClient {
  public:
    // `endpoint` is the server base URL; requests go to {endpoint}/v1/chat/completions.
    ChatClient(const std::string& endpoint, std::string model, SamplingParams sampling, http::RetryPolicy retry = {});

    std::string request_body(const std::vector<ChatMessage>& messages) const;
    // Content of the first choice. Throws ServiceError after retries.
    std::string complete(const std::vector<ChatMessage>& messages) const;

  private:
    http::Url url_;
    std::string model_;
    SamplingParams sampling_;
    http::RetryPolicy retry_;
};

struct GenerationConfig {
    std::string endpoint_a;
    std::string endpoint_b;
    std::string model_a;
    std::string model_b;
    Condition condition = Condition::neutral;
    std::size_t dialogs = 30;
    std::size_t turns = 10;
    SamplingParams sampling;
    int max_inflight = 4;
    bool concat_prompt = false;
    http::RetryPolicy retry;

    void validate() const;
};

// "{model_a}__{model_b}__{condition}__{k}".
std::string make_dialog_id(const std::string& model_a, const std::string& model_b, Condition condition, std::size_t k);

struct DialogIdParts {
    std::string model_a;
    std::string model_b;
    std::string condition;
    std::size_t index = 0;
};

// Inverse of make_dialog_id. The index and condition are taken from the right;
// the remainder splits into the two models at its first "__".
DialogIdParts parse_dialog_id(std::string_view id);

struct GenerationReport {
    std::size_t completed = 0;  // written in this run
    std::size_t resumed = 0;    // already present in the output file
    std::size_t failed = 0;
    std::size_t empty_responses = 0;  // replaced by "..."
    std::vector<std::string> failed_ids;

    bool partial() const { return failed > 0; }
};

// Generates config.dialogs dialogs of config.turns alternating turns and
// appends each to `out_path` as one JSONL line, in dialog-index order. Dialogs
// already present in the file are skipped, and a torn final line is dropped.
// Warnings and failures go to `out_path + ".log"` as JSON lines.
GenerationReport generate_dialogs(const GenerationConfig& config, const std::string& out_path);

}  // namespace dialogcore
