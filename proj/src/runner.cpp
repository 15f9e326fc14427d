#include "dialogcore/runner.hpp"

#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <variant>

#include <nlohmann/json.hpp>

#include "dialogcore/error.hpp"

namespace dialogcore {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n\f\v");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n\f\v");
    return std::string(s.substr(b, e - b + 1));
}

constexpr std::string_view kEmptyPlaceholder = "...";

}  // namespace

std::string_view seed_prompt(Condition condition) {
    switch (condition) {
        case Condition::cooperative: return "You and your partner work together to solve a puzzle efficiently";
        case Condition::competitive:
            return "You are competing in a negotiation and want to outwit and outperform your opponent";
        case Condition::neutral: return "You engage in casual, open-ended conversation with no specific agenda";
    }
    return "";
}

std::vector<ChatMessage> build_messages(Condition condition, const std::vector<Turn>& history, Agent next_agent,
                                        bool concat_prompt) {
    std::vector<ChatMessage> messages;
    messages.push_back({"system", std::string(seed_prompt(condition))});
    if (history.empty()) return messages;
    if (concat_prompt) {
        std::string transcript;
        for (const auto& turn : history) {
            transcript += "Agent ";
            transcript += to_string(turn.agent);
            transcript += ": ";
            transcript += turn.text;
            transcript += '\n';
        }
        transcript += "Agent ";
        transcript += to_string(next_agent);
        transcript += ':';
        messages.push_back({"user", std::move(transcript)});
        return messages;
    }
    for (const auto& turn : history) messages.push_back({turn.agent == next_agent ? "assistant" : "user", turn.text});
    return messages;
}

ChatClient::ChatClient(const std::string& endpoint, std::string model, SamplingParams sampling, http::RetryPolicy retry)
    : url_(http::Url::parse(endpoint).join("v1/chat/completions")),
      model_(std::move(model)),
      sampling_(sampling),
      retry_(retry) {}

std::string ChatClient::request_body(const std::vector<ChatMessage>& messages) const {
    nlohmann::ordered_json body;
    body["model"] = model_;
    auto list = nlohmann::ordered_json::array();
    for (const auto& m : messages) list.push_back({{"role", m.role}, {"content", m.content}});
    body["messages"] = std::move(list);
    body["temperature"] = sampling_.temperature;
    body["top_p"] = sampling_.top_p;
    body["max_tokens"] = sampling_.max_tokens;
    if (sampling_.seed) body["seed"] = *sampling_.seed;
    return body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string ChatClient::complete(const std::vector<ChatMessage>& messages) const {
    const auto what = "chat completion (" + model_ + ")";
    const auto response = http::post_json_with_retries(url_, request_body(messages), retry_, what);
    if (response.status < 200 || response.status >= 300)
        throw ServiceError(what + " returned HTTP " + std::to_string(response.status));
    nlohmann::json reply;
    try {
        reply = nlohmann::json::parse(response.body);
    } catch (const nlohmann::json::parse_error& e) {
        throw ServiceError(what + ": response is not JSON: " + e.what());
    }
    if (!reply.is_object() || !reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty())
        throw ServiceError(what + ": response has no choices");
    const auto& first = reply["choices"][0];
    if (!first.is_object() || !first.contains("message") || !first["message"].is_object())
        throw ServiceError(what + ": first choice has no message");
    const auto& message = first["message"];
    if (!message.contains("content") || message["content"].is_null()) return {};
    if (!message["content"].is_string()) throw ServiceError(what + ": message content is not a string");
    return message["content"].get<std::string>();
}

void GenerationConfig::validate() const {
    if (endpoint_a.empty() || endpoint_b.empty()) throw ValidationError("both endpoints are required");
    if (model_a.empty() || model_b.empty()) throw ValidationError("both model names are required");
    if (dialogs < 1) throw ValidationError("dialogs must be >= 1");
    if (turns < 1) throw ValidationError("turns must be >= 1");
    if (!(sampling.temperature >= 0)) throw ValidationError("temperature must be >= 0");
    if (!(sampling.top_p > 0 && sampling.top_p <= 1)) throw ValidationError("top_p must be in (0, 1]");
    if (sampling.max_tokens < 1) throw ValidationError("max_tokens must be >= 1");
    if (max_inflight < 1) throw ValidationError("max_inflight must be >= 1");
    http::Url::parse(endpoint_a);
    http::Url::parse(endpoint_b);
}

std::string make_dialog_id(const std::string& model_a, const std::string& model_b, Condition condition,
                           std::size_t k) {
    return model_a + "__" + model_b + "__" + std::string(to_string(condition)) + "__" + std::to_string(k);
}

DialogIdParts parse_dialog_id(std::string_view id) {
    auto fail = [&](const char* why) -> DialogIdParts {
        throw ValidationError("cannot parse dialog id '" + std::string(id) + "': " + why);
    };
    const auto last = id.rfind("__");
    if (last == std::string_view::npos || last == 0) return fail("expected model_a__model_b__condition__index");
    const auto index_text = id.substr(last + 2);
    if (index_text.empty() || index_text.find_first_not_of("0123456789") != std::string_view::npos)
        return fail("trailing index is not a non-negative integer");
    const auto rest = id.substr(0, last);
    const auto cond_sep = rest.rfind("__");
    if (cond_sep == std::string_view::npos) return fail("missing condition");
    DialogIdParts parts;
    parts.condition = std::string(rest.substr(cond_sep + 2));
    const auto models = rest.substr(0, cond_sep);
    const auto model_sep = models.find("__");
    if (model_sep == std::string_view::npos) return fail("missing model pair");
    parts.model_a = std::string(models.substr(0, model_sep));
    parts.model_b = std::string(models.substr(model_sep + 2));
    if (parts.model_a.empty() || parts.condition.empty()) return fail("empty component");
    parts.index = std::stoull(std::string(index_text));
    return parts;
}

namespace {

struct EmptyTurn {
    std::size_t turn_index;
};

struct DialogOutcome {
    std::variant<std::monostate, Dialog, std::string> result;  // pending | dialog | error message
    std::vector<EmptyTurn> empty_turns;
};

// Returns ids of complete lines and truncates a torn trailing line.
std::set<std::string> existing_dialog_ids(const std::string& path) {
    std::set<std::string> ids;
    if (!std::filesystem::exists(path)) return ids;
    std::string content;
    {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        content = ss.str();
    }
    const auto last_newline = content.rfind('\n');
    const std::size_t complete = last_newline == std::string::npos ? 0 : last_newline + 1;
    if (complete != content.size()) std::filesystem::resize_file(path, complete);

    std::size_t start = 0, line_no = 0;
    while (start < complete) {
        const auto end = content.find('\n', start);
        ++line_no;
        const auto line = std::string_view(content).substr(start, end - start);
        start = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ids.insert(j.at("id").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": existing output line is not a dialog: " +
                                  e.what());
        }
    }
    return ids;
}

DialogOutcome run_dialog(const GenerationConfig& config, const ChatClient& client_a, const ChatClient& client_b,
                         std::size_t k) {
    DialogOutcome outcome;
    Dialog dialog;
    dialog.id = make_dialog_id(config.model_a, config.model_b, config.condition, k);
    dialog.condition = config.condition;
    dialog.agent_a = config.model_a;
    dialog.agent_b = config.model_b;
    std::vector<Turn> history;
    try {
        for (std::size_t t = 0; t < config.turns; ++t) {
            const Agent agent = t % 2 == 0 ? Agent::A : Agent::B;
            const auto& client = agent == Agent::A ? client_a : client_b;
            const auto messages = build_messages(config.condition, history, agent, config.concat_prompt);
            auto text = trim(client.complete(messages));
            if (text.empty()) text = trim(client.complete(messages));
            if (text.empty()) {
                text = kEmptyPlaceholder;
                outcome.empty_turns.push_back({t});
            }
            history.push_back({agent, text});
            dialog.utterances.push_back({dialog.id, t, agent, std::move(text)});
        }
        outcome.result = std::move(dialog);
    } catch (const ServiceError& e) {
        outcome.result = std::string(e.what());
    }
    return outcome;
}

}  // namespace

GenerationReport generate_dialogs(const GenerationConfig& config, const std::string& out_path) {
    config.validate();
    const ChatClient client_a(config.endpoint_a, config.model_a, config.sampling, config.retry);
    const ChatClient client_b(config.endpoint_b, config.model_b, config.sampling, config.retry);

    GenerationReport report;
    const auto existing = existing_dialog_ids(out_path);
    std::vector<std::size_t> todo;
    for (std::size_t k = 0; k < config.dialogs; ++k) {
        if (existing.count(make_dialog_id(config.model_a, config.model_b, config.condition, k)))
            ++report.resumed;
        else
            todo.push_back(k);
    }

    std::ofstream out(out_path, std::ios::binary | std::ios::app);
    if (!out) throw ValidationError("cannot open output file '" + out_path + "'");
    std::ofstream log(out_path + ".log", std::ios::binary | std::ios::app);

    std::vector<DialogOutcome> outcomes(todo.size());
    std::vector<bool> ready(todo.size(), false);
    std::mutex mutex;
    std::condition_variable cv;
    std::size_t next = 0;

    auto worker = [&] {
        for (;;) {
            std::size_t slot;
            {
                std::lock_guard lock(mutex);
                if (next >= todo.size()) return;
                slot = next++;
            }
            auto outcome = run_dialog(config, client_a, client_b, todo[slot]);
            {
                std::lock_guard lock(mutex);
                outcomes[slot] = std::move(outcome);
                ready[slot] = true;
            }
            cv.notify_all();
        }
    };
    const auto workers = std::min<std::size_t>(todo.size(), static_cast<std::size_t>(config.max_inflight));
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);

    // Single writer: commit outcomes strictly in dialog-index order.
    for (std::size_t slot = 0; slot < todo.size(); ++slot) {
        DialogOutcome outcome;
        {
            std::unique_lock lock(mutex);
            cv.wait(lock, [&] { return ready[slot]; });
            outcome = std::move(outcomes[slot]);
        }
        const auto id = make_dialog_id(config.model_a, config.model_b, config.condition, todo[slot]);
        for (const auto& empty : outcome.empty_turns) {
            nlohmann::ordered_json entry{{"event", "empty_response"}, {"dialog_id", id}, {"turn_index", empty.turn_index}};
            log << entry.dump() << '\n';
            ++report.empty_responses;
        }
        if (auto* dialog = std::get_if<Dialog>(&outcome.result)) {
            out << dialog_to_jsonl(*dialog) << '\n';
            out.flush();
            ++report.completed;
        } else {
            nlohmann::ordered_json entry{
                {"event", "dialog_failed"}, {"dialog_id", id}, {"error", std::get<std::string>(outcome.result)}};
            log << entry.dump() << '\n';
            ++report.failed;
            report.failed_ids.push_back(id);
        }
        log.flush();
    }
    for (auto& t : pool) t.join();
    return report;
}

}  // namespace dialogcore
