#include "codegraph/agent.hpp"

#include "codegraph/error.hpp"
#include "codegraph/util.hpp"

#include <algorithm>
#include <optional>

namespace codegraph {

namespace {

bool starts_with(std::string_view text, std::string_view prefix) {
    return text.substr(0, prefix.size()) == prefix;
}

// Inner text of the first fenced block at or after `from`; both ```-per-line
// and single-line ```payload``` fences are accepted.
std::string fenced_payload(const std::vector<std::string>& lines, std::size_t from) {
    std::size_t j = from;
    while (j < lines.size() && trim(lines[j]).empty()) ++j;
    if (j >= lines.size()) fail(ErrorKind::Parse, "missing fenced block after the marker");
    const std::string open = trim(lines[j]);
    if (!starts_with(open, "```")) fail(ErrorKind::Parse, "missing fenced block after the marker");

    std::string body;
    const std::string rest = open.substr(3);
    if (rest.size() >= 3 && rest.compare(rest.size() - 3, 3, "```") == 0) {
        body = rest.substr(0, rest.size() - 3); // single-line fence
    } else {
        // `rest` is a language tag; ignore it.
        std::vector<std::string> inner;
        bool closed = false;
        for (++j; j < lines.size(); ++j) {
            if (starts_with(trim(lines[j]), "```")) {
                closed = true;
                break;
            }
            inner.push_back(lines[j]);
        }
        if (!closed) fail(ErrorKind::Parse, "unterminated fenced block");
        body = join(inner, "\n");
    }
    if (!body.empty() && body.back() != '\n') body += '\n';
    return body;
}

} // namespace

Action parse_action(const std::string& model_text) {
    const std::vector<std::string> lines = split_lines(model_text);

    std::vector<std::string> thought_parts;
    std::optional<std::size_t> marker;
    std::string tool_name;
    bool is_final = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string line = trim(lines[i]);
        if (starts_with(line, "Action:")) {
            tool_name = trim(line.substr(7));
            marker = i;
            break;
        }
        if (starts_with(line, "Final:")) {
            is_final = true;
            marker = i;
            break;
        }
        if (starts_with(line, "Thought:")) {
            thought_parts.push_back(trim(line.substr(8)));
        } else if (!line.empty() && !thought_parts.empty()) {
            thought_parts.push_back(line); // continuation of the running thought
        }
    }
    if (!marker) fail(ErrorKind::Parse, "no Action: or Final: marker in model output");

    Action action;
    action.thought = join(thought_parts, "\n");
    if (is_final) {
        action.kind = Action::Kind::Final;
        action.code = fenced_payload(lines, *marker + 1);
        return action;
    }

    const bool known = std::any_of(std::begin(kToolNames), std::end(kToolNames),
                                   [&](const char* name) { return tool_name == name; });
    if (!known) fail(ErrorKind::Parse, "unknown tool name: " + tool_name);
    action.kind = Action::Kind::Tool;
    action.tool_name = tool_name;
    const std::string args_text = fenced_payload(lines, *marker + 1);
    try {
        action.args = nlohmann::json::parse(args_text);
    } catch (const nlohmann::json::exception& error) {
        fail(ErrorKind::Parse, std::string("invalid tool argument JSON: ") + error.what());
    }
    if (!action.args.is_object()) fail(ErrorKind::Parse, "tool arguments must be a JSON object");
    return action;
}

// ---------------------------------------------------------------------------
// Prompt assembly

namespace {

std::string agent_system_prompt() {
    return "You write Python code for one repository entity, using tools to gather context.\n"
           "Available tools:\n" +
           tool_schema_text() +
           "Reply with exactly one of:\n"
           "Thought: <optional reasoning>\n"
           "Action: <ToolName>\n"
           "```\n"
           "{\"argument\": \"value\"}\n"
           "```\n"
           "or\n"
           "Final:\n"
           "```\n"
           "<complete code for the target entity>\n"
           "```\n";
}

std::string render_block(const PromptBlock& block) {
    std::string text = "\n[" + block.label + "]\n" + block.content;
    if (text.back() != '\n') text += '\n';
    return text;
}

} // namespace

std::vector<ChatMessage> assemble_prompt(const Task& task, const std::string& local_file_text,
                                         const std::vector<PromptBlock>& blocks,
                                         std::size_t budget, std::size_t* dropped) {
    if (budget == 0) fail(ErrorKind::Config, "context budget must be positive");
    if (task.requirement.size() > budget)
        fail(ErrorKind::Config, "requirement alone exceeds the context budget");

    const std::string system_text = agent_system_prompt();
    std::string local = local_file_text;
    if (!local.empty() && local.back() != '\n') local += '\n';
    const std::string head = "Requirement:\n" + task.requirement + "\n\n" + "Target: " +
                             task.target_path + "::" + task.target_name + "\n\n" + "Local file " +
                             task.target_path + ":\n```\n" + local + "```\n";

    std::vector<std::string> rendered;
    rendered.reserve(blocks.size());
    for (const PromptBlock& block : blocks) rendered.push_back(render_block(block));

    const std::size_t base = system_text.size() + head.size();
    std::size_t suffix_total = 0;
    for (const std::string& text : rendered) suffix_total += text.size();

    std::size_t start = 0;
    while (start < rendered.size() && base + suffix_total > budget)
        suffix_total -= rendered[start++].size();
    if (dropped != nullptr) *dropped = start;

    std::string user = head;
    for (std::size_t i = start; i < rendered.size(); ++i) user += rendered[i];
    return {{"system", system_text}, {"user", user}};
}

// ---------------------------------------------------------------------------
// Transcript

namespace {

const std::vector<std::string> kStepKinds = {"thought",     "tool-call", "tool-response",
                                             "observation", "final",     "status"};

}

std::string serialize_transcript(const Transcript& transcript) {
    std::string out = std::string("H\t") + kTranscriptFormatTag + "\t1\t" +
                      std::to_string(transcript.tool_calls) + "\t" +
                      std::to_string(transcript.repairs_used) + "\n";
    for (std::size_t i = 0; i < transcript.steps.size(); ++i) {
        out += "S\t" + std::to_string(i + 1) + "\t" + transcript.steps[i].kind + "\t" +
               escape_field(transcript.steps[i].payload) + "\n";
    }
    return out;
}

Transcript parse_transcript(const std::string& content, const std::string& origin) {
    const std::vector<std::string> lines = split_lines(content);
    if (lines.empty()) fail(ErrorKind::CorruptRecord, origin + ": empty transcript");

    const std::vector<std::string> header = split(lines[0], '\t');
    if (header.size() != 5 || header[0] != "H")
        fail(ErrorKind::CorruptRecord, origin + ": malformed transcript header");
    if (header[1] != kTranscriptFormatTag)
        fail(ErrorKind::FormatVersion, origin + ": not a transcript file");
    if (header[2] != "1")
        fail(ErrorKind::FormatVersion, origin + ": unsupported transcript version " + header[2]);

    Transcript transcript;
    try {
        transcript.tool_calls = std::stoi(header[3]);
        transcript.repairs_used = std::stoi(header[4]);
    } catch (const std::exception&) {
        fail(ErrorKind::CorruptRecord, origin + ": malformed transcript counters");
    }

    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::vector<std::string> fields = split(lines[i], '\t');
        if (fields.size() != 4 || fields[0] != "S")
            fail(ErrorKind::CorruptRecord, origin + ": malformed step record");
        if (fields[1] != std::to_string(transcript.steps.size() + 1))
            fail(ErrorKind::CorruptRecord, origin + ": step ordinals out of sequence");
        if (std::find(kStepKinds.begin(), kStepKinds.end(), fields[2]) == kStepKinds.end())
            fail(ErrorKind::CorruptRecord, origin + ": unknown step kind " + fields[2]);
        transcript.add(fields[2], unescape_field(fields[3]));
    }
    return transcript;
}

// ---------------------------------------------------------------------------
// The loop

const char* to_string(AgentStatus status) {
    switch (status) {
    case AgentStatus::Accepted: return "accepted";
    case AgentStatus::BudgetExhausted: return "budget_exhausted";
    case AgentStatus::ProviderError: return "provider_error";
    }
    return "provider_error";
}

namespace {

constexpr const char* kCorrectiveText =
    "Your previous reply did not match the required format. Reply with 'Action: <ToolName>' "
    "plus a fenced JSON object, or 'Final:' plus a fenced code block.";

nlohmann::json code_check_json(const CodeCheck& check) {
    nlohmann::json payload = {{"ok", check.ok}, {"diagnostics", check.diagnostics}};
    if (check.formatted_code)
        payload["formatted_code"] = *check.formatted_code;
    else
        payload["formatted_code"] = nullptr;
    return payload;
}

} // namespace

AgentResult run_task(const Task& task, const ToolContext& tools, ChatProvider& chat,
                     const AgentConfig& config) {
    if (config.max_tool_calls < 0) fail(ErrorKind::Config, "max_tool_calls must be >= 0");
    if (config.repair_rounds < 0) fail(ErrorKind::Config, "repair_rounds must be >= 0");
    if (config.retrieved_cap < 1) fail(ErrorKind::Config, "retrieved_cap must be >= 1");
    if (tools.frontend == nullptr)
        fail(ErrorKind::Precondition, "agent needs a language front-end for verification");

    const std::string local_file = read_text_file(task.repo_root + "/" + task.target_path);

    // The loop's chat provider also serves the tools (candidate classification,
    // web summarization), so scripted runs consume one script in call order.
    ToolContext ctx = tools;
    ctx.chat = &chat;

    AgentResult result;
    Transcript& transcript = result.transcript;
    std::vector<PromptBlock> blocks;
    std::vector<std::string> retrieved_ids;

    auto add_retrieved = [&](const std::string& id, const std::string& provenance) {
        if (std::find(retrieved_ids.begin(), retrieved_ids.end(), id) != retrieved_ids.end())
            return;
        std::string source;
        try {
            source = resolve_source_unchecked(*ctx.sscg, id, task.repo_root);
        } catch (const Error& error) {
            if (ctx.diagnostics != nullptr)
                ctx.diagnostics->warn("agent: cannot resolve source for " + id + ": " +
                                        error.what());
            return;
        }
        if (retrieved_ids.size() >= static_cast<std::size_t>(config.retrieved_cap)) {
            const std::string prefix = "retrieved " + retrieved_ids.front() + " |";
            retrieved_ids.erase(retrieved_ids.begin());
            const auto victim =
                std::find_if(blocks.begin(), blocks.end(), [&](const PromptBlock& block) {
                    return block.label.rfind(prefix, 0) == 0;
                });
            if (victim != blocks.end()) blocks.erase(victim);
        }
        blocks.push_back({"retrieved " + id + " | " + provenance, source});
        retrieved_ids.push_back(id);
    };

    auto record_call = [&](const std::string& name, const nlohmann::json& args) {
        transcript.add("tool-call", nlohmann::json{{"args", args}, {"name", name}}.dump());
    };

    // Canonical bootstrap: RGRetrieval then DualGraphMapping, as one unit.
    if (config.max_tool_calls >= 2) {
        const nlohmann::json retrieval_args = {{"requirement", task.requirement}};
        record_call("RGRetrieval", retrieval_args);
        const ToolResponse retrieval = dispatch_tool({"RGRetrieval", retrieval_args}, ctx);
        ++transcript.tool_calls;
        transcript.add("tool-response", retrieval.payload.dump());
        blocks.push_back({"observation RGRetrieval", retrieval.payload.dump()});

        nlohmann::json ids = nlohmann::json::array();
        for (const char* list : {"subrequirements", "similar"})
            for (const auto& row : retrieval.payload[list]) ids.push_back(row["id"]);
        const nlohmann::json mapping_args = {{"ids", ids}};
        record_call("DualGraphMapping", mapping_args);
        const ToolResponse mapping = dispatch_tool({"DualGraphMapping", mapping_args}, ctx);
        ++transcript.tool_calls;
        transcript.add("tool-response", mapping.payload.dump());
        blocks.push_back({"observation DualGraphMapping", mapping.payload.dump()});
        for (const auto& id : mapping.payload["code_nodes"])
            add_retrieved(id.get<std::string>(), "rg-retrieval");
    }

    ChatParams params;
    params.max_output_tokens = config.max_output_tokens;
    int consecutive_malformed = 0;
    int repairs_used = 0;
    AgentStatus status = AgentStatus::ProviderError;

    while (true) {
        const std::vector<ChatMessage> messages =
            assemble_prompt(task, local_file, blocks, task.context_budget);

        ChatResult reply;
        try {
            reply = chat.chat(messages, params);
        } catch (const Error& error) {
            transcript.add("observation", std::string("chat failed: ") + error.what());
            status = AgentStatus::ProviderError;
            break;
        }

        Action action;
        try {
            action = parse_action(reply.text);
        } catch (const Error& error) {
            ++consecutive_malformed;
            transcript.add("observation", std::string("format error: ") + error.what());
            if (consecutive_malformed >= 3) {
                status = AgentStatus::ProviderError;
                break;
            }
            blocks.push_back({"observation format", kCorrectiveText});
            continue;
        }
        consecutive_malformed = 0;
        if (!action.thought.empty()) transcript.add("thought", action.thought);

        if (action.kind == Action::Kind::Tool) {
            if (transcript.tool_calls >= config.max_tool_calls) {
                transcript.add("observation", "tool budget exhausted");
                status = AgentStatus::BudgetExhausted;
                break;
            }
            record_call(action.tool_name, action.args);
            ++transcript.tool_calls;
            try {
                const ToolResponse response =
                    dispatch_tool({action.tool_name, action.args}, ctx);
                const std::string payload_text = response.payload.dump();
                transcript.add("tool-response", payload_text);
                blocks.push_back({"observation " + action.tool_name, payload_text});
                if (action.tool_name == "SSCGTraverse") {
                    for (const auto& row : response.payload["visited"])
                        add_retrieved(row["id"].get<std::string>(),
                                      "sscg-traverse " + row["via"].get<std::string>() + " hop " +
                                          std::to_string(row["hop"].get<int>()));
                } else if (action.tool_name == "DualGraphMapping") {
                    for (const auto& id : response.payload["code_nodes"])
                        add_retrieved(id.get<std::string>(), "rg-retrieval");
                }
            } catch (const Error& error) {
                // Infrastructure failures are fatal; bad tool calls are feedback.
                if (error.kind() == ErrorKind::Integrity ||
                    error.kind() == ErrorKind::StaleIndex || error.kind() == ErrorKind::Io)
                    throw;
                const std::string text = std::string("tool error (") + to_string(error.kind()) +
                                         "): " + error.what();
                transcript.add("tool-response", text);
                blocks.push_back({"observation " + action.tool_name, text});
            }
            continue;
        }

        // Final: verify with CodeTesting outside the tool budget.
        result.code = action.code;
        transcript.add("final", action.code);
        record_call("CodeTesting", {{"code", action.code}});
        CodeCheck check;
        if (trim(action.code).empty()) {
            check.diagnostics.push_back("empty code");
        } else {
            check = code_testing(action.code, *ctx.frontend, ctx.code_testing);
        }
        transcript.add("tool-response", code_check_json(check).dump());

        if (check.ok) {
            if (check.formatted_code) result.code = *check.formatted_code;
            status = AgentStatus::Accepted;
            break;
        }
        if (repairs_used >= config.repair_rounds) {
            status = AgentStatus::BudgetExhausted;
            break;
        }
        ++repairs_used;
        std::string feedback = "CodeTesting rejected the code:";
        for (const std::string& diagnostic : check.diagnostics) feedback += "\n" + diagnostic;
        feedback += "\nRevise the code and reply with Final: again.";
        transcript.add("observation", feedback);
        blocks.push_back({"observation CodeTesting", feedback});
    }

    transcript.repairs_used = repairs_used;
    transcript.add("status", to_string(status));
    result.status = status;
    result.final_blocks = std::move(blocks);
    return result;
}

} // namespace codegraph
