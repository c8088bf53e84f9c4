#pragma once
// The ReAct loop: assemble a prompt from the task plus accumulated context,
// parse the model's reply into a tool call or a final answer, dispatch tools,
// and verify the final code. Fully deterministic under scripted providers.

#include "codegraph/tools.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace codegraph {

struct Task {
    std::string requirement;
    std::string repo_root;
    std::string target_path;  // repo-relative file that receives the code
    std::string target_name;  // dotted name of the entity being written
    std::size_t context_budget = 48000; // characters across all prompt messages
    std::string sscg_index_path;        // used by the CLI to load the graphs
    std::string rg_index_path;
};

// ---------------------------------------------------------------------------
// Model output grammar

struct Action {
    enum class Kind { Tool, Final };

    Kind kind = Kind::Final;
    std::string thought;   // leading Thought: lines, joined; may be empty
    std::string tool_name; // Kind::Tool
    nlohmann::json args;   // Kind::Tool, always an object
    std::string code;      // Kind::Final

    bool operator==(const Action&) const = default;
};

// Recognizes, after optional `Thought:` lines, either
//   Action: <ToolName>   followed by a fenced JSON object, or
//   Final:               followed by a fenced code block.
// Anything else -> Error{Parse} (run_task answers with a corrective reprompt).
Action parse_action(const std::string& model_text);

// ---------------------------------------------------------------------------
// Prompt assembly

// One droppable context block: retrieved source, a web summary, or a tool
// observation. Blocks live in arrival order; truncation removes whole blocks
// oldest-first.
struct PromptBlock {
    std::string label;   // e.g. "retrieved a.py::f | rg-retrieval"
    std::string content;

    bool operator==(const PromptBlock&) const = default;
};

// Builds [system, user] messages. The system prompt fixes tool schemas and
// the output grammar; the user prompt carries the requirement, the local file
// and the surviving blocks. The requirement and local file are never dropped;
// the requirement alone exceeding the budget is Error{Config}. `dropped`
// receives the number of discarded blocks.
std::vector<ChatMessage> assemble_prompt(const Task& task, const std::string& local_file_text,
                                         const std::vector<PromptBlock>& blocks,
                                         std::size_t budget, std::size_t* dropped = nullptr);

// ---------------------------------------------------------------------------
// Transcript

struct TranscriptStep {
    std::string kind; // thought | tool-call | tool-response | observation | final | status
    std::string payload;

    bool operator==(const TranscriptStep&) const = default;
};

struct Transcript {
    std::vector<TranscriptStep> steps;
    int tool_calls = 0;   // budgeted tool invocations (verification excluded)
    int repairs_used = 0;

    void add(std::string kind, std::string payload) {
        steps.push_back({std::move(kind), std::move(payload)});
    }

    bool operator==(const Transcript&) const = default;
};

inline constexpr const char* kTranscriptFormatTag = "codegraph-transcript";

// Line-oriented, escaped, byte-deterministic: a header line followed by one
// `S<TAB>ordinal<TAB>kind<TAB>payload` line per step.
std::string serialize_transcript(const Transcript& transcript);
Transcript parse_transcript(const std::string& content, const std::string& origin = "<memory>");

// ---------------------------------------------------------------------------
// The loop

enum class AgentStatus { Accepted, BudgetExhausted, ProviderError };

const char* to_string(AgentStatus status);

struct AgentConfig {
    int max_tool_calls = 10;
    int repair_rounds = 2;
    int retrieved_cap = 10;       // K: most recent retrieved code blocks kept
    int max_output_tokens = 2000; // the agent is exempt from the baseline 500 cap
};

struct AgentResult {
    std::string code;
    Transcript transcript;
    AgentStatus status = AgentStatus::ProviderError;
    std::vector<PromptBlock> final_blocks; // context state at loop exit (debugging)
};

// Canonical sequence: RGRetrieval then DualGraphMapping (programmatic, both
// budgeted, skipped together when max_tool_calls < 2), then the model's free
// loop, then CodeTesting verification of every Final (unbudgeted). Statuses:
// accepted (verification passed), budget_exhausted (tool or repair budget
// hit), provider_error (chat failure or three consecutive malformed replies).
AgentResult run_task(const Task& task, const ToolContext& tools, ChatProvider& chat,
                     const AgentConfig& config = {});

} // namespace codegraph
