#pragma once
// Builds the requirement graph: one requirement node per non-file entity
// (docstring text, or chat-generated with an on-disk cache), parent-child
// edges seeded from code-graph invoke edges, and similarity edges over
// requirement texts.

#include "codegraph/sscg_builder.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace codegraph {

// "{code}" is replaced with the entity's source text.
inline constexpr const char* kRequirementPrompt =
    "Write one sentence stating what the following code must do. Reply with "
    "the sentence only.\n\n{code}";

// "{parent}" / "{child}" are replaced with the two requirement texts. Any
// reply whose first word is YES confirms the candidate.
inline constexpr const char* kParentChildPrompt =
    "A parent requirement is fulfilled partly by a child requirement.\n"
    "Parent: {parent}\nChild: {child}\n"
    "Is the child a subrequirement of the parent? Answer YES or NO.";

struct RgConfig {
    double epsilon = 0.8;
    std::size_t similar_cap = 5;
    bool llm_confirm = true;        // confirm parent-child candidates via chat
    std::string cache_path;         // requirement cache file; empty = no cache
    std::string requirement_prompt = kRequirementPrompt;
    std::string confirm_prompt = kParentChildPrompt;
};

struct RequirementText {
    std::string text;
    std::string provenance; // "docstring" | "generated"

    bool operator==(const RequirementText&) const = default;
};

// Requirement cache record; `R<TAB>id<TAB>source-hash<TAB>provenance<TAB>text`
// lines sorted by id. Only generated texts are cached (docstrings are free).
struct RequirementCacheRow {
    std::string id;
    std::uint64_t source_hash = 0;
    std::string provenance;
    std::string text;

    bool operator==(const RequirementCacheRow&) const = default;
};

std::map<std::string, RequirementCacheRow> load_requirement_cache(const std::string& path);
void save_requirement_cache(const std::string& path,
                            const std::map<std::string, RequirementCacheRow>& rows);

// One requirement per non-file entity. Docstrings pass through verbatim;
// otherwise one chat call per entity (serial, id order — the scripted stub
// depends on the order). Chat failure or a null provider degrades to the
// signature as text, with a warning. Cache hits skip the chat call.
std::map<std::string, RequirementText> derive_requirements(const EntitySet& entities,
                                                           ChatProvider* chat,
                                                           const RgConfig& config,
                                                           Diagnostics* diagnostics = nullptr);

// Candidates are the sscg invoke edges whose endpoints both carry
// requirements (caller = parent). With llm_confirm, a candidate survives only
// on a YES reply; chat failure keeps it (fail-open) with a warning. Cycles are
// broken by inserting candidates in ascending (src, dst) order and dropping
// any edge that would close a cycle.
std::vector<GraphEdge> derive_parent_child(const Graph& sscg,
                                           const std::map<std::string, RequirementText>& reqs,
                                           ChatProvider* chat, const RgConfig& config,
                                           Diagnostics* diagnostics = nullptr);

// add_similarity_edges over the requirement texts.
std::vector<GraphEdge> derive_requirement_similarity(
    const std::map<std::string, RequirementText>& reqs, EmbeddingProvider& embedder,
    double epsilon, std::size_t similar_cap);

// embedder may be null (no similar edges); provider failures degrade as in
// build_sscg. The sscg must come from the same entity snapshot.
Graph build_rg(const EntitySet& entities, const Graph& sscg, ChatProvider* chat,
               EmbeddingProvider* embedder, const RgConfig& config,
               Diagnostics* diagnostics = nullptr);

} // namespace codegraph
