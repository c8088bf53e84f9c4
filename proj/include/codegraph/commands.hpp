#pragma once
// Library-level command implementations behind the CLI binary. Exit statuses
// are a stable scripting contract: 0 success, 1 fatal error, 2 generation
// budget exhausted. Primary payloads go to `out`, diagnostics to `err`.

#include "codegraph/config.hpp"

#include <iosfwd>
#include <string>

namespace codegraph {

inline constexpr const char* kSscgIndexFile = "sscg.idx";
inline constexpr const char* kRgIndexFile = "rg.idx";
inline constexpr const char* kRequirementCacheFile = "requirements.cache";

// Scans repo_root, builds both graphs, and writes <out_dir>/sscg.idx,
// <out_dir>/rg.idx, and the requirement cache. Prints node/edge counts.
// Reruns over an unchanged repository write byte-identical files.
int cmd_index(const std::string& repo_root, const std::string& out_dir, const Config& config,
              std::ostream& out, std::ostream& err);

// Runs the agent on one task of a suite manifest against previously written
// indexes. Generated code goes to `out`; the transcript is written to
// transcript_path. Exit 0 only when the run is accepted; budget exhaustion
// exits 2 with the last candidate code still printed.
int cmd_generate(const std::string& suite_path, const std::string& task_id,
                 const std::string& index_dir, const std::string& transcript_path,
                 const Config& config, std::ostream& out, std::ostream& err);

// Evaluates the suite with one method (agent | scratch | sparse | dense),
// writes the keyed-text report to report_path, and prints the table.
int cmd_eval(const std::string& suite_path, const std::string& method,
             const std::string& report_path, const Config& config, std::ostream& out,
             std::ostream& err);

// Prints a node card (attributes plus neighbors grouped by edge kind) for one
// node of a saved index.
int cmd_inspect(const std::string& index_path, const std::string& node_id, const Config& config,
                std::ostream& out, std::ostream& err);

} // namespace codegraph
