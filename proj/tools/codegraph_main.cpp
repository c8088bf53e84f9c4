#include <CLI11.hpp>

#include "codegraph/commands.hpp"
#include "codegraph/config.hpp"
#include "codegraph/error.hpp"
#include "codegraph/util.hpp"

#include <iostream>
#include <string>
#include <vector>

using namespace codegraph;

namespace {

Config assemble_config(const std::string& config_path, const std::vector<std::string>& overrides) {
    Config config = config_path.empty() ? Config{} : parse_config(read_text_file(config_path),
                                                                  config_path);
    for (const std::string& pair : overrides) {
        const std::size_t eq = pair.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::Config, "--set expects key=value, got '" + pair + "'");
        set_config_value(config, trim(pair.substr(0, eq)), trim(pair.substr(eq + 1)));
    }
    validate_config(config);
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"codegraph: dual-graph retrieval-augmented code generation"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "configuration file (key = value lines)");
    app.add_option("--set", overrides,
                   "override one config key (key=value; repeatable, applied after --config)");

    std::string repo_root;
    std::string out_dir = "index";
    CLI::App* index = app.add_subcommand("index", "build the code and requirement graph indexes");
    index->add_option("repo", repo_root, "repository root")->required();
    index->add_option("out", out_dir, "index output directory (default: index)");

    std::string gen_suite;
    std::string gen_task;
    std::string index_dir = "index";
    std::string transcript_path = "transcript.txt";
    CLI::App* generate = app.add_subcommand("generate", "generate code for one suite task");
    generate->add_option("suite", gen_suite, "suite manifest file")->required();
    generate->add_option("task", gen_task, "task id within the suite")->required();
    generate->add_option("--index-dir", index_dir, "directory holding the index files");
    generate->add_option("--transcript", transcript_path, "transcript output file");

    std::string eval_suite;
    std::string method = "agent";
    std::string report_path = "report.txt";
    CLI::App* eval = app.add_subcommand("eval", "evaluate a suite and report Pass@k");
    eval->add_option("suite", eval_suite, "suite manifest file")->required();
    eval->add_option("method", method, "agent | scratch | sparse | dense (default: agent)");
    eval->add_option("--report", report_path, "keyed-text report output file");

    std::string index_path;
    std::string node_id;
    CLI::App* inspect = app.add_subcommand("inspect", "print one node of a saved index");
    inspect->add_option("index", index_path, "index file (sscg.idx or rg.idx)")->required();
    inspect->add_option("node", node_id, "node id")->required();

    CLI11_PARSE(app, argc, argv);

    Config config;
    try {
        config = assemble_config(config_path, overrides);
    } catch (const Error& error) {
        std::cerr << "error (" << to_string(error.kind()) << "): " << error.what() << "\n";
        return 1;
    }

    if (index->parsed())
        return cmd_index(repo_root, out_dir, config, std::cout, std::cerr);
    if (generate->parsed())
        return cmd_generate(gen_suite, gen_task, index_dir, transcript_path, config, std::cout,
                            std::cerr);
    if (eval->parsed())
        return cmd_eval(eval_suite, method, report_path, config, std::cout, std::cerr);
    if (inspect->parsed())
        return cmd_inspect(index_path, node_id, config, std::cout, std::cerr);
    return 1;
}
