#include "codegraph/frontend.hpp"

#include "codegraph/error.hpp"
#include "codegraph/python_frontend.hpp"

#include <algorithm>
#include <filesystem>

namespace fs = std::filesystem;

namespace codegraph {

const LanguageFrontend& frontend_for(const std::string& grammar) {
    static const PythonFrontend python;
    if (grammar == "python") return python;
    fail(ErrorKind::Config, "unknown grammar: " + grammar);
}

namespace {

bool matches_any(const std::string& rel, const std::vector<std::string>& globs) {
    for (const auto& g : globs)
        if (glob_match(g, rel)) return true;
    return false;
}

std::string to_posix(const fs::path& p) {
    std::string s = p.generic_string();
    return s;
}

} // namespace

EntitySet scan_repo(const std::string& root,
                    const LanguageFrontend& frontend,
                    const std::vector<std::string>& include_globs,
                    const std::vector<std::string>& exclude_globs,
                    Diagnostics* diagnostics) {
    fs::path root_path(root);
    std::error_code ec;
    if (!fs::is_directory(root_path, ec))
        fail(ErrorKind::Io, "repository root is not a directory: " + root);

    std::vector<std::string> includes = include_globs;
    if (includes.empty())
        for (const auto& ext : frontend.extensions()) includes.push_back("**/*." + ext);

    std::vector<std::string> files;
    for (fs::recursive_directory_iterator it(root_path, fs::directory_options::skip_permission_denied, ec), end;
         it != end; it.increment(ec)) {
        if (ec) fail(ErrorKind::Io, "walking " + root + ": " + ec.message());
        if (!it->is_regular_file(ec)) continue;
        std::string rel = to_posix(fs::relative(it->path(), root_path, ec));
        if (ec) continue;
        if (!matches_any(rel, includes)) continue;
        if (matches_any(rel, exclude_globs)) continue;
        files.push_back(std::move(rel));
    }
    std::sort(files.begin(), files.end());

    std::vector<std::vector<Entity>> per_file(files.size());
    std::vector<std::string> read_failures(files.size());
    std::vector<std::uint64_t> hashes(files.size(), 0);
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(files.size()); ++i) {
        const std::string& rel = files[static_cast<std::size_t>(i)];
        std::string text;
        try {
            text = read_text_file(to_posix(root_path / rel));
        } catch (const std::exception& e) {
            read_failures[static_cast<std::size_t>(i)] = e.what();
            continue;
        }
        hashes[static_cast<std::size_t>(i)] = fnv1a64(text);
        per_file[static_cast<std::size_t>(i)] = frontend.parse_file(rel, text);
    }

    std::vector<Entity> all;
    std::map<std::string, std::uint64_t> file_hashes;
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (!read_failures[i].empty()) {
            if (diagnostics) {
                diagnostics->warn("skipping unreadable file " + files[i] + ": " + read_failures[i]);
                diagnostics->count("files_skipped");
            }
            continue;
        }
        if (diagnostics) {
            diagnostics->count("files_parsed");
            for (const Entity& e : per_file[i])
                if (e.parse_error) {
                    diagnostics->warn("syntax errors in " + files[i] + "; indexed as opaque file");
                    diagnostics->count("files_with_parse_errors");
                }
        }
        file_hashes[files[i]] = hashes[i];
        for (Entity& e : per_file[i]) all.push_back(std::move(e));
    }

    EntitySet set(root, std::move(all));
    set.set_file_hashes(std::move(file_hashes));
    set.validate();
    return set;
}

} // namespace codegraph
