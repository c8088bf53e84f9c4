#include "codegraph/python_frontend.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace codegraph {

namespace {

enum class TokKind { Name, Number, String, Op };

struct Token {
    TokKind kind;
    std::string text; // lexeme; strings keep quotes and prefix
    int line = 0;     // 1-based physical line of the first character
    int col = 0;      // 0-based byte column on that line
};

// One logical line: physical lines joined across brackets / backslashes.
struct LogicalLine {
    int first_line = 0;
    int last_line = 0;
    int indent = 0; // leading whitespace of the first physical line, tabs = 8
    std::vector<Token> tokens;
};

struct TokenStream {
    std::vector<LogicalLine> lines;
    std::vector<SyntaxDiagnostic> errors;
    std::map<int, std::string> comment_only; // physical line -> comment text
    int total_lines = 1;
};

const std::set<std::string>& keywords() {
    static const std::set<std::string> kw = {
        "False", "None",   "True",  "and",    "as",     "assert", "async",
        "await", "break",  "class", "continue", "def",  "del",    "elif",
        "else",  "except", "finally", "for",  "from",   "global", "if",
        "import", "in",    "is",    "lambda", "nonlocal", "not",  "or",
        "pass",  "raise",  "return", "try",   "while",  "with",   "yield"};
    return kw;
}

bool is_keyword(const std::string& word) { return keywords().count(word) != 0; }

bool is_name_start(unsigned char c) {
    return std::isalpha(c) || c == '_' || c >= 0x80;
}

bool is_name_char(unsigned char c) {
    return std::isalnum(c) || c == '_' || c >= 0x80;
}

bool is_string_prefix(const std::string& word) {
    if (word.empty() || word.size() > 3) return false;
    for (char c : word) {
        char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (l != 'r' && l != 'b' && l != 'u' && l != 'f') return false;
    }
    return true;
}

class Tokenizer {
public:
    explicit Tokenizer(std::string_view src) : src_(src) {}

    TokenStream run() {
        while (pos_ < src_.size()) scan_line_prefix_and_tokens();
        flush_logical(true);
        if (!bracket_stack_.empty()) {
            error(bracket_stack_.back().second,
                  std::string("'") + bracket_stack_.back().first + "' was never closed");
        }
        out_.total_lines = std::max(1, line_);
        return std::move(out_);
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 0;
    TokenStream out_;
    std::vector<Token> current_;
    int current_first_line_ = 0;
    int current_indent_ = 0;
    std::vector<std::pair<char, int>> bracket_stack_;

    void error(int at_line, std::string message) {
        out_.errors.push_back({at_line, std::move(message)});
    }

    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }

    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 0;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void flush_logical(bool /*at_eof*/) {
        if (current_.empty()) return;
        LogicalLine ll;
        ll.first_line = current_first_line_;
        ll.last_line = current_.back().line;
        ll.indent = current_indent_;
        ll.tokens = std::move(current_);
        current_.clear();
        out_.lines.push_back(std::move(ll));
    }

    // Consumes one physical line worth of input (or more, via continuations).
    void scan_line_prefix_and_tokens() {
        // Measure indentation only when starting a fresh logical line.
        if (current_.empty()) {
            int indent = 0;
            while (pos_ < src_.size() && (peek() == ' ' || peek() == '\t')) {
                indent = peek() == '\t' ? (indent / 8 + 1) * 8 : indent + 1;
                advance();
            }
            current_indent_ = indent;
        } else {
            while (pos_ < src_.size() && (peek() == ' ' || peek() == '\t')) advance();
        }

        while (pos_ < src_.size()) {
            char c = peek();
            if (c == '\n') {
                if (!bracket_stack_.empty()) {
                    advance();
                    skip_inner_whitespace();
                    continue;
                }
                advance();
                flush_logical(false);
                return;
            }
            if (c == ' ' || c == '\t' || c == '\r') {
                advance();
                continue;
            }
            if (c == '#') {
                int comment_line = line_;
                std::string text;
                while (pos_ < src_.size() && peek() != '\n') {
                    text.push_back(peek());
                    advance();
                }
                if (current_.empty()) out_.comment_only[comment_line] = text;
                continue;
            }
            if (c == '\\' && (peek(1) == '\n' || (peek(1) == '\r' && peek(2) == '\n'))) {
                advance();
                if (peek() == '\r') advance();
                advance();
                skip_inner_whitespace();
                continue;
            }
            scan_token();
        }
    }

    void skip_inner_whitespace() {
        while (pos_ < src_.size() && (peek() == ' ' || peek() == '\t')) advance();
    }

    void push_token(TokKind kind, std::string text, int at_line, int at_col) {
        if (current_.empty()) current_first_line_ = at_line;
        current_.push_back({kind, std::move(text), at_line, at_col});
    }

    void scan_token() {
        char c = peek();
        int tok_line = line_;
        int tok_col = col_;

        if (c == '"' || c == '\'') {
            scan_string("", tok_line, tok_col);
            return;
        }
        if (is_name_start(static_cast<unsigned char>(c))) {
            std::string word;
            while (pos_ < src_.size() && is_name_char(static_cast<unsigned char>(peek()))) {
                word.push_back(peek());
                advance();
            }
            char next = peek();
            if ((next == '"' || next == '\'') && is_string_prefix(word)) {
                scan_string(word, tok_line, tok_col);
                return;
            }
            push_token(TokKind::Name, std::move(word), tok_line, tok_col);
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
            std::string num;
            while (pos_ < src_.size()) {
                char d = peek();
                bool digitish = std::isalnum(static_cast<unsigned char>(d)) || d == '_';
                bool dot = d == '.' && std::isdigit(static_cast<unsigned char>(peek(1)));
                if (!digitish && !dot) break;
                num.push_back(d);
                advance();
            }
            push_token(TokKind::Number, std::move(num), tok_line, tok_col);
            return;
        }

        // single-character operator / punctuation
        if (c == '(' || c == '[' || c == '{') {
            bracket_stack_.emplace_back(c, tok_line);
        } else if (c == ')' || c == ']' || c == '}') {
            char expected = c == ')' ? '(' : c == ']' ? '[' : '{';
            if (bracket_stack_.empty()) {
                error(tok_line, std::string("unmatched '") + c + "'");
            } else if (bracket_stack_.back().first != expected) {
                error(tok_line, std::string("closing '") + c + "' does not match opening '" +
                                    bracket_stack_.back().first + "'");
                bracket_stack_.pop_back();
            } else {
                bracket_stack_.pop_back();
            }
        }
        push_token(TokKind::Op, std::string(1, c), tok_line, tok_col);
        advance();
    }

    void scan_string(const std::string& prefix, int tok_line, int tok_col) {
        char quote = peek();
        std::string lexeme = prefix;
        lexeme.push_back(quote);
        advance();
        bool triple = peek() == quote && peek(1) == quote;
        if (triple) {
            lexeme.push_back(quote);
            lexeme.push_back(quote);
            advance();
            advance();
        }
        while (pos_ < src_.size()) {
            char c = peek();
            if (c == '\\' && pos_ + 1 < src_.size()) {
                lexeme.push_back(c);
                advance();
                lexeme.push_back(peek());
                advance();
                continue;
            }
            if (!triple && c == '\n') {
                error(tok_line, "end of line inside string literal");
                push_token(TokKind::String, std::move(lexeme), tok_line, tok_col);
                return;
            }
            if (c == quote) {
                if (!triple) {
                    lexeme.push_back(c);
                    advance();
                    push_token(TokKind::String, std::move(lexeme), tok_line, tok_col);
                    return;
                }
                if (peek(1) == quote && peek(2) == quote) {
                    lexeme += std::string(3, quote);
                    advance();
                    advance();
                    advance();
                    push_token(TokKind::String, std::move(lexeme), tok_line, tok_col);
                    return;
                }
            }
            lexeme.push_back(c);
            advance();
        }
        error(tok_line, "unterminated string literal");
        push_token(TokKind::String, std::move(lexeme), tok_line, tok_col);
    }
};

// Strips prefix and quotes off a string lexeme; escape sequences are kept
// verbatim (docstrings in practice contain none that matter).
std::string cook_string(const std::string& lexeme) {
    std::size_t i = 0;
    while (i < lexeme.size() && lexeme[i] != '"' && lexeme[i] != '\'') ++i;
    if (i >= lexeme.size()) return lexeme;
    char quote = lexeme[i];
    bool triple = i + 2 < lexeme.size() && lexeme[i + 1] == quote && lexeme[i + 2] == quote;
    std::size_t open = triple ? 3 : 1;
    std::size_t begin = i + open;
    std::size_t end = lexeme.size();
    std::size_t close = 0;
    while (close < open && end > begin && lexeme[end - 1] == quote) {
        --end;
        ++close;
    }
    return lexeme.substr(begin, end - begin);
}

// Trims a raw docstring the way documentation tools do: drop leading/trailing
// blank lines and the common indentation of continuation lines.
std::string clean_docstring(const std::string& raw) {
    std::vector<std::string> lines = split_lines(raw);
    if (lines.empty()) return trim(raw);
    std::size_t min_indent = std::string::npos;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string& l = lines[i];
        std::size_t ws = l.find_first_not_of(" \t");
        if (ws == std::string::npos) continue;
        min_indent = std::min(min_indent, ws);
    }
    std::vector<std::string> out;
    out.push_back(trim(lines[0]));
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string& l = lines[i];
        if (min_indent != std::string::npos && l.size() > min_indent)
            out.push_back(std::string(l.substr(min_indent)));
        else
            out.push_back(trim(l));
    }
    while (!out.empty() && out.front().empty()) out.erase(out.begin());
    while (!out.empty() && out.back().empty()) out.pop_back();
    std::string joined = join(out, "\n");
    // right-trim each line
    std::vector<std::string> rt;
    for (auto& l : split_lines(joined)) {
        while (!l.empty() && (l.back() == ' ' || l.back() == '\t')) l.pop_back();
        rt.push_back(l);
    }
    return join(rt, "\n");
}

bool is_lone_string(const std::vector<Token>& toks, std::size_t begin, std::size_t end) {
    if (begin >= end) return false;
    for (std::size_t i = begin; i < end; ++i)
        if (toks[i].kind != TokKind::String) return false;
    return true;
}

std::string cook_string_run(const std::vector<Token>& toks, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) out += cook_string(toks[i].text);
    return out;
}

// Dotted-name base classes between the parens of a class header. Items that
// are not plain dotted names (keyword args, unpacking, subscripts) are skipped.
std::vector<std::string> extract_bases(const std::vector<Token>& toks, std::size_t begin,
                                       std::size_t colon) {
    std::vector<std::string> bases;
    if (begin >= colon || toks[begin].kind != TokKind::Op || toks[begin].text != "(")
        return bases;
    std::vector<std::vector<const Token*>> items(1);
    int depth = 1;
    for (std::size_t i = begin + 1; i < colon && depth > 0; ++i) {
        const Token& t = toks[i];
        if (t.kind == TokKind::Op && !t.text.empty()) {
            char c = t.text[0];
            if (c == '(' || c == '[' || c == '{') ++depth;
            else if (c == ')' || c == ']' || c == '}') {
                if (--depth == 0) break;
            } else if (c == ',' && depth == 1) {
                items.emplace_back();
                continue;
            }
        }
        items.back().push_back(&t);
    }
    for (const auto& item : items) {
        if (item.empty()) continue;
        std::string dotted;
        bool ok = true, expect_name = true;
        for (const Token* t : item) {
            if (expect_name && t->kind == TokKind::Name && !is_keyword(t->text)) {
                dotted += t->text;
                expect_name = false;
            } else if (!expect_name && t->kind == TokKind::Op && t->text == ".") {
                dotted += '.';
                expect_name = true;
            } else {
                ok = false;
                break;
            }
        }
        if (ok && !expect_name) bases.push_back(std::move(dotted));
    }
    return bases;
}

// Index of the first depth-0 ':' in [begin, end), or npos.
std::size_t find_header_colon(const std::vector<Token>& toks, std::size_t begin) {
    int depth = 0;
    for (std::size_t i = begin; i < toks.size(); ++i) {
        const Token& t = toks[i];
        if (t.kind != TokKind::Op) continue;
        char c = t.text.empty() ? '\0' : t.text[0];
        if (c == '(' || c == '[' || c == '{') ++depth;
        else if (c == ')' || c == ']' || c == '}') --depth;
        else if (c == ':' && depth == 0) return i;
    }
    return std::string::npos;
}

struct ScanState {
    const std::vector<std::string>* source_lines = nullptr;
    std::vector<Entity> entities; // [0] is the file entity
    std::vector<SyntaxDiagnostic> block_errors;
};

// Extracts call sites from tokens[begin, end) into `sink`.
void extract_calls(const std::vector<Token>& toks, std::size_t begin, std::size_t end,
                   std::vector<RawCallSite>& sink) {
    for (std::size_t i = begin; i < end; ++i) {
        if (toks[i].kind != TokKind::Op || toks[i].text != "(") continue;
        if (i == begin) continue;
        std::size_t j = i - 1;
        if (toks[j].kind != TokKind::Name || is_keyword(toks[j].text)) continue;
        std::vector<std::string> chain = {toks[j].text};
        std::size_t k = j;
        bool broken_receiver = false;
        while (k >= begin + 1 && toks[k - 1].kind == TokKind::Op && toks[k - 1].text == ".") {
            if (k >= begin + 2 && toks[k - 2].kind == TokKind::Name &&
                !is_keyword(toks[k - 2].text)) {
                chain.insert(chain.begin(), toks[k - 2].text);
                k -= 2;
            } else {
                broken_receiver = true; // e.g. `a[0].m(` or `f().m(`
                break;
            }
        }
        if (broken_receiver) continue;
        // a `def f(` / `class C(` header is not a call
        if (k >= begin + 1 && toks[k - 1].kind == TokKind::Name &&
            (toks[k - 1].text == "def" || toks[k - 1].text == "class")) continue;
        sink.push_back({join(chain, "."), toks[j].line});
    }
}

// Parses `import ...` / `from ... import ...` statements.
void extract_imports(const std::vector<Token>& toks, std::vector<RawImportSite>& sink) {
    if (toks.empty() || toks[0].kind != TokKind::Name) return;
    int line = toks[0].line;

    auto read_dotted = [&](std::size_t& i) {
        std::string dotted;
        while (i < toks.size() && toks[i].kind == TokKind::Name && !is_keyword(toks[i].text)) {
            dotted += toks[i].text;
            ++i;
            if (i + 1 < toks.size() && toks[i].kind == TokKind::Op && toks[i].text == "." &&
                toks[i + 1].kind == TokKind::Name) {
                dotted += ".";
                ++i;
            } else {
                break;
            }
        }
        return dotted;
    };

    if (toks[0].text == "import") {
        std::size_t i = 1;
        while (i < toks.size()) {
            std::string module = read_dotted(i);
            if (module.empty()) break;
            RawImportSite site{module, std::nullopt, std::nullopt, line};
            if (i + 1 < toks.size() && toks[i].kind == TokKind::Name && toks[i].text == "as" &&
                toks[i + 1].kind == TokKind::Name) {
                site.alias = toks[i + 1].text;
                i += 2;
            }
            sink.push_back(std::move(site));
            if (i < toks.size() && toks[i].kind == TokKind::Op && toks[i].text == ",") ++i;
            else break;
        }
        return;
    }

    if (toks[0].text == "from") {
        std::size_t i = 1;
        std::string module;
        while (i < toks.size() && toks[i].kind == TokKind::Op && toks[i].text == ".") {
            module += ".";
            ++i;
        }
        if (i < toks.size() && toks[i].kind == TokKind::Name && toks[i].text != "import")
            module += read_dotted(i);
        if (module.empty()) return;
        if (i >= toks.size() || toks[i].kind != TokKind::Name || toks[i].text != "import") return;
        ++i;
        while (i < toks.size()) {
            const Token& t = toks[i];
            if (t.kind == TokKind::Op && (t.text == "(" || t.text == ")" || t.text == ",")) {
                ++i;
                continue;
            }
            if (t.kind == TokKind::Op && t.text == "*") {
                sink.push_back({module, std::string("*"), std::nullopt, line});
                ++i;
                continue;
            }
            if (t.kind != TokKind::Name) break;
            RawImportSite site{module, t.text, std::nullopt, line};
            ++i;
            if (i + 1 < toks.size() && toks[i].kind == TokKind::Name && toks[i].text == "as" &&
                toks[i + 1].kind == TokKind::Name) {
                site.alias = toks[i + 1].text;
                i += 2;
            }
            sink.push_back(std::move(site));
        }
    }
}

class BlockScanner {
public:
    BlockScanner(const std::string& path, const std::vector<std::string>& source_lines,
                 const TokenStream& stream)
        : path_(path), source_lines_(source_lines), stream_(stream) {}

    // Produces entities (file first) and block-structure diagnostics.
    std::pair<std::vector<Entity>, std::vector<SyntaxDiagnostic>> run() {
        Entity file;
        file.id = path_;
        file.kind = EntityKind::File;
        file.name = basename(path_);
        file.path = path_;
        file.start_line = 1;
        file.end_line = stream_.total_lines;
        entities_.push_back(std::move(file));

        for (const LogicalLine& ll : stream_.lines) {
            close_frames(ll.indent);
            check_indent_levels(ll);
            check_pending_block(ll);
            process_line(ll);
        }
        if (pending_block_) {
            errors_.push_back({pending_block_line_, "expected an indented block"});
        }
        finalize_duplicates();
        return {std::move(entities_), std::move(errors_)};
    }

private:
    struct Frame {
        std::size_t entity_index;
        int header_indent;
        bool saw_first_statement = false;
    };

    const std::string& path_;
    const std::vector<std::string>& source_lines_;
    const TokenStream& stream_;
    std::vector<Entity> entities_;
    std::vector<SyntaxDiagnostic> errors_;
    std::vector<Frame> frames_;
    std::vector<int> indent_levels_ = {0};
    bool pending_block_ = false;
    int pending_block_line_ = 0;
    int pending_block_indent_ = 0;
    bool file_docstring_candidate_ = true;

    static std::string basename(const std::string& path) {
        std::size_t pos = path.find_last_of('/');
        return pos == std::string::npos ? path : path.substr(pos + 1);
    }

    void close_frames(int indent) {
        while (!frames_.empty() && indent <= frames_.back().header_indent) frames_.pop_back();
    }

    void check_indent_levels(const LogicalLine& ll) {
        if (ll.indent > indent_levels_.back()) {
            indent_levels_.push_back(ll.indent);
            return;
        }
        while (indent_levels_.size() > 1 && ll.indent < indent_levels_.back())
            indent_levels_.pop_back();
        if (ll.indent != indent_levels_.back()) {
            errors_.push_back(
                {ll.first_line, "unindent does not match any outer indentation level"});
            indent_levels_.push_back(ll.indent);
        }
    }

    void check_pending_block(const LogicalLine& ll) {
        if (!pending_block_) return;
        if (ll.indent <= pending_block_indent_)
            errors_.push_back({pending_block_line_, "expected an indented block"});
        pending_block_ = false;
    }

    Entity& innermost() {
        return frames_.empty() ? entities_[0] : entities_[frames_.back().entity_index];
    }

    void extend_spans(const LogicalLine& ll) {
        for (const Frame& f : frames_) {
            Entity& e = entities_[f.entity_index];
            e.end_line = std::max(e.end_line, ll.last_line);
        }
    }

    std::vector<std::string> qualified_prefix() const {
        std::vector<std::string> parts;
        for (const Frame& f : frames_) parts.push_back(entities_[f.entity_index].name);
        return parts;
    }

    std::string slice_signature(const LogicalLine& ll, std::size_t def_tok, std::size_t colon_tok) {
        const Token& first = ll.tokens[def_tok];
        const Token& colon = ll.tokens[colon_tok];
        if (first.line == colon.line) {
            const std::string& src = source_lines_[first.line - 1];
            return src.substr(first.col, colon.col - first.col + 1);
        }
        std::vector<std::string> parts;
        for (int ln = first.line; ln <= colon.line; ++ln) {
            const std::string& src = source_lines_[ln - 1];
            if (ln == first.line) parts.push_back(src.substr(first.col));
            else if (ln == colon.line) parts.push_back(src.substr(0, colon.col + 1));
            else parts.push_back(src);
        }
        return join(parts, "\n");
    }

    std::optional<std::string> leading_comment_block(int def_line) const {
        std::vector<std::string> collected;
        for (int ln = def_line - 1; ln >= 1; --ln) {
            auto it = stream_.comment_only.find(ln);
            if (it == stream_.comment_only.end()) break;
            std::string text = it->second;
            if (!text.empty() && text[0] == '#') text.erase(0, 1);
            if (!text.empty() && text[0] == ' ') text.erase(0, 1);
            collected.insert(collected.begin(), text);
        }
        if (collected.empty()) return std::nullopt;
        std::string joined = trim(join(collected, "\n"));
        if (joined.empty()) return std::nullopt;
        return joined;
    }

    void process_line(const LogicalLine& ll) {
        const std::vector<Token>& toks = ll.tokens;
        if (toks.empty()) return;
        extend_spans(ll);

        std::size_t head = 0;
        if (toks[head].kind == TokKind::Name && toks[head].text == "async" &&
            head + 1 < toks.size() && toks[head + 1].kind == TokKind::Name &&
            (toks[head + 1].text == "def" || toks[head + 1].text == "for" ||
             toks[head + 1].text == "with"))
            ++head;

        bool is_def = toks[head].kind == TokKind::Name && toks[head].text == "def";
        bool is_class = toks[head].kind == TokKind::Name && toks[head].text == "class";

        if (is_def || is_class) {
            handle_definition(ll, head, is_class);
            file_docstring_candidate_ = false;
            return;
        }

        // module / suite docstrings
        if (is_lone_string(toks, 0, toks.size())) {
            if (!frames_.empty() && !frames_.back().saw_first_statement) {
                Entity& owner = entities_[frames_.back().entity_index];
                owner.docstring = clean_docstring(cook_string_run(toks, 0, toks.size()));
            } else if (frames_.empty() && file_docstring_candidate_) {
                entities_[0].docstring = clean_docstring(cook_string_run(toks, 0, toks.size()));
            }
            mark_statement(ll);
            return;
        }
        mark_statement(ll);

        bool head_is_block_keyword =
            toks[head].kind == TokKind::Name &&
            (toks[head].text == "if" || toks[head].text == "elif" || toks[head].text == "else" ||
             toks[head].text == "for" || toks[head].text == "while" ||
             toks[head].text == "with" || toks[head].text == "try" ||
             toks[head].text == "except" || toks[head].text == "finally");
        if (head_is_block_keyword) {
            std::size_t colon = find_header_colon(toks, head);
            if (colon != std::string::npos && colon + 1 == toks.size()) {
                pending_block_ = true;
                pending_block_line_ = ll.first_line;
                pending_block_indent_ = ll.indent;
            }
        }

        Entity& owner = innermost();
        extract_imports(toks, owner.import_sites);
        extract_calls(toks, 0, toks.size(), owner.call_sites);
    }

    void mark_statement(const LogicalLine& ll) {
        if (!frames_.empty()) frames_.back().saw_first_statement = true;
        if (frames_.empty() && !ll.tokens.empty()) {
            bool decorator = ll.tokens[0].kind == TokKind::Op && ll.tokens[0].text == "@";
            if (!decorator) file_docstring_candidate_ = false;
        }
    }

    void handle_definition(const LogicalLine& ll, std::size_t head, bool is_class) {
        const std::vector<Token>& toks = ll.tokens;
        if (head + 1 >= toks.size() || toks[head + 1].kind != TokKind::Name) {
            errors_.push_back({ll.first_line, "expected a name after 'def' / 'class'"});
            return;
        }
        std::size_t colon = find_header_colon(toks, head);
        if (colon == std::string::npos) {
            errors_.push_back({ll.first_line, "expected ':' at end of definition header"});
            return;
        }

        Entity entity;
        entity.name = toks[head + 1].text;
        entity.path = path_;
        entity.start_line = ll.first_line;
        entity.end_line = ll.last_line;
        entity.signature = slice_signature(ll, head, colon);
        if (is_class) {
            entity.kind = EntityKind::Class;
            entity.bases = extract_bases(toks, head + 2, colon);
        } else {
            bool in_class = !frames_.empty() &&
                            entities_[frames_.back().entity_index].kind == EntityKind::Class;
            entity.kind = in_class ? EntityKind::Method : EntityKind::Function;
        }
        std::vector<std::string> parts = qualified_prefix();
        parts.push_back(entity.name);
        entity.id = entity_id(path_, parts);
        entity.parent = innermost().id;

        mark_statement(ll);

        bool inline_body = colon + 1 < toks.size();
        if (inline_body) {
            if (is_lone_string(toks, colon + 1, toks.size())) {
                entity.docstring = clean_docstring(cook_string_run(toks, colon + 1, toks.size()));
            } else {
                extract_calls(toks, colon + 1, toks.size(), entity.call_sites);
                extract_imports_tail(toks, colon + 1, entity.import_sites);
            }
            if (!entity.docstring) entity.docstring = leading_comment_block(ll.first_line);
            entities_.push_back(std::move(entity));
            return;
        }

        if (!entity.docstring) entity.docstring = leading_comment_block(ll.first_line);
        entities_.push_back(std::move(entity));
        frames_.push_back({entities_.size() - 1, ll.indent, false});
        pending_block_ = true;
        pending_block_line_ = ll.first_line;
        pending_block_indent_ = ll.indent;
    }

    // Imports may legally follow a one-liner header (`def f(): import os`).
    void extract_imports_tail(const std::vector<Token>& toks, std::size_t begin,
                              std::vector<RawImportSite>& sink) {
        if (begin >= toks.size()) return;
        std::vector<Token> tail(toks.begin() + static_cast<long>(begin), toks.end());
        extract_imports(tail, sink);
    }

    // A redefinition keeps the last binding; earlier duplicates and their
    // lexical descendants are removed.
    void finalize_duplicates() {
        std::map<std::string, std::size_t> last_index;
        for (std::size_t i = 0; i < entities_.size(); ++i) last_index[entities_[i].id] = i;
        std::set<std::string> dropped;
        std::vector<Entity> kept;
        for (std::size_t i = 0; i < entities_.size(); ++i) {
            const Entity& e = entities_[i];
            bool duplicate = last_index[e.id] != i;
            bool orphan = e.parent && dropped.count(*e.parent) > 0;
            if (duplicate || orphan) {
                dropped.insert(e.id);
                continue;
            }
            dropped.erase(e.id); // a kept binding shadows an earlier dropped one
            kept.push_back(e);
        }
        entities_ = std::move(kept);
    }
};

} // namespace

std::vector<Entity> PythonFrontend::parse_file(const std::string& path,
                                               const std::string& source_text) const {
    std::string text = source_text;
    if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3); // BOM
    TokenStream stream = Tokenizer(text).run();
    std::vector<std::string> lines = split_lines(text);

    auto bare_file = [&](bool error_flag) {
        Entity file;
        file.id = path;
        file.kind = EntityKind::File;
        std::size_t pos = path.find_last_of('/');
        file.name = pos == std::string::npos ? path : path.substr(pos + 1);
        file.path = path;
        file.start_line = 1;
        file.end_line = std::max(1, static_cast<int>(lines.size()));
        file.parse_error = error_flag;
        return file;
    };

    if (!stream.errors.empty()) return {bare_file(true)};

    auto [entities, block_errors] = BlockScanner(path, lines, stream).run();
    if (!block_errors.empty()) return {bare_file(true)};
    entities[0].end_line = std::max(1, static_cast<int>(lines.size()));
    return entities;
}

SyntaxCheck PythonFrontend::check_syntax(const std::string& source_text) const {
    std::string text = source_text;
    if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);
    TokenStream stream = Tokenizer(text).run();
    SyntaxCheck check;
    check.diagnostics = stream.errors;
    if (stream.errors.empty()) {
        std::vector<std::string> lines = split_lines(text);
        auto [entities, block_errors] = BlockScanner("<snippet>", lines, stream).run();
        (void)entities;
        for (auto& d : block_errors) check.diagnostics.push_back(d);
    }
    std::sort(check.diagnostics.begin(), check.diagnostics.end(),
              [](const SyntaxDiagnostic& a, const SyntaxDiagnostic& b) {
                  return a.line == b.line ? a.message < b.message : a.line < b.line;
              });
    check.ok = check.diagnostics.empty();
    return check;
}

} // namespace codegraph
