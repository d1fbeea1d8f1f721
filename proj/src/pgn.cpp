#include "squareval/pgn.hpp"

#include <algorithm>
#include <sstream>

namespace squareval {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

bool is_blank(std::string_view line) { return std::all_of(line.begin(), line.end(), is_space); }

bool starts_tag(std::string_view line) {
    const auto pos = line.find_first_not_of(" \t");
    return pos != std::string_view::npos && line[pos] == '[';
}

std::optional<GameResult> parse_result(std::string_view token) {
    if (token == "1-0") return GameResult::WhiteWin;
    if (token == "0-1") return GameResult::BlackWin;
    if (token == "1/2-1/2") return GameResult::Draw;
    if (token == "*") return GameResult::Unknown;
    return std::nullopt;
}

bool is_annotation_glyph(std::string_view token) {
    if (!token.empty() && token.find_first_not_of("!?") == std::string_view::npos) {
        return true;
    }
    static constexpr std::string_view glyphs[] = {"+-", "-+", "+/-", "-/+", "+=", "=+", "=", "+/=", "=/+"};
    return std::find(std::begin(glyphs), std::end(glyphs), token) != std::end(glyphs);
}

bool looks_like_san(std::string_view token) {
    if (token.empty()) {
        return false;
    }
    constexpr std::string_view lead = "KQRBNPabcdefghO0";
    constexpr std::string_view body = "KQRBNPabcdefgh12345678xO0-=+#!?:qrbn.";
    if (lead.find(token.front()) == std::string_view::npos) {
        return false;
    }
    if (token == "--" || token.find_first_not_of(body) != std::string_view::npos) {
        return false;
    }
    // Castling tokens aside, a move must name a destination square.
    return token.starts_with("O-O") || token.starts_with("0-0") ||
           token.find_first_of("12345678") != std::string_view::npos;
}

// Parses one or more "[Name "value"]" pairs on a line. Returns an error reason on failure.
std::optional<std::string> parse_tags(std::string_view line,
                                      std::vector<std::pair<std::string, std::string>>& tags) {
    std::size_t i = 0;
    auto skip_ws = [&] {
        while (i < line.size() && is_space(line[i])) ++i;
    };
    skip_ws();
    while (i < line.size()) {
        if (line[i] != '[') {
            return "unexpected text after tag pair";
        }
        ++i;
        skip_ws();
        std::string name;
        while (i < line.size() && !is_space(line[i]) && line[i] != '"' && line[i] != ']') {
            name += line[i++];
        }
        if (name.empty()) {
            return "tag without a name";
        }
        skip_ws();
        if (i >= line.size() || line[i] != '"') {
            return "tag " + name + " has no quoted value";
        }
        ++i;
        std::string value;
        bool closed = false;
        while (i < line.size()) {
            const char c = line[i++];
            if (c == '\\' && i < line.size()) {
                value += line[i++];
            } else if (c == '"') {
                closed = true;
                break;
            } else {
                value += c;
            }
        }
        if (!closed) {
            return "unterminated value for tag " + name;
        }
        skip_ws();
        if (i >= line.size() || line[i] != ']') {
            return "tag " + name + " is missing ']'";
        }
        ++i;
        tags.emplace_back(std::move(name), std::move(value));
        skip_ws();
    }
    return std::nullopt;
}

// Incremental movetext scanner; state survives across lines.
struct MovetextScanner {
    int depth = 0;
    bool in_comment = false;
    std::optional<GameResult> terminator;
    std::optional<std::string> error;
    bool saw_content = false;

    void feed(std::string_view line, std::vector<std::string>& moves) {
        std::string token;
        auto flush = [&] {
            if (!token.empty()) {
                handle_token(token, moves);
                token.clear();
            }
        };
        for (std::size_t i = 0; i < line.size() && !terminator && !error; ++i) {
            const char c = line[i];
            if (in_comment) {
                if (c == '}') in_comment = false;
                continue;
            }
            if (c == '{' || c == '}' || c == '(' || c == ')' || c == ';' || is_space(c)) {
                flush();
                if (terminator || error) break;
            }
            switch (c) {
                case '{': in_comment = true; saw_content = true; break;
                case '}': error = "unexpected '}'"; break;
                case '(': ++depth; saw_content = true; break;
                case ')':
                    if (depth == 0) {
                        error = "unbalanced ')'";
                    } else {
                        --depth;
                    }
                    break;
                case ';': return;  // rest-of-line comment
                default:
                    if (!is_space(c)) token += c;
            }
        }
        if (!terminator && !error) flush();
    }

    void handle_token(std::string_view token, std::vector<std::string>& moves) {
        saw_content = true;
        if (depth > 0) {
            return;
        }
        if (const auto result = parse_result(token)) {
            terminator = result;
            return;
        }
        // Move numbers: "12." "12..." and the glued form "12.e4".
        std::size_t digits = 0;
        while (digits < token.size() && token[digits] >= '0' && token[digits] <= '9') ++digits;
        if (digits > 0 && digits < token.size() && token[digits] == '.') {
            token.remove_prefix(digits);
            while (!token.empty() && token.front() == '.') token.remove_prefix(1);
            if (token.empty()) return;
        } else if (digits == token.size()) {
            return;
        }
        if (token.find_first_not_of('.') == std::string_view::npos) {
            return;
        }
        if (token.front() == '$' || is_annotation_glyph(token)) {
            return;
        }
        if (!looks_like_san(token)) {
            error = "invalid movetext token '" + std::string(token) + "'";
            return;
        }
        moves.emplace_back(token);
    }
};

}  // namespace

std::string_view result_token(GameResult r) noexcept {
    switch (r) {
        case GameResult::WhiteWin: return "1-0";
        case GameResult::BlackWin: return "0-1";
        case GameResult::Draw: return "1/2-1/2";
        case GameResult::Unknown: return "*";
    }
    return "*";
}

std::optional<std::string> GameRecord::tag(std::string_view name) const {
    for (const auto& [k, v] : tags) {
        if (k == name) return v;
    }
    return std::nullopt;
}

PgnReader::PgnReader(std::istream& in) : in_(in) {}

bool PgnReader::read_line(std::string& line) {
    if (pending_) {
        line = std::move(*pending_);
        pending_.reset();
        return true;
    }
    if (!std::getline(in_, line)) {
        if (in_.bad()) {
            throw PgnStreamError("PGN read failure after line " + std::to_string(line_number_));
        }
        return false;
    }
    ++line_number_;
    if (line_number_ == 1 && line.starts_with("\xEF\xBB\xBF")) {
        line.erase(0, 3);
    }
    if (line.find('\0') != std::string::npos) {
        throw PgnStreamError("binary data (NUL byte) on PGN line " + std::to_string(line_number_));
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    return true;
}

void PgnReader::unread_line(std::string line) { pending_ = std::move(line); }

std::optional<GameRecord> PgnReader::next() {
    enum class Phase { Start, Tags, Movetext };
    std::string line;

    for (;;) {
        GameRecord game;
        MovetextScanner scanner;
        Phase phase = Phase::Start;
        std::optional<std::string> failure;
        bool complete = false;

        while (!complete && !failure && read_line(line)) {
            if (line.starts_with('%')) {
                continue;
            }
            if (phase == Phase::Start) {
                if (is_blank(line)) continue;
                ++games_seen_;
                phase = starts_tag(line) ? Phase::Tags : Phase::Movetext;
            }
            if (phase == Phase::Tags) {
                if (is_blank(line)) continue;
                if (starts_tag(line)) {
                    failure = parse_tags(line, game.tags);
                    continue;
                }
                phase = Phase::Movetext;
            }
            // Movetext.
            if (starts_tag(line) && scanner.depth == 0 && !scanner.in_comment) {
                // Next game's tags without a termination marker on this one.
                unread_line(std::move(line));
                complete = true;
                break;
            }
            if (starts_tag(line)) {
                unread_line(std::move(line));
                failure = scanner.in_comment ? "unterminated comment" : "unterminated variation";
                break;
            }
            scanner.feed(line, game.san_moves);
            if (scanner.error) {
                failure = scanner.error;
            } else if (scanner.terminator) {
                complete = true;
            }
        }

        if (phase == Phase::Start) {
            return std::nullopt;  // clean end of stream
        }
        const std::size_t index = games_seen_ - 1;
        if (!failure && !complete) {
            // End of stream inside this game.
            if (scanner.in_comment) {
                failure = "unterminated comment at end of input";
            } else if (scanner.depth > 0) {
                failure = "unterminated variation at end of input";
            }
        }
        if (failure) {
            errors_.push_back({index, *failure});
            // Skip the remainder of this game: everything up to the next tag
            // section that follows some movetext.
            bool seen_movetext = phase == Phase::Movetext;
            while (read_line(line)) {
                if (starts_tag(line) && seen_movetext) {
                    unread_line(std::move(line));
                    break;
                }
                if (!is_blank(line) && !starts_tag(line) && !line.starts_with('%')) {
                    seen_movetext = true;
                }
            }
            continue;
        }

        if (scanner.terminator) {
            game.result = *scanner.terminator;
        } else if (const auto tag = game.tag("Result")) {
            game.result = parse_result(*tag).value_or(GameResult::Unknown);
        }
        last_index_ = index;
        return game;
    }
}

std::vector<GameRecord> parse_pgn(std::string_view text, std::vector<PgnGameError>* errors) {
    std::istringstream in{std::string(text)};
    PgnReader reader(in);
    std::vector<GameRecord> games;
    while (auto g = reader.next()) {
        games.push_back(std::move(*g));
    }
    if (errors) {
        *errors = reader.errors();
    }
    return games;
}

Position initial_position(const GameRecord& g) {
    if (const auto fen = g.tag("FEN")) {
        return parse_fen(*fen);
    }
    return Position::start();
}

std::vector<PlyPosition> replay(const GameRecord& g) {
    auto describe = [&] {
        std::string who;
        for (const char* key : {"Event", "Round", "White", "Black"}) {
            if (const auto v = g.tag(key)) {
                who += std::string(who.empty() ? "" : ", ") + key + "=" + *v;
            }
        }
        return who.empty() ? std::string("untagged game") : who;
    };

    std::vector<PlyPosition> out;
    out.reserve(g.san_moves.size() + 1);
    try {
        out.push_back({0, initial_position(g)});
    } catch (const FenError& e) {
        throw ReplayError(0, "bad FEN tag in game [" + describe() + "]: " + e.what());
    }
    for (std::size_t i = 0; i < g.san_moves.size(); ++i) {
        const int ply = static_cast<int>(i) + 1;
        const Position& current = out.back().position;
        try {
            const Move m = resolve_san(current, g.san_moves[i]);
            out.push_back({ply, apply_move(current, m)});
        } catch (const InputError& e) {
            throw ReplayError(ply, "replay failed at ply " + std::to_string(ply) + " in game [" +
                                       describe() + "]: " + e.what());
        }
    }
    return out;
}

}  // namespace squareval
