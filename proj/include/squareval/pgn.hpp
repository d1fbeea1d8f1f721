#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "squareval/board.hpp"

namespace squareval {

enum class GameResult { WhiteWin, BlackWin, Draw, Unknown };

std::string_view result_token(GameResult r) noexcept;

struct GameRecord {
    std::vector<std::pair<std::string, std::string>> tags;  // file order
    std::vector<std::string> san_moves;                     // main line only
    GameResult result = GameResult::Unknown;

    std::optional<std::string> tag(std::string_view name) const;
};

struct PgnGameError {
    std::size_t game_index;  // 0-based ordinal of the game in the stream
    std::string reason;
};

// Raised only when the stream itself is unusable (read failure, binary data).
class PgnStreamError : public InputError {
public:
    using InputError::InputError;
};

// Pull parser over a PGN stream. A malformed game is recorded in errors() and
// skipped; parsing resumes at the next tag section.
class PgnReader {
public:
    explicit PgnReader(std::istream& in);

    // Next well-formed game, or nullopt at end of stream.
    std::optional<GameRecord> next();

    // Ordinal (0-based) of the game most recently returned by next().
    std::size_t last_index() const noexcept { return last_index_; }
    std::size_t games_seen() const noexcept { return games_seen_; }
    const std::vector<PgnGameError>& errors() const noexcept { return errors_; }

private:
    bool read_line(std::string& line);
    void unread_line(std::string line);

    std::istream& in_;
    std::optional<std::string> pending_;
    std::size_t line_number_ = 0;
    std::size_t games_seen_ = 0;
    std::size_t last_index_ = 0;
    std::vector<PgnGameError> errors_;
};

// Convenience: parse a whole in-memory text.
std::vector<GameRecord> parse_pgn(std::string_view text, std::vector<PgnGameError>* errors = nullptr);

struct PlyPosition {
    int ply;
    Position position;
};

class ReplayError : public InputError {
public:
    ReplayError(int ply, const std::string& what) : InputError(what), ply_(ply) {}

    // Ply of the move that failed (1 = first move).
    int ply() const noexcept { return ply_; }

private:
    int ply_;
};

// Initial position of the game: the [FEN] tag when present, else the standard start.
Position initial_position(const GameRecord& g);

// Position before each move plus the final position: san_moves.size() + 1 entries.
std::vector<PlyPosition> replay(const GameRecord& g);

}  // namespace squareval
