#pragma once

// UCI engine client: one session per child process, plus a pool runner.

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "squareval/board.hpp"

namespace squareval {

// Forced mates and large scores are clamped to this many pawns.
inline constexpr double kScoreCap = 10.0;
inline constexpr int kRawCentipawnClamp = 1000;

struct EngineLimits {
    enum class Mode { Depth, MoveTime };

    Mode mode = Mode::Depth;
    int depth = 12;
    int movetime_ms = 0;

    static EngineLimits fixed_depth(int depth);
    static EngineLimits fixed_movetime(int ms);

    // The "go ..." command for these limits.
    std::string go_command() const;
};

enum class ScoreKind { Centipawn, MateCapped };

struct Evaluation {
    double pawns_white = 0.0;  // white-relative, |value| <= kScoreCap
    ScoreKind kind = ScoreKind::Centipawn;
    int depth_reached = 0;
    std::optional<int> raw_cp;   // as reported, side-to-move relative
    std::optional<int> mate_in;  // as reported, side-to-move relative

    bool operator==(const Evaluation&) const = default;
};

// A score as printed after "score" on an info line, side-to-move relative.
struct UciScore {
    bool is_mate = false;
    int value = 0;
};

// Converts a side-to-move score into a capped, white-relative evaluation.
Evaluation evaluation_from_score(Color side_to_move, const UciScore& score, int depth);

// Parses "info ... depth D ... score cp|mate X ..."; nullopt for lines without a score.
struct InfoScore {
    int depth = 0;
    int multipv = 1;
    UciScore score;
};
std::optional<InfoScore> parse_info_score(std::string_view line);

class EngineError : public Error {
public:
    enum class Reason { Launch, Timeout, Protocol, Eof, Exhausted };

    EngineError(Reason reason, const std::string& what) : Error(ErrorKind::Engine, what), reason_(reason) {}

    Reason reason() const noexcept { return reason_; }

private:
    Reason reason_;
};

struct SessionOptions {
    std::vector<std::pair<std::string, std::string>> uci_options;  // sent in order
    std::chrono::milliseconds handshake_timeout{10'000};
    // Depth searches have no natural bound; this caps a single "go depth".
    std::chrono::milliseconds depth_search_timeout{300'000};
    std::chrono::milliseconds grace{5'000};
};

// Splits an engine command line on whitespace, honoring double quotes.
std::vector<std::string> split_command(std::string_view command);

class EngineSession {
public:
    // Launches the engine and completes the uci/isready handshake.
    static std::unique_ptr<EngineSession> start(const std::string& engine_command,
                                                const SessionOptions& options = {});

    ~EngineSession();
    EngineSession(const EngineSession&) = delete;
    EngineSession& operator=(const EngineSession&) = delete;

    Evaluation evaluate(const Position& p, const EngineLimits& limits);

    // Every command written to the engine, in order, without newlines.
    const std::vector<std::string>& sent() const noexcept { return sent_; }
    const std::string& engine_name() const noexcept { return name_; }
    bool alive() const noexcept;

private:
    class Process;

    EngineSession(std::unique_ptr<Process> process, SessionOptions options);
    void send(const std::string& command);
    std::string receive(std::chrono::steady_clock::time_point deadline, const char* waiting_for);
    void handshake();

    std::unique_ptr<Process> process_;
    SessionOptions options_;
    std::vector<std::string> sent_;
    std::string name_;
    bool failed_ = false;
};

// Evaluates every position exactly once across the pool; results keep input
// order. A session that fails is retired and its position retried elsewhere.
// Throws EngineError(Exhausted) if every session fails.
using BatchProgress = std::function<void(std::size_t done, std::size_t total)>;

std::vector<std::pair<Position, Evaluation>> evaluate_batch(std::span<EngineSession* const> pool,
                                                           std::span<const Position> positions,
                                                           const EngineLimits& limits,
                                                           const BatchProgress& progress = {});

}  // namespace squareval
