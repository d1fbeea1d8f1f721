#pragma once

// Supervised examples: (color, piece, square) states labeled with the engine
// evaluation of the position they came from.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "squareval/board.hpp"
#include "squareval/engine.hpp"
#include "squareval/pgn.hpp"

namespace squareval {

// Layout: [0,2) color, [2,8) piece kind, [8,72) square index file + 8*rank.
inline constexpr std::size_t kInputSize = 72;
using InputVector = std::array<double, kInputSize>;

InputVector encode(const PieceState& s);

// Which (color, piece) states make it into the dataset.
class StateFilter {
public:
    static StateFilter all() { return StateFilter(0x3F, 0x3); }

    // Comma-separated tokens: all, kings, queens, rooks, bishops, knights,
    // pawns, minors (knights+bishops), white, black; or piece letters K Q R B N P.
    static StateFilter parse(std::string_view text);

    StateFilter with_pieces(std::initializer_list<PieceKind> kinds) const;
    bool accepts(const PieceState& s) const noexcept;
    std::string describe() const;

    bool operator==(const StateFilter&) const = default;

private:
    StateFilter(std::uint8_t pieces, std::uint8_t colors) : pieces_(pieces), colors_(colors) {}

    std::uint8_t pieces_;
    std::uint8_t colors_;
};

struct LabeledExample {
    PieceState state;
    double target_pawns = 0.0;  // color-relative
    std::int64_t game_id = 0;
    int ply = 0;

    bool operator==(const LabeledExample&) const = default;
};

struct EncodedExample {
    InputVector x{};
    double y = 0.0;
};

EncodedExample encode(const LabeledExample& e);

// Color-relative target: White states keep the white-relative score, Black
// states take its negation.
double color_relative(Color c, double pawns_white) noexcept;

// All states of one evaluated position that pass the filter, in piece_states order.
std::vector<LabeledExample> examples_from_position(const Position& p, double pawns_white,
                                                   std::int64_t game_id, int ply,
                                                   const StateFilter& filter);

struct ExtractReport {
    std::size_t games_used = 0;
    std::size_t games_skipped = 0;
    std::size_t positions = 0;
    std::vector<std::string> skip_reasons;
};

using EvaluationLookup = std::function<Evaluation(const Position&)>;

// Replays each game and labels every position through `evals`; game_id is the
// index into `games`. Games that fail to replay are skipped and reported.
std::vector<LabeledExample> extract_examples(std::span<const GameRecord> games,
                                             const EvaluationLookup& evals,
                                             const StateFilter& filter,
                                             ExtractReport* report = nullptr);

struct DatasetSplit {
    std::vector<EncodedExample> train;
    std::vector<EncodedExample> validation;
    std::uint64_t seed = 0;
    double fraction = 0.8;
};

// Deterministic split by game: round(fraction * games) games (at least one on
// each side) go to training. Throws UsageError with fewer than two games.
DatasetSplit split(std::span<const LabeledExample> examples, double fraction, std::uint64_t seed);

class DatasetError : public InputError {
public:
    DatasetError(std::size_t row, const std::string& what)
        : InputError(row == 0 ? what : "row " + std::to_string(row) + ": " + what), row_(row) {}

    // 1-based data row (0 for header/file problems).
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

inline constexpr std::string_view kDatasetHeader = "squareval-dataset v1";

void save_dataset(const std::filesystem::path& path, std::span<const LabeledExample> examples);
std::vector<LabeledExample> load_dataset(const std::filesystem::path& path);

// Position-evaluation file produced by labeling:
//   squareval-evals v1
//   game_id,ply,fen,pawns_white,depth
inline constexpr std::string_view kEvalsHeader = "squareval-evals v1";

struct EvalRow {
    std::int64_t game_id = 0;
    int ply = 0;
    std::string fen;
    double pawns_white = 0.0;
    int depth = 0;

    bool operator==(const EvalRow&) const = default;
};

void save_evals(const std::filesystem::path& path, std::span<const EvalRow> rows);
std::vector<EvalRow> load_evals(const std::filesystem::path& path);

// Labeled examples for every row, with the filter applied.
std::vector<LabeledExample> examples_from_evals(std::span<const EvalRow> rows, const StateFilter& filter);

}  // namespace squareval
