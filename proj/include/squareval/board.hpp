#pragma once

// Chess domain core: squares, pieces, positions, FEN, legal moves and SAN.

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "squareval/error.hpp"

namespace squareval {

enum class Color : std::uint8_t { White, Black };

// Canonical order matters: it fixes iteration order and the one-hot layout.
enum class PieceKind : std::uint8_t { King, Queen, Rook, Bishop, Knight, Pawn };

inline constexpr std::array<Color, 2> kColors{Color::White, Color::Black};
inline constexpr std::array<PieceKind, 6> kPieceKinds{PieceKind::King,   PieceKind::Queen,
                                                      PieceKind::Rook,   PieceKind::Bishop,
                                                      PieceKind::Knight, PieceKind::Pawn};

constexpr Color opposite(Color c) noexcept {
    return c == Color::White ? Color::Black : Color::White;
}

constexpr int index_of(Color c) noexcept { return static_cast<int>(c); }
constexpr int index_of(PieceKind k) noexcept { return static_cast<int>(k); }

// Upper-case SAN/FEN letter (K, Q, R, B, N, P).
char piece_letter(PieceKind kind) noexcept;
std::optional<PieceKind> piece_from_letter(char upper) noexcept;
std::string_view color_name(Color c) noexcept;      // "white" / "black"
std::string_view piece_name(PieceKind k) noexcept;  // "king", ..., "pawn"

class Square {
public:
    constexpr Square() = default;
    constexpr Square(int file, int rank) : index_(static_cast<std::uint8_t>(file + 8 * rank)) {}

    static constexpr Square from_index(int index) {
        Square s;
        s.index_ = static_cast<std::uint8_t>(index);
        return s;
    }
    // Accepts algebraic names "a1".."h8"; anything else yields nullopt.
    static std::optional<Square> parse(std::string_view name) noexcept;

    constexpr int file() const noexcept { return index_ % 8; }
    constexpr int rank() const noexcept { return index_ / 8; }
    constexpr int index() const noexcept { return index_; }
    std::string name() const;

    constexpr auto operator<=>(const Square&) const = default;

private:
    std::uint8_t index_ = 0;
};

struct ColoredPiece {
    Color color;
    PieceKind kind;

    constexpr bool operator==(const ColoredPiece&) const = default;
};

// A (color, piece, square) triple: the unit that gets valued.
struct PieceState {
    Color color;
    PieceKind piece;
    Square square;

    constexpr auto operator<=>(const PieceState&) const = default;
};

namespace castling {
inline constexpr std::uint8_t WhiteKingside = 1;
inline constexpr std::uint8_t WhiteQueenside = 2;
inline constexpr std::uint8_t BlackKingside = 4;
inline constexpr std::uint8_t BlackQueenside = 8;
inline constexpr std::uint8_t All = 15;
}  // namespace castling

struct Move {
    enum Flag : std::uint8_t {
        Capture = 1,
        CastleKingside = 2,
        CastleQueenside = 4,
        EnPassant = 8,
    };

    Square from;
    Square to;
    std::optional<PieceKind> promotion;
    std::uint8_t flags = 0;

    bool is_capture() const noexcept { return (flags & Capture) != 0; }
    bool is_castle() const noexcept { return (flags & (CastleKingside | CastleQueenside)) != 0; }
    bool is_en_passant() const noexcept { return (flags & EnPassant) != 0; }

    // Coordinate notation, e.g. "e2e4", "e7e8q".
    std::string uci() const;

    bool operator==(const Move&) const = default;
};

struct Position {
    std::array<std::optional<ColoredPiece>, 64> board{};
    Color side_to_move = Color::White;
    std::uint8_t castling = 0;
    std::optional<Square> en_passant;
    int halfmove_clock = 0;
    int fullmove_number = 1;

    static Position start();

    const std::optional<ColoredPiece>& at(Square s) const { return board[s.index()]; }
    std::optional<ColoredPiece>& at(Square s) { return board[s.index()]; }
    int piece_count() const noexcept;
    std::optional<Square> king_square(Color c) const noexcept;

    bool operator==(const Position&) const = default;
};

class FenError : public InputError {
public:
    FenError(std::string field, std::size_t offset, const std::string& reason);

    const std::string& field() const noexcept { return field_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    std::string field_;
    std::size_t offset_;
};

class IllegalMoveError : public InputError {
public:
    using InputError::InputError;
};

class AmbiguousMoveError : public InputError {
public:
    using InputError::InputError;
};

inline constexpr std::string_view kStartFen =
    "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";

Position parse_fen(std::string_view text);
std::string emit_fen(const Position& p);

bool is_square_attacked(const Position& p, Square s, Color by);
bool in_check(const Position& p);

std::vector<Move> legal_moves(const Position& p);

// Resolves a SAN token against the legal moves of p. Check/mate marks and
// annotation glyphs are ignored.
Move resolve_san(const Position& p, std::string_view san);

// Throws IllegalMoveError unless m is one of legal_moves(p).
Position apply_move(const Position& p, const Move& m);

// One entry per occupied square, sorted by (color, piece, square).
std::vector<PieceState> piece_states(const Position& p);

std::uint64_t perft(const Position& p, int depth);

}  // namespace squareval
