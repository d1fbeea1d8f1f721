#include "squareval/board.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>

namespace squareval {

namespace {

struct Offset {
    int df;
    int dr;
};

constexpr std::array<Offset, 8> kKnightOffsets{{{1, 2}, {2, 1}, {2, -1}, {1, -2},
                                                {-1, -2}, {-2, -1}, {-2, 1}, {-1, 2}}};
constexpr std::array<Offset, 8> kKingOffsets{{{1, 0}, {1, 1}, {0, 1}, {-1, 1},
                                              {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};
constexpr std::array<Offset, 4> kDiagonals{{{1, 1}, {-1, 1}, {-1, -1}, {1, -1}}};
constexpr std::array<Offset, 4> kOrthogonals{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};

constexpr std::array<PieceKind, 4> kPromotionKinds{PieceKind::Queen, PieceKind::Rook,
                                                   PieceKind::Bishop, PieceKind::Knight};

constexpr bool on_board(int file, int rank) noexcept {
    return file >= 0 && file < 8 && rank >= 0 && rank < 8;
}

constexpr int home_rank(Color c) noexcept { return c == Color::White ? 0 : 7; }
constexpr int pawn_direction(Color c) noexcept { return c == Color::White ? 1 : -1; }
constexpr int pawn_start_rank(Color c) noexcept { return c == Color::White ? 1 : 6; }
constexpr int promotion_rank(Color c) noexcept { return c == Color::White ? 7 : 0; }

bool holds(const Position& p, Square s, Color c, PieceKind k) {
    const auto& cell = p.at(s);
    return cell && cell->color == c && cell->kind == k;
}

// Any move from or onto a rook's home corner drops that corner's right.
std::uint8_t rights_lost_at(Square s) {
    switch (s.index()) {
        case 0: return castling::WhiteQueenside;   // a1
        case 7: return castling::WhiteKingside;    // h1
        case 56: return castling::BlackQueenside;  // a8
        case 63: return castling::BlackKingside;   // h8
        default: return 0;
    }
}

Position make_unchecked(const Position& p, const Move& m) {
    Position next = p;
    const ColoredPiece mover = *p.at(m.from);
    const bool is_pawn = mover.kind == PieceKind::Pawn;

    if (m.is_en_passant()) {
        next.at(Square(m.to.file(), m.from.rank())).reset();
    }
    next.at(m.from).reset();
    next.at(m.to) = ColoredPiece{mover.color, m.promotion.value_or(mover.kind)};

    if (m.is_castle()) {
        const int rank = m.from.rank();
        const bool kingside = (m.flags & Move::CastleKingside) != 0;
        const Square rook_from(kingside ? 7 : 0, rank);
        const Square rook_to(kingside ? 5 : 3, rank);
        next.at(rook_to) = next.at(rook_from);
        next.at(rook_from).reset();
    }

    if (mover.kind == PieceKind::King) {
        next.castling &= mover.color == Color::White
                             ? ~(castling::WhiteKingside | castling::WhiteQueenside) & castling::All
                             : ~(castling::BlackKingside | castling::BlackQueenside) & castling::All;
    }
    next.castling &= ~(rights_lost_at(m.from) | rights_lost_at(m.to)) & castling::All;

    next.en_passant.reset();
    if (is_pawn && std::abs(m.to.rank() - m.from.rank()) == 2) {
        next.en_passant = Square(m.from.file(), (m.from.rank() + m.to.rank()) / 2);
    }

    next.halfmove_clock = (is_pawn || m.is_capture()) ? 0 : p.halfmove_clock + 1;
    if (p.side_to_move == Color::Black) {
        ++next.fullmove_number;
    }
    next.side_to_move = opposite(p.side_to_move);
    return next;
}

void add_pawn_moves(const Position& p, Square from, Color us, std::vector<Move>& out) {
    const int dir = pawn_direction(us);
    const int f = from.file();
    const int r = from.rank();

    auto push = [&](Square to, std::uint8_t flags) {
        if (to.rank() == promotion_rank(us)) {
            for (PieceKind k : kPromotionKinds) {
                out.push_back(Move{from, to, k, flags});
            }
        } else {
            out.push_back(Move{from, to, std::nullopt, flags});
        }
    };

    if (on_board(f, r + dir) && !p.at(Square(f, r + dir))) {
        push(Square(f, r + dir), 0);
        if (r == pawn_start_rank(us) && !p.at(Square(f, r + 2 * dir))) {
            push(Square(f, r + 2 * dir), 0);
        }
    }
    for (int df : {-1, 1}) {
        if (!on_board(f + df, r + dir)) {
            continue;
        }
        const Square to(f + df, r + dir);
        const auto& target = p.at(to);
        if (target && target->color != us) {
            push(to, Move::Capture);
        } else if (!target && p.en_passant == to) {
            push(to, Move::Capture | Move::EnPassant);
        }
    }
}

template <std::size_t N>
void add_step_moves(const Position& p, Square from, Color us, const std::array<Offset, N>& offsets,
                    std::vector<Move>& out) {
    for (const auto& o : offsets) {
        const int f = from.file() + o.df;
        const int r = from.rank() + o.dr;
        if (!on_board(f, r)) {
            continue;
        }
        const Square to(f, r);
        const auto& target = p.at(to);
        if (!target) {
            out.push_back(Move{from, to, std::nullopt, 0});
        } else if (target->color != us) {
            out.push_back(Move{from, to, std::nullopt, Move::Capture});
        }
    }
}

void add_slider_moves(const Position& p, Square from, Color us, const std::array<Offset, 4>& dirs,
                      std::vector<Move>& out) {
    for (const auto& d : dirs) {
        int f = from.file() + d.df;
        int r = from.rank() + d.dr;
        while (on_board(f, r)) {
            const Square to(f, r);
            const auto& target = p.at(to);
            if (!target) {
                out.push_back(Move{from, to, std::nullopt, 0});
            } else {
                if (target->color != us) {
                    out.push_back(Move{from, to, std::nullopt, Move::Capture});
                }
                break;
            }
            f += d.df;
            r += d.dr;
        }
    }
}

void add_castling_moves(const Position& p, Color us, std::vector<Move>& out) {
    const int rank = home_rank(us);
    const Square king_from(4, rank);
    if (!holds(p, king_from, us, PieceKind::King)) {
        return;
    }
    const Color them = opposite(us);
    const std::uint8_t kingside =
        us == Color::White ? castling::WhiteKingside : castling::BlackKingside;
    const std::uint8_t queenside =
        us == Color::White ? castling::WhiteQueenside : castling::BlackQueenside;

    if ((p.castling & (kingside | queenside)) == 0 || is_square_attacked(p, king_from, them)) {
        return;
    }
    if ((p.castling & kingside) && holds(p, Square(7, rank), us, PieceKind::Rook) &&
        !p.at(Square(5, rank)) && !p.at(Square(6, rank)) &&
        !is_square_attacked(p, Square(5, rank), them) &&
        !is_square_attacked(p, Square(6, rank), them)) {
        out.push_back(Move{king_from, Square(6, rank), std::nullopt, Move::CastleKingside});
    }
    if ((p.castling & queenside) && holds(p, Square(0, rank), us, PieceKind::Rook) &&
        !p.at(Square(3, rank)) && !p.at(Square(2, rank)) && !p.at(Square(1, rank)) &&
        !is_square_attacked(p, Square(3, rank), them) &&
        !is_square_attacked(p, Square(2, rank), them)) {
        out.push_back(Move{king_from, Square(2, rank), std::nullopt, Move::CastleQueenside});
    }
}

std::vector<Move> pseudo_legal_moves(const Position& p) {
    std::vector<Move> out;
    out.reserve(64);
    const Color us = p.side_to_move;
    for (int i = 0; i < 64; ++i) {
        const Square from = Square::from_index(i);
        const auto& cell = p.at(from);
        if (!cell || cell->color != us) {
            continue;
        }
        switch (cell->kind) {
            case PieceKind::Pawn: add_pawn_moves(p, from, us, out); break;
            case PieceKind::Knight: add_step_moves(p, from, us, kKnightOffsets, out); break;
            case PieceKind::King: add_step_moves(p, from, us, kKingOffsets, out); break;
            case PieceKind::Bishop: add_slider_moves(p, from, us, kDiagonals, out); break;
            case PieceKind::Rook: add_slider_moves(p, from, us, kOrthogonals, out); break;
            case PieceKind::Queen:
                add_slider_moves(p, from, us, kDiagonals, out);
                add_slider_moves(p, from, us, kOrthogonals, out);
                break;
        }
    }
    add_castling_moves(p, us, out);
    return out;
}

bool leaves_king_safe(const Position& p, const Move& m) {
    const Position next = make_unchecked(p, m);
    const auto king = next.king_square(p.side_to_move);
    return !king || !is_square_attacked(next, *king, next.side_to_move);
}

std::string move_context(const Position& p, std::string_view san) {
    std::string ctx = std::to_string(p.fullmove_number);
    ctx += p.side_to_move == Color::White ? ". " : "... ";
    ctx += san;
    return ctx;
}

// ---- FEN parsing helpers ----------------------------------------------------

struct FenField {
    std::string_view text;
    std::size_t offset;
};

std::vector<FenField> split_fields(std::string_view text) {
    std::vector<FenField> fields;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && text[i] == ' ') {
            ++i;
        }
        if (i >= text.size()) {
            break;
        }
        const std::size_t start = i;
        while (i < text.size() && text[i] != ' ') {
            ++i;
        }
        fields.push_back({text.substr(start, i - start), start});
    }
    return fields;
}

int parse_counter(const FenField& f, const char* name, int minimum) {
    int value = 0;
    const auto* first = f.text.data();
    const auto* last = first + f.text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || value < minimum) {
        throw FenError(name, f.offset, "expected integer >= " + std::to_string(minimum) +
                                           ", got '" + std::string(f.text) + "'");
    }
    return value;
}

}  // namespace

// ---- small vocabulary helpers ----------------------------------------------

char piece_letter(PieceKind kind) noexcept {
    constexpr std::array<char, 6> letters{'K', 'Q', 'R', 'B', 'N', 'P'};
    return letters[index_of(kind)];
}

std::optional<PieceKind> piece_from_letter(char upper) noexcept {
    switch (upper) {
        case 'K': return PieceKind::King;
        case 'Q': return PieceKind::Queen;
        case 'R': return PieceKind::Rook;
        case 'B': return PieceKind::Bishop;
        case 'N': return PieceKind::Knight;
        case 'P': return PieceKind::Pawn;
        default: return std::nullopt;
    }
}

std::string_view color_name(Color c) noexcept { return c == Color::White ? "white" : "black"; }

std::string_view piece_name(PieceKind k) noexcept {
    constexpr std::array<std::string_view, 6> names{"king",   "queen",  "rook",
                                                    "bishop", "knight", "pawn"};
    return names[index_of(k)];
}

std::optional<Square> Square::parse(std::string_view name) noexcept {
    if (name.size() != 2 || name[0] < 'a' || name[0] > 'h' || name[1] < '1' || name[1] > '8') {
        return std::nullopt;
    }
    return Square(name[0] - 'a', name[1] - '1');
}

std::string Square::name() const {
    return {static_cast<char>('a' + file()), static_cast<char>('1' + rank())};
}

std::string Move::uci() const {
    std::string s = from.name() + to.name();
    if (promotion) {
        s += static_cast<char>(piece_letter(*promotion) - 'A' + 'a');
    }
    return s;
}

Position Position::start() { return parse_fen(kStartFen); }

int Position::piece_count() const noexcept {
    return static_cast<int>(std::count_if(board.begin(), board.end(),
                                          [](const auto& cell) { return cell.has_value(); }));
}

std::optional<Square> Position::king_square(Color c) const noexcept {
    for (int i = 0; i < 64; ++i) {
        const auto& cell = board[i];
        if (cell && cell->color == c && cell->kind == PieceKind::King) {
            return Square::from_index(i);
        }
    }
    return std::nullopt;
}

FenError::FenError(std::string field, std::size_t offset, const std::string& reason)
    : InputError("invalid FEN " + field + " at offset " + std::to_string(offset) + ": " +
                 reason),
      field_(std::move(field)),
      offset_(offset) {}

// ---- FEN --------------------------------------------------------------------

Position parse_fen(std::string_view text) {
    const auto fields = split_fields(text);
    if (fields.size() != 6) {
        throw FenError("record", 0, "expected 6 fields, got " + std::to_string(fields.size()));
    }

    Position p;
    const FenField& placement = fields[0];
    int rank = 7;
    int file = 0;
    for (std::size_t i = 0; i < placement.text.size(); ++i) {
        const char c = placement.text[i];
        const std::size_t offset = placement.offset + i;
        if (c == '/') {
            if (file != 8) {
                throw FenError("placement", offset, "rank " + std::to_string(rank + 1) +
                                                        " has length " + std::to_string(file));
            }
            if (--rank < 0) {
                throw FenError("placement", offset, "more than 8 ranks");
            }
            file = 0;
        } else if (c >= '1' && c <= '8') {
            file += c - '0';
            if (file > 8) {
                throw FenError("placement", offset, "rank " + std::to_string(rank + 1) +
                                                        " is longer than 8 squares");
            }
        } else {
            const bool white = c >= 'A' && c <= 'Z';
            const auto kind = piece_from_letter(white ? c : static_cast<char>(c - 'a' + 'A'));
            if (!kind) {
                throw FenError("placement", offset, std::string("invalid piece letter '") + c + "'");
            }
            if (file >= 8) {
                throw FenError("placement", offset, "rank " + std::to_string(rank + 1) +
                                                        " is longer than 8 squares");
            }
            p.at(Square(file, rank)) = ColoredPiece{white ? Color::White : Color::Black, *kind};
            ++file;
        }
    }
    if (rank != 0) {
        throw FenError("placement", placement.offset,
                       "expected 8 ranks, got " + std::to_string(8 - rank));
    }
    if (file != 8) {
        throw FenError("placement", placement.offset + placement.text.size(),
                       "rank 1 has length " + std::to_string(file));
    }

    const FenField& side = fields[1];
    if (side.text == "w") {
        p.side_to_move = Color::White;
    } else if (side.text == "b") {
        p.side_to_move = Color::Black;
    } else {
        throw FenError("side", side.offset, "expected 'w' or 'b', got '" + std::string(side.text) + "'");
    }

    const FenField& rights = fields[2];
    if (rights.text != "-") {
        for (std::size_t i = 0; i < rights.text.size(); ++i) {
            std::uint8_t bit = 0;
            switch (rights.text[i]) {
                case 'K': bit = castling::WhiteKingside; break;
                case 'Q': bit = castling::WhiteQueenside; break;
                case 'k': bit = castling::BlackKingside; break;
                case 'q': bit = castling::BlackQueenside; break;
                default:
                    throw FenError("castling", rights.offset + i,
                                   std::string("unsupported castling token '") + rights.text[i] + "'");
            }
            if (p.castling & bit) {
                throw FenError("castling", rights.offset + i, "duplicate castling token");
            }
            p.castling |= bit;
        }
    }

    const FenField& ep = fields[3];
    if (ep.text != "-") {
        const auto sq = Square::parse(ep.text);
        if (!sq) {
            throw FenError("en_passant", ep.offset, "invalid square '" + std::string(ep.text) + "'");
        }
        const int expected = p.side_to_move == Color::White ? 5 : 2;
        if (sq->rank() != expected) {
            throw FenError("en_passant", ep.offset,
                           "square " + sq->name() + " is not on rank " + std::to_string(expected + 1));
        }
        p.en_passant = sq;
    }

    p.halfmove_clock = parse_counter(fields[4], "halfmove_clock", 0);
    p.fullmove_number = parse_counter(fields[5], "fullmove_number", 1);

    for (Color c : kColors) {
        int kings = 0;
        for (const auto& cell : p.board) {
            kings += cell && cell->color == c && cell->kind == PieceKind::King;
        }
        if (kings > 1) {
            throw FenError("placement", placement.offset,
                           "more than one " + std::string(color_name(c)) + " king");
        }
    }
    for (int f = 0; f < 8; ++f) {
        for (int r : {0, 7}) {
            const auto& cell = p.at(Square(f, r));
            if (cell && cell->kind == PieceKind::Pawn) {
                throw FenError("placement", placement.offset,
                               "pawn on back rank " + Square(f, r).name());
            }
        }
    }
    return p;
}

std::string emit_fen(const Position& p) {
    std::string out;
    out.reserve(90);
    for (int rank = 7; rank >= 0; --rank) {
        int empty = 0;
        for (int file = 0; file < 8; ++file) {
            const auto& cell = p.at(Square(file, rank));
            if (!cell) {
                ++empty;
                continue;
            }
            if (empty > 0) {
                out += static_cast<char>('0' + empty);
                empty = 0;
            }
            const char letter = piece_letter(cell->kind);
            out += cell->color == Color::White ? letter : static_cast<char>(letter - 'A' + 'a');
        }
        if (empty > 0) {
            out += static_cast<char>('0' + empty);
        }
        if (rank > 0) {
            out += '/';
        }
    }
    out += p.side_to_move == Color::White ? " w " : " b ";
    if (p.castling == 0) {
        out += '-';
    } else {
        if (p.castling & castling::WhiteKingside) out += 'K';
        if (p.castling & castling::WhiteQueenside) out += 'Q';
        if (p.castling & castling::BlackKingside) out += 'k';
        if (p.castling & castling::BlackQueenside) out += 'q';
    }
    out += ' ';
    out += p.en_passant ? p.en_passant->name() : "-";
    out += ' ';
    out += std::to_string(p.halfmove_clock);
    out += ' ';
    out += std::to_string(p.fullmove_number);
    return out;
}

// ---- attacks and move generation -----------------------------------------

bool is_square_attacked(const Position& p, Square s, Color by) {
    const int f = s.file();
    const int r = s.rank();

    // A pawn of `by` attacks s from one rank behind (relative to its direction).
    const int pr = r - pawn_direction(by);
    for (int df : {-1, 1}) {
        if (on_board(f + df, pr) && holds(p, Square(f + df, pr), by, PieceKind::Pawn)) {
            return true;
        }
    }
    for (const auto& o : kKnightOffsets) {
        if (on_board(f + o.df, r + o.dr) && holds(p, Square(f + o.df, r + o.dr), by, PieceKind::Knight)) {
            return true;
        }
    }
    for (const auto& o : kKingOffsets) {
        if (on_board(f + o.df, r + o.dr) && holds(p, Square(f + o.df, r + o.dr), by, PieceKind::King)) {
            return true;
        }
    }
    auto ray_hits = [&](const std::array<Offset, 4>& dirs, PieceKind slider) {
        for (const auto& d : dirs) {
            int ff = f + d.df;
            int rr = r + d.dr;
            while (on_board(ff, rr)) {
                const auto& cell = p.at(Square(ff, rr));
                if (cell) {
                    if (cell->color == by && (cell->kind == slider || cell->kind == PieceKind::Queen)) {
                        return true;
                    }
                    break;
                }
                ff += d.df;
                rr += d.dr;
            }
        }
        return false;
    };
    return ray_hits(kDiagonals, PieceKind::Bishop) || ray_hits(kOrthogonals, PieceKind::Rook);
}

bool in_check(const Position& p) {
    const auto king = p.king_square(p.side_to_move);
    return king && is_square_attacked(p, *king, opposite(p.side_to_move));
}

std::vector<Move> legal_moves(const Position& p) {
    auto moves = pseudo_legal_moves(p);
    std::erase_if(moves, [&](const Move& m) { return !leaves_king_safe(p, m); });
    return moves;
}

Position apply_move(const Position& p, const Move& m) {
    const auto moves = legal_moves(p);
    // Callers may pass a bare from/to/promotion triple; match on those and take
    // the generator's flags.
    const auto it = std::find_if(moves.begin(), moves.end(), [&](const Move& legal) {
        return legal.from == m.from && legal.to == m.to && legal.promotion == m.promotion;
    });
    if (it == moves.end()) {
        throw IllegalMoveError("illegal move " + m.uci() + " in " + emit_fen(p));
    }
    return make_unchecked(p, *it);
}

std::vector<PieceState> piece_states(const Position& p) {
    std::vector<PieceState> states;
    states.reserve(32);
    for (int i = 0; i < 64; ++i) {
        const auto& cell = p.board[i];
        if (cell) {
            states.push_back(PieceState{cell->color, cell->kind, Square::from_index(i)});
        }
    }
    std::sort(states.begin(), states.end());
    return states;
}

std::uint64_t perft(const Position& p, int depth) {
    if (depth <= 0) {
        return 1;
    }
    const auto moves = legal_moves(p);
    if (depth == 1) {
        return moves.size();
    }
    std::uint64_t nodes = 0;
    for (const auto& m : moves) {
        nodes += perft(make_unchecked(p, m), depth - 1);
    }
    return nodes;
}

// ---- SAN --------------------------------------------------------------------

Move resolve_san(const Position& p, std::string_view san) {
    const std::string_view original = san;
    while (!san.empty() && (san.back() == '+' || san.back() == '#' || san.back() == '!' ||
                            san.back() == '?')) {
        san.remove_suffix(1);
    }
    if (san.ends_with("e.p.")) {
        san.remove_suffix(4);
    }
    if (san.empty()) {
        throw IllegalMoveError("empty move token at " + move_context(p, original));
    }

    const auto moves = legal_moves(p);

    auto unique_match = [&](auto&& predicate) {
        std::optional<Move> found;
        int matches = 0;
        for (const auto& m : moves) {
            if (predicate(m)) {
                found = m;
                ++matches;
            }
        }
        if (matches == 0) {
            throw IllegalMoveError("illegal move " + move_context(p, original) + " in " + emit_fen(p));
        }
        if (matches > 1) {
            throw AmbiguousMoveError("ambiguous move " + move_context(p, original) + " matches " +
                                     std::to_string(matches) + " legal moves in " + emit_fen(p));
        }
        return *found;
    };

    if (san == "O-O" || san == "0-0") {
        return unique_match([](const Move& m) { return (m.flags & Move::CastleKingside) != 0; });
    }
    if (san == "O-O-O" || san == "0-0-0") {
        return unique_match([](const Move& m) { return (m.flags & Move::CastleQueenside) != 0; });
    }

    std::optional<PieceKind> promotion;
    if (san.size() >= 3) {
        const char last = san.back();
        const auto kind = piece_from_letter(static_cast<char>(last >= 'a' && last <= 'z' ? last - 'a' + 'A' : last));
        const bool after_eq = san[san.size() - 2] == '=';
        const bool after_digit = san[san.size() - 2] == '1' || san[san.size() - 2] == '8';
        // Lower-case letters only count as promotions after '=' ("e8=q"), so
        // "b" is never mistaken for a promotion piece.
        const bool upper = last >= 'A' && last <= 'Z';
        if (kind && *kind != PieceKind::King && *kind != PieceKind::Pawn &&
            (after_eq || (after_digit && upper))) {
            promotion = kind;
            san.remove_suffix(after_eq ? 2 : 1);
        }
    }

    if (san.size() < 2) {
        throw IllegalMoveError("malformed move " + move_context(p, original));
    }
    const auto dest = Square::parse(san.substr(san.size() - 2));
    if (!dest) {
        throw IllegalMoveError("malformed move " + move_context(p, original));
    }
    san.remove_suffix(2);

    PieceKind kind = PieceKind::Pawn;
    if (!san.empty() && san.front() >= 'A' && san.front() <= 'Z') {
        const auto k = piece_from_letter(san.front());
        if (!k) {
            throw IllegalMoveError("malformed move " + move_context(p, original));
        }
        kind = *k;
        san.remove_prefix(1);
    }

    std::optional<int> from_file;
    std::optional<int> from_rank;
    for (char c : san) {
        if (c == 'x' || c == ':' || c == '-') {
            continue;
        }
        if (c >= 'a' && c <= 'h') {
            from_file = c - 'a';
        } else if (c >= '1' && c <= '8') {
            from_rank = c - '1';
        } else {
            throw IllegalMoveError("malformed move " + move_context(p, original));
        }
    }

    return unique_match([&](const Move& m) {
        const auto& cell = p.at(m.from);
        if (m.is_castle() || m.to != *dest || !cell || cell->kind != kind) {
            return false;
        }
        if (from_file && m.from.file() != *from_file) {
            return false;
        }
        if (from_rank && m.from.rank() != *from_rank) {
            return false;
        }
        if (kind == PieceKind::Pawn && !from_file && m.from.file() != dest->file()) {
            return false;
        }
        return m.promotion == promotion;
    });
}

}  // namespace squareval
