#include "squareval/dataset.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include "squareval/rng.hpp"

namespace squareval {

namespace {

constexpr std::uint8_t piece_bit(PieceKind k) { return static_cast<std::uint8_t>(1u << index_of(k)); }
constexpr std::uint8_t color_bit(Color c) { return static_cast<std::uint8_t>(1u << index_of(c)); }

std::string format_pawns(double v) {
    std::string s = fmt::format("{:.4f}", v);
    if (s == "-0.0000") s = "0.0000";
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size() && !text.empty();
}

std::ifstream open_for_read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DatasetError(0, "cannot open " + path.string());
    }
    return in;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DatasetError(0, "cannot write " + path.string());
    }
    return out;
}

void check_header(std::istream& in, std::string_view expected, const std::filesystem::path& path) {
    std::string header;
    if (!std::getline(in, header)) {
        throw DatasetError(0, path.string() + " is empty (missing header)");
    }
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header == expected) return;
    const auto space = expected.find(' ');
    if (header.starts_with(expected.substr(0, space + 1))) {
        throw DatasetError(0, "unsupported version '" + header + "' in " + path.string() + " (expected '" +
                                  std::string(expected) + "')");
    }
    throw DatasetError(0, path.string() + " has no '" + std::string(expected) + "' header");
}

}  // namespace

// ---- encoding -----------------------------------------------------------------

InputVector encode(const PieceState& s) {
    InputVector x{};
    x[static_cast<std::size_t>(index_of(s.color))] = 1.0;
    x[2 + static_cast<std::size_t>(index_of(s.piece))] = 1.0;
    x[8 + static_cast<std::size_t>(s.square.index())] = 1.0;
    return x;
}

EncodedExample encode(const LabeledExample& e) { return EncodedExample{encode(e.state), e.target_pawns}; }

double color_relative(Color c, double pawns_white) noexcept {
    const double v = c == Color::White ? pawns_white : -pawns_white;
    return v == 0.0 ? 0.0 : v;
}

// ---- filter ---------------------------------------------------------------------

StateFilter StateFilter::parse(std::string_view text) {
    std::uint8_t pieces = 0;
    std::uint8_t colors = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        if (comma == std::string_view::npos) comma = text.size();
        std::string token(text.substr(start, comma - start));
        std::transform(token.begin(), token.end(), token.begin(), [](unsigned char c) { return std::tolower(c); });
        start = comma + 1;
        if (token.empty()) continue;

        if (token == "all") pieces = 0x3F;
        else if (token == "minors") pieces |= piece_bit(PieceKind::Knight) | piece_bit(PieceKind::Bishop);
        else if (token == "white") colors |= color_bit(Color::White);
        else if (token == "black") colors |= color_bit(Color::Black);
        else {
            bool matched = false;
            for (PieceKind k : kPieceKinds) {
                const std::string name(piece_name(k));
                const char letter = static_cast<char>(std::tolower(piece_letter(k)));
                if (token == name || token == name + "s" || token == std::string(1, letter)) {
                    pieces |= piece_bit(k);
                    matched = true;
                }
            }
            if (!matched) throw UsageError("unknown filter token '" + token + "'");
        }
    }
    if (pieces == 0) pieces = 0x3F;  // a colour-only filter keeps every piece
    if (colors == 0) colors = 0x3;
    return StateFilter(pieces, colors);
}

StateFilter StateFilter::with_pieces(std::initializer_list<PieceKind> kinds) const {
    std::uint8_t pieces = 0;
    for (PieceKind k : kinds) pieces |= piece_bit(k);
    return StateFilter(pieces, colors_);
}

bool StateFilter::accepts(const PieceState& s) const noexcept {
    return (pieces_ & piece_bit(s.piece)) && (colors_ & color_bit(s.color));
}

std::string StateFilter::describe() const {
    std::string out;
    if (pieces_ == 0x3F) {
        out = "all";
    } else {
        for (PieceKind k : kPieceKinds) {
            if (pieces_ & piece_bit(k)) {
                if (!out.empty()) out += ',';
                out += std::string(piece_name(k)) + "s";
            }
        }
    }
    if (colors_ != 0x3) out += colors_ == color_bit(Color::White) ? ",white" : ",black";
    return out;
}

// ---- extraction -----------------------------------------------------------------

std::vector<LabeledExample> examples_from_position(const Position& p, double pawns_white,
                                                   std::int64_t game_id, int ply,
                                                   const StateFilter& filter) {
    std::vector<LabeledExample> out;
    for (const auto& s : piece_states(p)) {
        if (filter.accepts(s)) {
            out.push_back(LabeledExample{s, color_relative(s.color, pawns_white), game_id, ply});
        }
    }
    return out;
}

std::vector<LabeledExample> extract_examples(std::span<const GameRecord> games,
                                             const EvaluationLookup& evals,
                                             const StateFilter& filter,
                                             ExtractReport* report) {
    ExtractReport local;
    std::vector<LabeledExample> out;
    for (std::size_t g = 0; g < games.size(); ++g) {
        std::vector<PlyPosition> plies;
        try {
            plies = replay(games[g]);
        } catch (const ReplayError& e) {
            ++local.games_skipped;
            local.skip_reasons.emplace_back(e.what());
            continue;
        }
        ++local.games_used;
        for (const auto& [ply, position] : plies) {
            ++local.positions;
            const Evaluation e = evals(position);
            auto examples = examples_from_position(position, e.pawns_white, static_cast<std::int64_t>(g), ply, filter);
            out.insert(out.end(), examples.begin(), examples.end());
        }
    }
    if (report) *report = std::move(local);
    return out;
}

// ---- split ------------------------------------------------------------------------

DatasetSplit split(std::span<const LabeledExample> examples, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw UsageError("split fraction must lie strictly between 0 and 1");
    }
    std::set<std::int64_t> ids;
    for (const auto& e : examples) ids.insert(e.game_id);
    if (ids.size() < 2) {
        throw UsageError("splitting needs at least 2 games, dataset has " + std::to_string(ids.size()));
    }
    std::vector<std::int64_t> order(ids.begin(), ids.end());
    SplitMix64 rng(seed);
    shuffle(std::span(order), rng);

    const auto n = static_cast<std::ptrdiff_t>(order.size());
    const auto n_train = std::clamp<std::ptrdiff_t>(std::llround(fraction * static_cast<double>(n)), 1, n - 1);
    const std::unordered_set<std::int64_t> train_ids(order.begin(), order.begin() + n_train);

    DatasetSplit out;
    out.seed = seed;
    out.fraction = fraction;
    for (const auto& e : examples) {
        (train_ids.contains(e.game_id) ? out.train : out.validation).push_back(encode(e));
    }
    return out;
}

// ---- dataset file ---------------------------------------------------------------

void save_dataset(const std::filesystem::path& path, std::span<const LabeledExample> examples) {
    auto out = open_for_write(path);
    out << kDatasetHeader << '\n';
    for (const auto& e : examples) {
        out << e.game_id << ',' << e.ply << ',' << (e.state.color == Color::White ? 'W' : 'B') << ','
            << piece_letter(e.state.piece) << ',' << e.state.square.name() << ',' << format_pawns(e.target_pawns)
            << '\n';
    }
    if (!out) {
        throw DatasetError(0, "write failed for " + path.string());
    }
}

std::vector<LabeledExample> load_dataset(const std::filesystem::path& path) {
    auto in = open_for_read(path);
    check_header(in, kDatasetHeader, path);
    std::vector<LabeledExample> out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_commas(line);
        if (f.size() != 6) {
            throw DatasetError(row, "expected 6 fields, got " + std::to_string(f.size()));
        }
        LabeledExample e;
        if (!parse_number(f[0], e.game_id)) throw DatasetError(row, "bad game_id");
        if (!parse_number(f[1], e.ply) || e.ply < 0) throw DatasetError(row, "bad ply");
        if (f[2] == "W") e.state.color = Color::White;
        else if (f[2] == "B") e.state.color = Color::Black;
        else throw DatasetError(row, "bad color '" + std::string(f[2]) + "'");
        const auto kind = f[3].size() == 1 ? piece_from_letter(f[3][0]) : std::nullopt;
        if (!kind) throw DatasetError(row, "bad piece '" + std::string(f[3]) + "'");
        e.state.piece = *kind;
        const auto sq = Square::parse(f[4]);
        if (!sq) throw DatasetError(row, "bad square '" + std::string(f[4]) + "'");
        e.state.square = *sq;
        if (!parse_number(f[5], e.target_pawns) || !std::isfinite(e.target_pawns) ||
            std::abs(e.target_pawns) > kScoreCap) {
            throw DatasetError(row, "bad target '" + std::string(f[5]) + "'");
        }
        out.push_back(e);
    }
    return out;
}

// ---- evals file -------------------------------------------------------------------

void save_evals(const std::filesystem::path& path, std::span<const EvalRow> rows) {
    auto out = open_for_write(path);
    out << kEvalsHeader << '\n';
    for (const auto& r : rows) {
        out << r.game_id << ',' << r.ply << ',' << r.fen << ',' << format_pawns(r.pawns_white) << ',' << r.depth
            << '\n';
    }
    if (!out) {
        throw DatasetError(0, "write failed for " + path.string());
    }
}

std::vector<EvalRow> load_evals(const std::filesystem::path& path) {
    auto in = open_for_read(path);
    check_header(in, kEvalsHeader, path);
    std::vector<EvalRow> out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_commas(line);
        if (f.size() != 5) {
            throw DatasetError(row, "expected 5 fields, got " + std::to_string(f.size()));
        }
        EvalRow r;
        if (!parse_number(f[0], r.game_id)) throw DatasetError(row, "bad game_id");
        if (!parse_number(f[1], r.ply) || r.ply < 0) throw DatasetError(row, "bad ply");
        r.fen = std::string(f[2]);
        try {
            parse_fen(r.fen);
        } catch (const FenError& e) {
            throw DatasetError(row, e.what());
        }
        if (!parse_number(f[3], r.pawns_white) || !std::isfinite(r.pawns_white) ||
            std::abs(r.pawns_white) > kScoreCap) {
            throw DatasetError(row, "bad pawns_white '" + std::string(f[3]) + "'");
        }
        if (!parse_number(f[4], r.depth) || r.depth < 0) throw DatasetError(row, "bad depth");
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<LabeledExample> examples_from_evals(std::span<const EvalRow> rows, const StateFilter& filter) {
    std::vector<LabeledExample> out;
    for (const auto& r : rows) {
        auto examples = examples_from_position(parse_fen(r.fen), r.pawns_white, r.game_id, r.ply, filter);
        out.insert(out.end(), examples.begin(), examples.end());
    }
    return out;
}

}  // namespace squareval
