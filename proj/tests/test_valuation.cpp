#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "squareval/valuation.hpp"
#include "synthetic.hpp"
#include "test_support.hpp"

namespace squareval {
namespace {

Square sq(std::string_view name) { return *Square::parse(name); }

LabeledExample ex(Color c, PieceKind k, std::string_view square, double t) {
    return {PieceState{c, k, sq(square)}, t, 0, 0};
}

TEST(Conversion, ReportedExampleAndClosedForm) {
    // Printed value 0.526 for a 0.2 pawn advantage; the formula gives 0.52875.
    EXPECT_NEAR(cp_to_winprob(0.2), 0.526, 0.003);
    EXPECT_NEAR(cp_to_winprob(0.2), 0.5287505638922686, 1e-12);
    EXPECT_EQ(cp_to_winprob(0.0), 0.5);
    EXPECT_NEAR(cp_to_winprob(10.0), 0.9968476908167399, 1e-12);
    EXPECT_EQ(winprob_to_cp(0.5), 0.0);
    EXPECT_NEAR(winprob_to_cp(0.9), 3.8169700377572995, 1e-12);
}

TEST(Conversion, InverseMonotoneSymmetric) {
    double prev = 0.0;
    for (int i = -1000; i <= 1000; ++i) {
        const double c = i / 100.0;
        const double w = cp_to_winprob(c);
        EXPECT_NEAR(winprob_to_cp(w), c, 1e-9);
        EXPECT_GT(w, prev);
        EXPECT_GT(w, 0.0);
        EXPECT_LT(w, 1.0);
        EXPECT_NEAR(cp_to_winprob(-c), 1.0 - w, 1e-15);
        prev = w;
    }
}

TEST(Conversion, DomainErrors) {
    for (double w : {0.0, 1.0, -0.1, 1.5, std::nan("")}) EXPECT_THROW(winprob_to_cp(w), DomainError);
}

TEST(Empirical, MeanCountsAndAbsence) {
    const std::vector<LabeledExample> v{ex(Color::White, PieceKind::Knight, "f5", 0.5),
                                        ex(Color::White, PieceKind::Knight, "f5", 0.7),
                                        ex(Color::Black, PieceKind::Knight, "f5", -3.0),
                                        ex(Color::White, PieceKind::Bishop, "f5", 9.0)};
    const auto g = empirical_heatmap(v, Color::White, PieceKind::Knight);
    EXPECT_DOUBLE_EQ(*g.at(sq("f5")), 0.6);
    EXPECT_EQ(g.counts[static_cast<std::size_t>(sq("f5").index())], 2u);
    EXPECT_EQ(g.present_cells(), 1u);
    EXPECT_EQ(g.total_count(), 2u);
    EXPECT_EQ(g.source, GridSource::Empirical);

    const auto none = empirical_heatmap(v, Color::White, PieceKind::Queen);
    EXPECT_EQ(none.present_cells(), 0u);
}

TEST(Empirical, WeightedMeanReproducesGlobalMean) {
    const auto v = testing::oracle_examples(3000, 0.1, 12);
    const auto g = empirical_heatmap(v, Color::Black, PieceKind::Rook);
    double weighted = 0.0, direct = 0.0;
    std::size_t n = 0;
    for (int i = 0; i < 64; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (g.values[idx]) weighted += *g.values[idx] * static_cast<double>(g.counts[idx]);
    }
    for (const auto& e : v) {
        if (e.state.color == Color::Black && e.state.piece == PieceKind::Rook) {
            direct += e.target_pawns;
            ++n;
        }
    }
    ASSERT_GT(n, 0u);
    EXPECT_EQ(g.total_count(), n);
    EXPECT_NEAR(weighted / static_cast<double>(g.total_count()), direct / static_cast<double>(n), 1e-12);
}

TEST(ModelGrid, MatchesForward) {
    ModelParams zero;
    zero.b3.values[0] = 0.25;
    const auto flat = model_heatmap(zero, Color::Black, PieceKind::Pawn);
    for (const auto& v : flat.values) EXPECT_EQ(*v, 0.25);
    for (std::size_t c : flat.counts) EXPECT_EQ(c, 1u);

    const auto p = init_params(4);
    const auto g = model_heatmap(p, Color::White, PieceKind::Bishop);
    EXPECT_EQ(g.source, GridSource::Model);
    for (int i = 0; i < 64; ++i) {
        EXPECT_EQ(*g.values[static_cast<std::size_t>(i)],
                  forward(p, encode(PieceState{Color::White, PieceKind::Bishop, Square::from_index(i)})));
    }
}

TEST(WinprobGrid, CellwiseConversionPreservesOrder) {
    const std::vector<LabeledExample> v{ex(Color::White, PieceKind::Knight, "a1", 0.0),
                                        ex(Color::White, PieceKind::Knight, "f5", 0.2),
                                        ex(Color::White, PieceKind::Knight, "c3", -1.4)};
    const auto cp = empirical_heatmap(v, Color::White, PieceKind::Knight);
    const auto w = winprob_grid(cp);
    EXPECT_EQ(w.scale, GridScale::WinProbability);
    EXPECT_EQ(*w.at(sq("a1")), 0.5);
    EXPECT_NEAR(*w.at(sq("f5")), 0.526, 0.003);
    EXPECT_FALSE(w.at(sq("h8")).has_value());
    EXPECT_EQ(w.counts, cp.counts);

    const auto m = model_heatmap(init_params(9), Color::Black, PieceKind::Queen);
    const auto mw = winprob_grid(m);
    std::vector<Square> a, b;
    for (const auto& s : top_squares(m, 64)) a.push_back(s.square);
    for (const auto& s : top_squares(mw, 64)) b.push_back(s.square);
    EXPECT_EQ(a, b);
}

TEST(Ranking, TopSquaresAndPerFile) {
    HeatmapGrid g;
    g.values[static_cast<std::size_t>(sq("f5").index())] = 0.9;
    g.values[static_cast<std::size_t>(sq("c3").index())] = 0.4;
    g.values[static_cast<std::size_t>(sq("e2").index())] = 0.4;
    g.values[static_cast<std::size_t>(sq("f2").index())] = -0.2;
    const auto top = top_squares(g, 3);
    ASSERT_EQ(top.size(), 3u);
    EXPECT_EQ(top[0], (SquareValue{sq("f5"), 0.9}));
    EXPECT_EQ(top[1].square, sq("e2"));  // tie with c3, lower square index first
    EXPECT_EQ(top[2].square, sq("c3"));
    EXPECT_EQ(top_squares(g, 10).size(), 4u);
    EXPECT_THROW(top_squares(g, 0), UsageError);

    const auto files = best_per_file(g);
    ASSERT_EQ(files.size(), 3u);
    EXPECT_EQ(files[2], (SquareValue{sq("f5"), 0.9}));

    const auto full = model_heatmap(init_params(2), Color::White, PieceKind::Knight);
    EXPECT_EQ(best_per_file(full).size(), 8u);
}

TEST(Ranking, MeanOverSquares) {
    HeatmapGrid g;
    EXPECT_FALSE(mean_over_squares(g).has_value());
    g.values[0] = 1.0;
    g.values[5] = 2.0;
    EXPECT_DOUBLE_EQ(*mean_over_squares(g), 1.5);
}

TEST(HistogramTest, Counting) {
    const PieceState f5{Color::White, PieceKind::Knight, sq("f5")};
    const std::vector<LabeledExample> v{ex(Color::White, PieceKind::Knight, "f5", 0.1),
                                        ex(Color::White, PieceKind::Knight, "f5", 0.1),
                                        ex(Color::White, PieceKind::Knight, "f5", 0.3),
                                        ex(Color::White, PieceKind::Knight, "e4", 0.3),
                                        ex(Color::White, PieceKind::Knight, "f5", 10.0),
                                        ex(Color::White, PieceKind::Knight, "f5", -10.0)};
    const auto h = square_histogram(std::span(v).first(4), f5, 0.2);
    EXPECT_EQ(h.counts.size(), 100u);
    EXPECT_EQ(h.bin_edges.size(), 101u);
    EXPECT_EQ(h.n, 3u);
    std::vector<std::size_t> nonzero;
    for (std::size_t c : h.counts)
        if (c) nonzero.push_back(c);
    EXPECT_EQ(nonzero, (std::vector<std::size_t>{2, 1}));

    const auto ends = square_histogram(v, f5);
    EXPECT_EQ(ends.counts.size(), 80u);
    EXPECT_EQ(ends.counts.front(), 1u);
    EXPECT_EQ(ends.counts.back(), 1u);
    std::size_t total = 0;
    for (std::size_t c : ends.counts) total += c;
    EXPECT_EQ(total, ends.n);

    const auto empty = square_histogram(v, PieceState{Color::Black, PieceKind::King, sq("a1")});
    EXPECT_EQ(empty.n, 0u);
    EXPECT_THROW(square_histogram(v, f5, 0.0), UsageError);
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.starts_with('#')) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma == std::string::npos ? comma : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        rows.push_back(cells);
    }
    return rows;
}

TEST(Render, CsvRoundTrip) {
    const auto g = model_heatmap(init_params(6), Color::White, PieceKind::Knight);
    const auto rows = parse_csv(render(g, RenderFormat::Csv));
    ASSERT_EQ(rows.size(), 9u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"rank", "a", "b", "c", "d", "e", "f", "g", "h"}));
    for (int r = 0; r < 8; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r) + 1];
        EXPECT_EQ(row[0], std::to_string(8 - r));
        for (int f = 0; f < 8; ++f) {
            EXPECT_NEAR(std::stod(row[static_cast<std::size_t>(f) + 1]), *g.at(Square(f, 7 - r)), 5e-4 + 1e-12);
        }
    }
}

TEST(Render, AbsentCellsAndMetadata) {
    HeatmapGrid g;
    g.color = Color::Black;
    g.piece = PieceKind::Rook;
    RenderInfo info;
    info.examples = 0;
    info.model_hash = "00ff";
    const auto csv = render(g, RenderFormat::Csv, info);
    EXPECT_TRUE(csv.starts_with(
        "# squareval kind=heatmap source=empirical color=black piece=rook scale=pawns examples=0 model_hash=00ff\n"));
    for (std::size_t i = 1; i < parse_csv(csv).size(); ++i) {
        for (std::size_t c = 1; c < 9; ++c) EXPECT_EQ(parse_csv(csv)[i][c], "");
    }
    const auto svg = render(g, RenderFormat::Svg, info);
    EXPECT_TRUE(svg.starts_with("<svg "));
    EXPECT_TRUE(svg.ends_with("</svg>\n"));
    std::size_t hatched = 0;
    for (std::size_t p = 0; (p = svg.find("fill=\"url(#absent)\"", p)) != std::string::npos; ++p) ++hatched;
    EXPECT_EQ(hatched, 64u);
    EXPECT_NE(svg.find("<!-- squareval kind=heatmap"), std::string::npos);
}

TEST(Render, TextLayoutRankEightOnTop) {
    HeatmapGrid g;
    g.values[static_cast<std::size_t>(sq("a8").index())] = -0.25;
    g.values[static_cast<std::size_t>(sq("h1").index())] = 1.0;
    const auto text = render(g, RenderFormat::Text);
    std::istringstream in(text);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    ASSERT_EQ(lines.size(), 10u);
    EXPECT_EQ(lines[1], "        a       b       c       d       e       f       g       h");
    EXPECT_EQ(lines[2], "8  -0.250       .       .       .       .       .       .       .");
    EXPECT_EQ(lines[9], "1       .       .       .       .       .       .       .   1.000");
}

TEST(Render, DeterministicBytesAndPaletteCentre) {
    const auto v = testing::oracle_examples(500, 0.1, 3);
    const auto g = empirical_heatmap(v, Color::White, PieceKind::Pawn);
    for (auto f : {RenderFormat::Text, RenderFormat::Csv, RenderFormat::Svg}) {
        EXPECT_EQ(render(g, f), render(g, f));
        EXPECT_EQ(render(winprob_grid(g), f), render(winprob_grid(g), f));
    }
    const auto h = square_histogram(v, PieceState{Color::White, PieceKind::Pawn, sq("e4")});
    for (auto f : {RenderFormat::Text, RenderFormat::Csv, RenderFormat::Svg}) EXPECT_EQ(render(h, f), render(h, f));

    ModelParams zero;
    const auto svg = render(winprob_grid(model_heatmap(zero, Color::White, PieceKind::Knight)), RenderFormat::Svg);
    std::size_t white_cells = 0;
    for (std::size_t p = 0; (p = svg.find("fill=\"#ffffff\" stroke", p)) != std::string::npos; ++p) ++white_cells;
    EXPECT_EQ(white_cells, 64u);
    EXPECT_THROW(parse_render_format("png"), UsageError);
}

TEST(Render, HistogramCsv) {
    const std::vector<LabeledExample> v{ex(Color::White, PieceKind::Knight, "f5", 0.1)};
    const auto rows = parse_csv(render(square_histogram(v, v[0].state, 5.0), RenderFormat::Csv));
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"low", "high", "count"}));
    EXPECT_EQ(rows[3], (std::vector<std::string>{"0.0000", "5.0000", "1"}));
}

TEST(Hash, Fnv1aReferenceVectors) {
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
    EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
    testing::TempDir dir;
    testing::write_file(dir / "f", "foobar");
    EXPECT_EQ(file_hash(dir / "f"), "85944171f73967e8");
}

}  // namespace
}  // namespace squareval
