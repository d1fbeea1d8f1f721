#include "squareval/valuation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

namespace squareval {

double cp_to_winprob(double pawns) noexcept { return 1.0 / (1.0 + std::pow(10.0, -pawns / 4.0)); }

double winprob_to_cp(double w) {
    if (!(w > 0.0 && w < 1.0)) {
        throw DomainError(fmt::format("win probability {} is outside (0, 1)", w));
    }
    return 4.0 * std::log10(w / (1.0 - w));
}

std::string_view source_name(GridSource s) noexcept {
    return s == GridSource::Empirical ? "empirical" : "model";
}

std::string_view scale_name(GridScale s) noexcept { return s == GridScale::Pawns ? "pawns" : "winprob"; }

std::size_t HeatmapGrid::present_cells() const noexcept {
    return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](const auto& v) { return v.has_value(); }));
}

std::size_t HeatmapGrid::total_count() const noexcept {
    std::size_t n = 0;
    for (std::size_t c : counts) n += c;
    return n;
}

HeatmapGrid empirical_heatmap(std::span<const LabeledExample> examples, Color color, PieceKind piece) {
    HeatmapGrid g;
    g.color = color;
    g.piece = piece;
    g.source = GridSource::Empirical;
    std::array<double, 64> sums{};
    for (const auto& e : examples) {
        if (e.state.color != color || e.state.piece != piece) continue;
        const auto i = static_cast<std::size_t>(e.state.square.index());
        sums[i] += e.target_pawns;
        ++g.counts[i];
    }
    for (std::size_t i = 0; i < 64; ++i) {
        if (g.counts[i] > 0) g.values[i] = sums[i] / static_cast<double>(g.counts[i]);
    }
    return g;
}

HeatmapGrid model_heatmap(const ModelParams& params, Color color, PieceKind piece) {
    HeatmapGrid g;
    g.color = color;
    g.piece = piece;
    g.source = GridSource::Model;
    for (int i = 0; i < 64; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        g.values[idx] = forward(params, encode(PieceState{color, piece, Square::from_index(i)}));
        g.counts[idx] = 1;
    }
    return g;
}

HeatmapGrid winprob_grid(const HeatmapGrid& g) {
    HeatmapGrid out = g;
    out.scale = GridScale::WinProbability;
    for (auto& v : out.values) {
        if (v) v = cp_to_winprob(*v);
    }
    return out;
}

namespace {

std::vector<SquareValue> ranked(const HeatmapGrid& g) {
    std::vector<SquareValue> out;
    for (int i = 0; i < 64; ++i) {
        if (const auto& v = g.values[static_cast<std::size_t>(i)]) out.push_back({Square::from_index(i), *v});
    }
    std::stable_sort(out.begin(), out.end(), [](const SquareValue& a, const SquareValue& b) { return a.value > b.value; });
    return out;
}

}  // namespace

std::vector<SquareValue> top_squares(const HeatmapGrid& g, std::size_t k) {
    if (k < 1) throw UsageError("top_squares needs k >= 1");
    auto out = ranked(g);
    if (out.size() > k) out.resize(k);
    return out;
}

std::vector<SquareValue> best_per_file(const HeatmapGrid& g) {
    std::vector<SquareValue> out;
    const auto all = ranked(g);
    for (int file = 0; file < 8; ++file) {
        const auto it = std::find_if(all.begin(), all.end(), [&](const SquareValue& s) { return s.square.file() == file; });
        if (it != all.end()) out.push_back(*it);
    }
    return out;
}

std::optional<double> mean_over_squares(const HeatmapGrid& g) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& v : g.values) {
        if (v) {
            sum += *v;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

Histogram square_histogram(std::span<const LabeledExample> examples, const PieceState& state, double bin_width) {
    if (!(bin_width > 0.0) || !std::isfinite(bin_width)) throw UsageError("histogram bin width must be positive");
    const double span = 2.0 * kHistogramLimit;
    auto bins = static_cast<std::size_t>(std::llround(span / bin_width));
    if (std::abs(static_cast<double>(bins) * bin_width - span) > 1e-9 * span) {
        bins = static_cast<std::size_t>(std::ceil(span / bin_width));
    }
    bins = std::max<std::size_t>(bins, 1);

    Histogram h;
    h.state = state;
    h.counts.assign(bins, 0);
    h.bin_edges.reserve(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) h.bin_edges.push_back(-kHistogramLimit + static_cast<double>(i) * bin_width);
    for (const auto& e : examples) {
        if (!(e.state == state)) continue;
        const double pos = std::floor((e.target_pawns + kHistogramLimit) / bin_width);
        const auto i = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
        ++h.counts[i];
        ++h.n;
    }
    return h;
}

// ---- rendering ------------------------------------------------------------------

RenderFormat parse_render_format(std::string_view name) {
    if (name == "text") return RenderFormat::Text;
    if (name == "csv") return RenderFormat::Csv;
    if (name == "svg") return RenderFormat::Svg;
    throw UsageError(fmt::format("unknown format '{}' (expected text, csv or svg)", name));
}

namespace {

constexpr std::string_view kFiles = "abcdefgh";

std::string metadata_line(std::vector<std::pair<std::string, std::string>> fields, const RenderInfo& info) {
    if (info.examples) fields.emplace_back("examples", std::to_string(*info.examples));
    if (!info.model_hash.empty()) fields.emplace_back("model_hash", info.model_hash);
    fields.insert(fields.end(), info.extra.begin(), info.extra.end());
    std::string out = "squareval";
    for (const auto& [k, v] : fields) out += fmt::format(" {}={}", k, v);
    return out;
}

std::string grid_metadata(const HeatmapGrid& g, const RenderInfo& info) {
    return metadata_line({{"kind", "heatmap"},
                          {"source", std::string(source_name(g.source))},
                          {"color", std::string(color_name(g.color))},
                          {"piece", std::string(piece_name(g.piece))},
                          {"scale", std::string(scale_name(g.scale))}},
                         info);
}

std::string histogram_metadata(const Histogram& h, const RenderInfo& info) {
    return metadata_line({{"kind", "histogram"},
                          {"color", std::string(color_name(h.state.color))},
                          {"piece", std::string(piece_name(h.state.piece))},
                          {"square", h.state.square.name()},
                          {"bin_width", fmt::format("{}", h.bin_width())},
                          {"n", std::to_string(h.n)}},
                         info);
}

// Guard against "-0.000".
std::string fixed(double v, int digits) {
    std::string s = fmt::format("{:.{}f}", v, digits);
    if (s.starts_with('-') && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

std::string grid_text(const HeatmapGrid& g, const RenderInfo& info) {
    std::string out = "# " + grid_metadata(g, info) + "\n ";
    for (char f : kFiles) out += fmt::format("{:>8}", f);
    out += '\n';
    for (int rank = 7; rank >= 0; --rank) {
        out += std::to_string(rank + 1);
        for (int file = 0; file < 8; ++file) {
            const auto& v = g.at(Square(file, rank));
            out += fmt::format("{:>8}", v ? fixed(*v, 3) : ".");
        }
        out += '\n';
    }
    return out;
}

std::string grid_csv(const HeatmapGrid& g, const RenderInfo& info) {
    std::string out = "# " + grid_metadata(g, info) + "\nrank";
    for (char f : kFiles) out += fmt::format(",{}", f);
    out += '\n';
    for (int rank = 7; rank >= 0; --rank) {
        out += std::to_string(rank + 1);
        for (int file = 0; file < 8; ++file) {
            const auto& v = g.at(Square(file, rank));
            out += ',';
            if (v) out += fixed(*v, 3);
        }
        out += '\n';
    }
    return out;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    // "--" is not allowed inside an XML comment.
    for (std::size_t p; (p = out.find("--")) != std::string::npos;) out.replace(p, 2, "- -");
    return out;
}

// Blue below the centre, red above, white at the centre; t in [-1, 1].
std::string diverging_color(double t) {
    t = std::clamp(t, -1.0, 1.0);
    constexpr std::array<int, 3> low{59, 76, 192};
    constexpr std::array<int, 3> high{180, 4, 38};
    const auto& end = t < 0 ? low : high;
    const double a = std::abs(t);
    std::array<int, 3> rgb{};
    for (std::size_t i = 0; i < 3; ++i) {
        rgb[i] = static_cast<int>(std::lround(255.0 + (end[i] - 255.0) * a));
    }
    return fmt::format("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2]);
}

std::string grid_svg(const HeatmapGrid& g, const RenderInfo& info) {
    constexpr int cell = 48;
    constexpr int margin = 24;
    constexpr int board = 8 * cell;
    constexpr int legend_y = margin + board + 28;
    constexpr int width = margin + board + margin;
    constexpr int height = legend_y + 48;

    const double center = g.scale == GridScale::Pawns ? 0.0 : 0.5;
    double extent = 0.0;
    for (const auto& v : g.values) {
        if (v) extent = std::max(extent, std::abs(*v - center));
    }
    if (extent == 0.0) extent = g.scale == GridScale::Pawns ? 1.0 : 0.5;
    const int digits = g.scale == GridScale::Pawns ? 2 : 3;

    std::string out;
    out += fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
                       width, height, width, height);
    out += "<!-- " + xml_escape(grid_metadata(g, info)) + " -->\n";
    out += "<defs>\n"
           "<pattern id=\"absent\" width=\"8\" height=\"8\" patternUnits=\"userSpaceOnUse\" "
           "patternTransform=\"rotate(45)\"><rect width=\"8\" height=\"8\" fill=\"#f4f4f4\"/>"
           "<line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"8\" stroke=\"#9a9a9a\" stroke-width=\"2\"/></pattern>\n";
    out += "<linearGradient id=\"scale\" x1=\"0\" x2=\"1\" y1=\"0\" y2=\"0\">";
    for (int i = 0; i <= 4; ++i) {
        out += fmt::format("<stop offset=\"{}\" stop-color=\"{}\"/>", fixed(i / 4.0, 2), diverging_color(i / 2.0 - 1.0));
    }
    out += "</linearGradient>\n</defs>\n";
    out += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", width, height);
    out += "<g font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">\n";

    for (int rank = 7; rank >= 0; --rank) {
        const int y = margin + (7 - rank) * cell;
        for (int file = 0; file < 8; ++file) {
            const int x = margin + file * cell;
            const auto& v = g.at(Square(file, rank));
            const std::string fill = v ? diverging_color((*v - center) / extent) : "url(#absent)";
            out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#ffffff\"/>", x, y,
                               cell, cell, fill);
            if (v) {
                out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>", x + cell / 2, y + cell / 2 + 4, fixed(*v, digits));
            }
            out += '\n';
        }
        out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", margin / 2, y + cell / 2 + 4, rank + 1);
    }
    for (int file = 0; file < 8; ++file) {
        out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", margin + file * cell + cell / 2, margin + board + 16,
                           kFiles[static_cast<std::size_t>(file)]);
    }
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"12\" fill=\"url(#scale)\" stroke=\"#666666\"/>\n",
                       margin, legend_y, board);
    out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", margin, legend_y + 28, fixed(center - extent, digits));
    out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", margin + board / 2, legend_y + 28, fixed(center, digits));
    out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", margin + board, legend_y + 28, fixed(center + extent, digits));
    out += fmt::format("<text x=\"{}\" y=\"{}\">{} {} ({})</text>\n", margin + board / 2, margin - 8,
                       color_name(g.color), piece_name(g.piece), g.scale == GridScale::Pawns ? "c(s), pawns" : "w(s)");
    out += "</g>\n</svg>\n";
    return out;
}

std::string histogram_text(const Histogram& h, const RenderInfo& info) {
    std::string out = "# " + histogram_metadata(h, info) + "\n";
    const std::size_t peak = h.counts.empty() ? 0 : *std::max_element(h.counts.begin(), h.counts.end());
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        if (h.counts[i] == 0) continue;
        const std::size_t bar = peak ? (h.counts[i] * 50 + peak - 1) / peak : 0;
        out += fmt::format("[{:>7}, {:>7}) {:>7} {}\n", fixed(h.bin_edges[i], 3), fixed(h.bin_edges[i + 1], 3), h.counts[i],
                           std::string(bar, '#'));
    }
    out += fmt::format("n={}\n", h.n);
    return out;
}

std::string histogram_csv(const Histogram& h, const RenderInfo& info) {
    std::string out = "# " + histogram_metadata(h, info) + "\nlow,high,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        out += fmt::format("{},{},{}\n", fixed(h.bin_edges[i], 4), fixed(h.bin_edges[i + 1], 4), h.counts[i]);
    }
    return out;
}

std::string histogram_svg(const Histogram& h, const RenderInfo& info) {
    constexpr int plot_w = 640;
    constexpr int plot_h = 240;
    constexpr int left = 48;
    constexpr int top = 28;
    constexpr int width = left + plot_w + 16;
    constexpr int height = top + plot_h + 40;
    const std::size_t peak = h.counts.empty() ? 0 : *std::max_element(h.counts.begin(), h.counts.end());
    const double lo = h.bin_edges.front();
    const double hi = h.bin_edges.back();
    auto x_of = [&](double v) { return left + (v - lo) / (hi - lo) * plot_w; };

    std::string out;
    out += fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
                       width, height, width, height);
    out += "<!-- " + xml_escape(histogram_metadata(h, info)) + " -->\n";
    out += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", width, height);
    out += "<g font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        if (h.counts[i] == 0) continue;
        const double bh = static_cast<double>(h.counts[i]) / static_cast<double>(peak) * plot_h;
        const double x0 = x_of(h.bin_edges[i]);
        const double x1 = x_of(h.bin_edges[i + 1]);
        out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#3b4cc0\"/>\n", fixed(x0, 2),
                           fixed(top + plot_h - bh, 2), fixed(x1 - x0, 2), fixed(bh, 2));
    }
    out += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\"/>\n", left, top + plot_h,
                       left + plot_w, top + plot_h);
    for (int tick = -10; tick <= 10; tick += 5) {
        out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", fixed(x_of(tick), 2), top + plot_h + 16, tick);
    }
    out += fmt::format("<text x=\"{}\" y=\"{}\">{} {} on {}, c(s) in pawns, n={}</text>\n", left + plot_w / 2, top - 10,
                       color_name(h.state.color), piece_name(h.state.piece), h.state.square.name(), h.n);
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", left - 6, top + 4, peak);
    out += "</g>\n</svg>\n";
    return out;
}

}  // namespace

std::string render(const HeatmapGrid& g, RenderFormat format, const RenderInfo& info) {
    switch (format) {
        case RenderFormat::Text: return grid_text(g, info);
        case RenderFormat::Csv: return grid_csv(g, info);
        case RenderFormat::Svg: return grid_svg(g, info);
    }
    return {};
}

std::string render(const Histogram& h, RenderFormat format, const RenderInfo& info) {
    switch (format) {
        case RenderFormat::Text: return histogram_text(h, info);
        case RenderFormat::Csv: return histogram_csv(h, info);
        case RenderFormat::Svg: return histogram_svg(h, info);
    }
    return {};
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

std::string file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a_hex(bytes);
}

}  // namespace squareval
