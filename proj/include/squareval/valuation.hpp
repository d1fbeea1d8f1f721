#pragma once

// Win-probability conversion, per-square heatmaps and histograms, and their
// text/CSV/SVG renderings.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "squareval/dataset.hpp"
#include "squareval/error.hpp"
#include "squareval/model.hpp"

namespace squareval {

// w = 1 / (1 + 10^(-c/4)), c in pawns.
double cp_to_winprob(double pawns) noexcept;

// c = 4 log10(w / (1 - w)). Throws DomainError unless 0 < w < 1.
double winprob_to_cp(double w);

class DomainError : public UsageError {
public:
    using UsageError::UsageError;
};

enum class GridSource { Empirical, Model };
enum class GridScale { Pawns, WinProbability };

std::string_view source_name(GridSource s) noexcept;  // "empirical" / "model"
std::string_view scale_name(GridScale s) noexcept;    // "pawns" / "winprob"

// Values are color-relative and indexed by Square::index(). Empirical cells
// with no examples are absent; model grids are always full.
struct HeatmapGrid {
    Color color = Color::White;
    PieceKind piece = PieceKind::Knight;
    GridSource source = GridSource::Empirical;
    GridScale scale = GridScale::Pawns;
    std::array<std::optional<double>, 64> values{};
    std::array<std::size_t, 64> counts{};

    std::optional<double> at(Square sq) const { return values[static_cast<std::size_t>(sq.index())]; }
    std::size_t present_cells() const noexcept;
    std::size_t total_count() const noexcept;

    bool operator==(const HeatmapGrid&) const = default;
};

// Mean target per square over examples of this color and piece.
HeatmapGrid empirical_heatmap(std::span<const LabeledExample> examples, Color color, PieceKind piece);

HeatmapGrid model_heatmap(const ModelParams& params, Color color, PieceKind piece);

// Present cells mapped through cp_to_winprob; counts and absences kept.
HeatmapGrid winprob_grid(const HeatmapGrid& g);

struct SquareValue {
    Square square;
    double value = 0.0;

    bool operator==(const SquareValue&) const = default;
};

// Present cells by descending value, ties by ascending square index; at most
// k entries. Throws UsageError when k < 1.
std::vector<SquareValue> top_squares(const HeatmapGrid& g, std::size_t k);

// Highest present cell of each file a..h (files without data are left out).
std::vector<SquareValue> best_per_file(const HeatmapGrid& g);

// Unweighted mean of the present cells.
std::optional<double> mean_over_squares(const HeatmapGrid& g);

inline constexpr double kHistogramLimit = 10.0;
inline constexpr double kDefaultBinWidth = 0.25;

struct Histogram {
    PieceState state;
    std::vector<double> bin_edges;  // ascending, from -kHistogramLimit
    std::vector<std::size_t> counts;
    std::size_t n = 0;

    double bin_width() const { return bin_edges[1] - bin_edges[0]; }
};

// Bins of bin_width starting at -10 and covering +10; bin i holds
// floor((t + 10) / bin_width), clamped to the range. Throws UsageError for a
// non-positive width.
Histogram square_histogram(std::span<const LabeledExample> examples, const PieceState& state,
                           double bin_width = kDefaultBinWidth);

// ---- rendering ------------------------------------------------------------------

enum class RenderFormat { Text, Csv, Svg };

// "text", "csv" or "svg"; throws UsageError otherwise.
RenderFormat parse_render_format(std::string_view name);

// Provenance embedded in every rendering.
struct RenderInfo {
    std::optional<std::size_t> examples;
    std::string model_hash;  // empty when not rendered from a model file
    std::vector<std::pair<std::string, std::string>> extra;
};

std::string render(const HeatmapGrid& g, RenderFormat format, const RenderInfo& info = {});
std::string render(const Histogram& h, RenderFormat format, const RenderInfo& info = {});

// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string file_hash(const std::filesystem::path& path);

}  // namespace squareval
