#pragma once

// Pipeline commands behind the squareval executable. Each returns a report of
// key=value entries in a fixed order; progress and warnings go to `log`.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "squareval/dataset.hpp"
#include "squareval/engine.hpp"
#include "squareval/model.hpp"
#include "squareval/valuation.hpp"

namespace squareval::cli {

struct RunConfig {
    std::string engine_command;
    std::vector<std::pair<std::string, std::string>> engine_options;
    EngineLimits limits;
    int sessions = 1;
    StateFilter filter = StateFilter::all();
    double split_fraction = 0.8;
    TrainConfig train;
    RenderFormat format = RenderFormat::Text;
};

// Applies one setting. Keys: engine, option.<Name>, depth, movetime, sessions,
// filter, split, seed, epochs, lr, batch, beta1, beta2, epsilon, shuffle,
// format. Throws UsageError for unknown keys or bad values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

// key=value lines; '#' comments and blank lines ignored.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

// Fills engine_command from SQUAREVAL_ENGINE when nothing else set it.
void apply_environment(RunConfig& cfg);

class Report {
public:
    void add(std::string key, std::string value) { entries_.emplace_back(std::move(key), std::move(value)); }
    void add(std::string key, std::size_t value) { add(std::move(key), std::to_string(value)); }
    void add(std::string key, double value);

    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }
    std::optional<std::string> get(std::string_view key) const;
    std::string str() const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

Color parse_color(std::string_view token);
PieceKind parse_piece(std::string_view token);
Square parse_square(std::string_view token);

struct LabelOptions {
    std::optional<std::filesystem::path> reuse;  // earlier evals file whose FENs need no engine call
};

Report cmd_label(const std::filesystem::path& pgn_path, const std::filesystem::path& out_path, const RunConfig& cfg,
                 std::ostream& log, const LabelOptions& options = {});

Report cmd_build(const std::filesystem::path& evals_path, const std::filesystem::path& out_path,
                 const StateFilter& filter, std::ostream& log);

// The history CSV defaults to "<model_out>.history.csv".
Report cmd_train(const std::filesystem::path& dataset_path, const std::filesystem::path& model_out,
                 const RunConfig& cfg, std::ostream& log,
                 const std::optional<std::filesystem::path>& history_out = std::nullopt);

enum class HeatmapKind { Pawns, WinProbability };

HeatmapKind parse_heatmap_kind(std::string_view token);  // "cp" or "winprob"

// `source` is a model file or a dataset file, told apart by its header.
Report cmd_heatmap(const std::filesystem::path& source, Color color, PieceKind piece, HeatmapKind kind,
                   RenderFormat format, const std::filesystem::path& out, std::ostream& log);

Report cmd_histogram(const std::filesystem::path& dataset_path, const PieceState& state, double bin_width,
                     RenderFormat format, const std::filesystem::path& out, std::ostream& log);

enum class Conversion { CpToWinprob, WinprobToCp };

Conversion parse_conversion(std::string_view token);  // "cp2wp" or "wp2cp"

Report cmd_convert(double value, Conversion direction);

}  // namespace squareval::cli
