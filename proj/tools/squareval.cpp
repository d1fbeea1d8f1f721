// squareval: label PGN games with a UCI engine, build per-square datasets,
// train the value network and render heatmaps.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>
#include <map>

#include "squareval/cli.hpp"

namespace {

using namespace squareval;
using namespace squareval::cli;

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage: return 1;
        case ErrorKind::Input: return 2;
        case ErrorKind::Engine: return 3;
        case ErrorKind::Numeric: return 4;
    }
    return 1;
}

// Flags that mirror config keys; collected raw and applied after the config
// file so that they take precedence.
struct Overrides {
    std::map<std::string, std::string> values;
    std::vector<std::string> engine_options;

    void add(CLI::App* cmd, const std::string& flag, const std::string& key, const std::string& help) {
        cmd->add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Per-square piece valuation from engine-labeled games"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    app.add_option("--config", config_path, "key=value settings file (flags override it)");

    Overrides ov;
    auto engine_flags = [&](CLI::App* cmd) {
        ov.add(cmd, "--engine", "engine", "engine command line (default: $SQUAREVAL_ENGINE)");
        ov.add(cmd, "--depth", "depth", "fixed search depth per position (default 12)");
        ov.add(cmd, "--movetime", "movetime", "fixed search time per position in ms");
        ov.add(cmd, "--sessions", "sessions", "engine processes to run in parallel");
        cmd->add_option("--option", ov.engine_options, "UCI option Name=Value (repeatable)");
    };
    auto train_flags = [&](CLI::App* cmd) {
        ov.add(cmd, "--seed", "seed", "seed for split, initialisation and batch order");
        ov.add(cmd, "--split", "split", "fraction of games used for training (default 0.8)");
        ov.add(cmd, "--epochs", "epochs", "training epochs (default 100)");
        ov.add(cmd, "--lr", "lr", "Adam learning rate (default 1e-3)");
        ov.add(cmd, "--batch", "batch", "mini-batch size (default 64)");
    };

    std::string input;
    std::string out;
    std::string reuse;
    std::string history;
    std::string color = "white";
    std::string piece = "knight";
    std::string square;
    std::string kind = "cp";
    double bin_width = kDefaultBinWidth;
    std::string direction;
    double value = 0.0;

    auto* label = app.add_subcommand("label", "evaluate every position of a PGN file");
    label->add_option("pgn", input, "games to label")->required();
    label->add_option("--out", out, "evaluations file to write")->required();
    label->add_option("--reuse", reuse, "earlier evaluations file; known positions are not re-evaluated");
    engine_flags(label);

    auto* build = app.add_subcommand("build", "turn evaluations into labeled piece states");
    build->add_option("evals", input, "evaluations file")->required();
    build->add_option("--out", out, "dataset file to write")->required();
    ov.add(build, "--filter", "filter", "states to keep, e.g. all, knights, minors,white");

    auto* trainer = app.add_subcommand("train", "fit the value network to a dataset");
    trainer->add_option("dataset", input, "dataset file")->required();
    trainer->add_option("--out", out, "model file to write")->required();
    trainer->add_option("--history", history, "per-epoch loss CSV (default <out>.history.csv)");
    train_flags(trainer);

    auto* heatmap = app.add_subcommand("heatmap", "render an 8x8 map for one color and piece");
    heatmap->add_option("source", input, "model file or dataset file")->required();
    heatmap->add_option("--color", color, "white or black")->capture_default_str();
    heatmap->add_option("--piece", piece, "king, queen, rook, bishop, knight or pawn")->capture_default_str();
    heatmap->add_option("--kind", kind, "cp (pawns) or winprob")->capture_default_str();
    ov.add(heatmap, "--format", "format", "text, csv or svg (default text)");
    heatmap->add_option("--out", out, "file to write")->required();

    auto* histogram = app.add_subcommand("histogram", "distribution of targets for one state");
    histogram->add_option("dataset", input, "dataset file")->required();
    histogram->add_option("--color", color, "white or black")->capture_default_str();
    histogram->add_option("--piece", piece, "piece name or letter")->capture_default_str();
    histogram->add_option("--square", square, "square such as f5")->required();
    histogram->add_option("--bin-width", bin_width, "bin width in pawns")->capture_default_str();
    ov.add(histogram, "--format", "format", "text, csv or svg (default text)");
    histogram->add_option("--out", out, "file to write")->required();

    auto* convert = app.add_subcommand("convert", "convert between pawns and win probability");
    convert->add_option("direction", direction, "cp2wp or wp2cp")->required();
    convert->add_option("value", value, "value to convert")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) apply_config_file(cfg, config_path);
        for (const auto& [key, v] : ov.values) apply_setting(cfg, key, v);
        for (const auto& opt : ov.engine_options) {
            const auto eq = opt.find('=');
            if (eq == std::string::npos) throw UsageError("--option expects Name=Value, got '" + opt + "'");
            cfg.engine_options.emplace_back(opt.substr(0, eq), opt.substr(eq + 1));
        }
        apply_environment(cfg);

        Report report;
        if (*label) {
            LabelOptions options;
            if (!reuse.empty()) options.reuse = reuse;
            report = cmd_label(input, out, cfg, std::cerr, options);
        } else if (*build) {
            report = cmd_build(input, out, cfg.filter, std::cerr);
        } else if (*trainer) {
            std::optional<std::filesystem::path> history_path;
            if (!history.empty()) history_path = history;
            report = cmd_train(input, out, cfg, std::cerr, history_path);
        } else if (*heatmap) {
            report = cmd_heatmap(input, parse_color(color), parse_piece(piece), parse_heatmap_kind(kind), cfg.format,
                                 out, std::cerr);
        } else if (*histogram) {
            const PieceState state{parse_color(color), parse_piece(piece), parse_square(square)};
            report = cmd_histogram(input, state, bin_width, cfg.format, out, std::cerr);
        } else if (*convert) {
            report = cmd_convert(value, parse_conversion(direction));
        }
        std::cout << report.str();
        return 0;
    } catch (const Error& e) {
        std::cerr << "squareval: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "squareval: " << e.what() << '\n';
        return 2;
    }
}
