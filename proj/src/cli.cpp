#include "squareval/cli.hpp"

#include <fmt/format.h>

#include <cctype>
#include <charconv>
#include <cmath>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <ostream>
#include <unordered_map>

namespace squareval::cli {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T number(std::string_view key, std::string_view value) {
    T out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty()) {
        throw UsageError(fmt::format("bad value for {}: '{}'", key, value));
    }
    return out;
}

bool flag(std::string_view key, std::string_view value) {
    const std::string v = lower(value);
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw UsageError(fmt::format("bad value for {}: '{}'", key, value));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text) || !out.flush()) throw InputError("cannot write " + path.string());
}

void ensure_distinct(const std::filesystem::path& input, const std::filesystem::path& output) {
    std::error_code ec;
    if (std::filesystem::exists(output, ec) && std::filesystem::equivalent(input, output, ec)) {
        throw UsageError(fmt::format("output {} would overwrite input {}", output.string(), input.string()));
    }
}

std::string fmt_real(double v) { return fmt::format("{:.6g}", v); }

}  // namespace

// ---- configuration -------------------------------------------------------------

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
    key = trim(key);
    value = trim(value);
    if (key == "engine") cfg.engine_command = std::string(value);
    else if (key.starts_with("option.") && key.size() > 7) cfg.engine_options.emplace_back(key.substr(7), value);
    else if (key == "depth") cfg.limits = EngineLimits::fixed_depth(number<int>(key, value));
    else if (key == "movetime") cfg.limits = EngineLimits::fixed_movetime(number<int>(key, value));
    else if (key == "sessions") {
        cfg.sessions = number<int>(key, value);
        if (cfg.sessions < 1) throw UsageError("sessions must be >= 1");
    } else if (key == "filter") cfg.filter = StateFilter::parse(value);
    else if (key == "split") {
        cfg.split_fraction = number<double>(key, value);
        if (!(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0)) throw UsageError("split must lie in (0, 1)");
    } else if (key == "seed") cfg.train.seed = number<std::uint64_t>(key, value);
    else if (key == "epochs") cfg.train.epochs = number<int>(key, value);
    else if (key == "lr") cfg.train.learning_rate = number<double>(key, value);
    else if (key == "batch") cfg.train.batch_size = number<std::size_t>(key, value);
    else if (key == "beta1") cfg.train.beta1 = number<double>(key, value);
    else if (key == "beta2") cfg.train.beta2 = number<double>(key, value);
    else if (key == "epsilon") cfg.train.epsilon = number<double>(key, value);
    else if (key == "shuffle") cfg.train.shuffle = flag(key, value);
    else if (key == "format") cfg.format = parse_render_format(value);
    else throw UsageError(fmt::format("unknown setting '{}'", key));
    cfg.train.validate();
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) {
            throw UsageError(fmt::format("{}:{}: expected key=value", path.string(), line_no));
        }
        try {
            apply_setting(cfg, t.substr(0, eq), t.substr(eq + 1));
        } catch (const UsageError& e) {
            throw UsageError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
        }
    }
}

void apply_environment(RunConfig& cfg) {
    if (!cfg.engine_command.empty()) return;
    if (const char* env = std::getenv("SQUAREVAL_ENGINE"); env && *env) cfg.engine_command = env;
}

// ---- report -----------------------------------------------------------------------

void Report::add(std::string key, double value) { add(std::move(key), fmt_real(value)); }

std::optional<std::string> Report::get(std::string_view key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return v;
    }
    return std::nullopt;
}

std::string Report::str() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + '=' + v + '\n';
    return out;
}

// ---- tokens -----------------------------------------------------------------------

Color parse_color(std::string_view token) {
    const std::string t = lower(token);
    if (t == "white" || t == "w") return Color::White;
    if (t == "black" || t == "b") return Color::Black;
    throw UsageError(fmt::format("unknown color '{}' (expected white or black)", token));
}

PieceKind parse_piece(std::string_view token) {
    const std::string t = lower(token);
    for (PieceKind k : kPieceKinds) {
        const std::string name(piece_name(k));
        if (t == name || t == name + "s" ||
            (t.size() == 1 && t[0] == static_cast<char>(std::tolower(piece_letter(k))))) {
            return k;
        }
    }
    throw UsageError(fmt::format("unknown piece '{}'", token));
}

Square parse_square(std::string_view token) {
    if (const auto sq = Square::parse(lower(token))) return *sq;
    throw UsageError(fmt::format("unknown square '{}'", token));
}

HeatmapKind parse_heatmap_kind(std::string_view token) {
    if (token == "cp") return HeatmapKind::Pawns;
    if (token == "winprob") return HeatmapKind::WinProbability;
    throw UsageError(fmt::format("unknown heatmap kind '{}' (expected cp or winprob)", token));
}

Conversion parse_conversion(std::string_view token) {
    if (token == "cp2wp") return Conversion::CpToWinprob;
    if (token == "wp2cp") return Conversion::WinprobToCp;
    throw UsageError(fmt::format("unknown conversion '{}' (expected cp2wp or wp2cp)", token));
}

// ---- label ------------------------------------------------------------------------

Report cmd_label(const std::filesystem::path& pgn_path, const std::filesystem::path& out_path, const RunConfig& cfg,
                 std::ostream& log, const LabelOptions& options) {
    if (cfg.engine_command.empty()) {
        throw UsageError("no engine configured (use --engine, the config file, or SQUAREVAL_ENGINE)");
    }
    ensure_distinct(pgn_path, out_path);
    const auto started = std::chrono::steady_clock::now();

    std::ifstream in(pgn_path, std::ios::binary);
    if (!in) throw InputError("cannot open " + pgn_path.string());

    struct Item {
        std::int64_t game_id;
        int ply;
        std::size_t position;
    };
    std::vector<Item> items;
    std::vector<Position> unique;
    std::vector<std::string> unique_fens;
    std::unordered_map<std::string, std::size_t> by_fen;
    std::size_t parsed = 0;
    std::size_t replay_failures = 0;

    PgnReader reader(in);
    while (auto game = reader.next()) {
        const auto game_id = static_cast<std::int64_t>(reader.last_index());
        std::vector<PlyPosition> plies;
        try {
            plies = replay(*game);
        } catch (const ReplayError& e) {
            ++replay_failures;
            log << fmt::format("warning: game {} skipped: {}\n", game_id, e.what());
            continue;
        }
        ++parsed;
        for (const auto& [ply, position] : plies) {
            std::string fen = emit_fen(position);
            auto [it, inserted] = by_fen.try_emplace(fen, unique.size());
            if (inserted) {
                unique.push_back(position);
                unique_fens.push_back(std::move(fen));
            }
            items.push_back({game_id, ply, it->second});
        }
    }
    for (const auto& e : reader.errors()) {
        log << fmt::format("warning: game {} skipped: {}\n", e.game_index, e.reason);
    }

    struct Label {
        double pawns_white = 0.0;
        int depth = 0;
    };
    std::vector<std::optional<Label>> labels(unique.size());
    std::size_t cached = 0;
    if (options.reuse) {
        std::unordered_map<std::string, Label> known;
        for (const auto& row : load_evals(*options.reuse)) known[row.fen] = Label{row.pawns_white, row.depth};
        for (std::size_t i = 0; i < unique.size(); ++i) {
            if (const auto it = known.find(unique_fens[i]); it != known.end()) {
                labels[i] = it->second;
                ++cached;
            }
        }
    }

    std::vector<std::size_t> pending;
    std::vector<Position> to_evaluate;
    for (std::size_t i = 0; i < unique.size(); ++i) {
        if (!labels[i]) {
            pending.push_back(i);
            to_evaluate.push_back(unique[i]);
        }
    }

    std::string engine_name;
    if (!to_evaluate.empty()) {
        SessionOptions session_options;
        session_options.uci_options = cfg.engine_options;
        std::vector<std::unique_ptr<EngineSession>> sessions;
        const int wanted = std::min<int>(cfg.sessions, static_cast<int>(to_evaluate.size()));
        for (int i = 0; i < wanted; ++i) {
            try {
                sessions.push_back(EngineSession::start(cfg.engine_command, session_options));
            } catch (const EngineError& e) {
                if (sessions.empty() && i + 1 == wanted) throw;
                log << fmt::format("warning: engine session {} failed to start: {}\n", i, e.what());
            }
        }
        if (sessions.empty()) throw EngineError(EngineError::Reason::Exhausted, "no engine session could be started");
        engine_name = sessions.front()->engine_name();
        std::vector<EngineSession*> pool;
        for (auto& s : sessions) pool.push_back(s.get());

        std::mutex log_mutex;
        const std::size_t step = std::max<std::size_t>(1, to_evaluate.size() / 20);
        const auto results = evaluate_batch(pool, to_evaluate, cfg.limits, [&](std::size_t done, std::size_t total) {
            if (done % step != 0 && done != total) return;
            std::lock_guard lock(log_mutex);
            log << fmt::format("labeled {}/{} positions\n", done, total) << std::flush;
        });
        for (std::size_t k = 0; k < pending.size(); ++k) {
            labels[pending[k]] = Label{results[k].second.pawns_white, results[k].second.depth_reached};
        }
    }

    std::vector<EvalRow> rows;
    rows.reserve(items.size());
    for (const auto& item : items) {
        const Label& l = *labels[item.position];
        rows.push_back(EvalRow{item.game_id, item.ply, unique_fens[item.position], l.pawns_white, l.depth});
    }
    save_evals(out_path, rows);

    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    Report r;
    r.add("games_parsed", parsed);
    r.add("games_skipped", reader.errors().size() + replay_failures);
    r.add("positions", items.size());
    r.add("unique_positions", unique.size());
    r.add("cached", cached);
    r.add("evaluated", to_evaluate.size());
    r.add("engine", engine_name.empty() ? std::string("-") : engine_name);
    r.add("limits", cfg.limits.go_command().substr(3));
    r.add("out", out_path.string());
    r.add("elapsed_s", fmt::format("{:.3f}", elapsed));
    return r;
}

// ---- build ------------------------------------------------------------------------

Report cmd_build(const std::filesystem::path& evals_path, const std::filesystem::path& out_path,
                 const StateFilter& filter, std::ostream& log) {
    ensure_distinct(evals_path, out_path);
    const auto rows = load_evals(evals_path);
    if (rows.empty()) log << fmt::format("warning: {} holds no evaluations\n", evals_path.string());
    const auto examples = examples_from_evals(rows, filter);
    save_dataset(out_path, examples);

    std::array<std::size_t, 12> per_state{};
    for (const auto& e : examples) {
        ++per_state[static_cast<std::size_t>(index_of(e.state.color) * 6 + index_of(e.state.piece))];
    }
    Report r;
    r.add("rows", rows.size());
    r.add("filter", filter.describe());
    r.add("examples", examples.size());
    for (Color c : kColors) {
        for (PieceKind k : kPieceKinds) {
            r.add(fmt::format("examples.{}.{}", color_name(c), piece_name(k)),
                  per_state[static_cast<std::size_t>(index_of(c) * 6 + index_of(k))]);
        }
    }
    r.add("out", out_path.string());
    return r;
}

// ---- train ------------------------------------------------------------------------

Report cmd_train(const std::filesystem::path& dataset_path, const std::filesystem::path& model_out,
                 const RunConfig& cfg, std::ostream& log, const std::optional<std::filesystem::path>& history_out) {
    ensure_distinct(dataset_path, model_out);
    const auto examples = load_dataset(dataset_path);
    if (examples.empty()) throw UsageError(fmt::format("dataset {} is empty", dataset_path.string()));
    const auto data = split(examples, cfg.split_fraction, cfg.train.seed);

    const auto result = train(data, cfg.train, [&](const EpochStats& s) {
        log << fmt::format("epoch {}/{} train_mse={} val_mse={}\n", s.epoch, cfg.train.epochs, fmt_real(s.train_mse),
                           s.val_mse ? fmt_real(*s.val_mse) : "-")
            << std::flush;
    });

    ModelMetadata meta = metadata_for(cfg.train);
    meta.emplace_back("split", fmt::format("{:.17g}", cfg.split_fraction));
    meta.emplace_back("dataset_hash", file_hash(dataset_path));
    meta.emplace_back("train_examples", std::to_string(data.train.size()));
    meta.emplace_back("validation_examples", std::to_string(data.validation.size()));
    save_params(model_out, result.params, meta);

    const auto history_path = history_out ? *history_out : std::filesystem::path(model_out.string() + ".history.csv");
    std::string history = "epoch,train_mse,val_mse\n";
    for (const auto& s : result.history) {
        history += fmt::format("{},{:.17g},{}\n", s.epoch, s.train_mse, s.val_mse ? fmt::format("{:.17g}", *s.val_mse) : "");
    }
    write_text(history_path, history);

    Report r;
    r.add("examples", examples.size());
    r.add("train_examples", data.train.size());
    r.add("validation_examples", data.validation.size());
    r.add("epochs", static_cast<std::size_t>(cfg.train.epochs));
    r.add("seed", std::to_string(cfg.train.seed));
    if (!result.history.empty()) {
        r.add("final_train_mse", result.history.back().train_mse);
        r.add("final_val_mse", *result.history.back().val_mse);
    }
    r.add("model", model_out.string());
    r.add("model_hash", file_hash(model_out));
    r.add("history", history_path.string());
    return r;
}

// ---- heatmap / histogram ------------------------------------------------------------

namespace {

bool is_model_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::string first;
    std::getline(in, first);
    return first.starts_with("squareval-model");
}

std::string square_list(const std::vector<SquareValue>& v) {
    std::string out;
    for (const auto& s : v) {
        if (!out.empty()) out += ',';
        out += fmt::format("{}:{:.4f}", s.square.name(), s.value);
    }
    return out.empty() ? "-" : out;
}

}  // namespace

Report cmd_heatmap(const std::filesystem::path& source, Color color, PieceKind piece, HeatmapKind kind,
                   RenderFormat format, const std::filesystem::path& out, std::ostream& log) {
    ensure_distinct(source, out);
    HeatmapGrid grid;
    RenderInfo info;
    if (is_model_file(source)) {
        const auto model = load_model(source);
        grid = model_heatmap(model.params, color, piece);
        info.model_hash = file_hash(source);
        for (const auto& [k, v] : model.metadata) {
            if (k == "train_examples") info.examples = std::stoull(v);
        }
    } else {
        const auto examples = load_dataset(source);
        grid = empirical_heatmap(examples, color, piece);
        info.examples = grid.total_count();
        if (grid.present_cells() == 0) {
            log << fmt::format("warning: no {} {} examples in {}\n", color_name(color), piece_name(piece), source.string());
        }
    }
    if (kind == HeatmapKind::WinProbability) grid = winprob_grid(grid);
    write_text(out, render(grid, format, info));

    Report r;
    r.add("source", std::string(source_name(grid.source)));
    r.add("color", std::string(color_name(color)));
    r.add("piece", std::string(piece_name(piece)));
    r.add("scale", std::string(scale_name(grid.scale)));
    r.add("present_cells", grid.present_cells());
    r.add("top", square_list(top_squares(grid, 3)));
    r.add("best_per_file", square_list(best_per_file(grid)));
    const auto mean = mean_over_squares(grid);
    r.add("mean_over_squares", mean ? fmt_real(*mean) : std::string("-"));
    r.add("out", out.string());
    return r;
}

Report cmd_histogram(const std::filesystem::path& dataset_path, const PieceState& state, double bin_width,
                     RenderFormat format, const std::filesystem::path& out, std::ostream& log) {
    ensure_distinct(dataset_path, out);
    const auto examples = load_dataset(dataset_path);
    const auto h = square_histogram(examples, state, bin_width);
    if (h.n == 0) {
        log << fmt::format("warning: no {} {} examples on {}\n", color_name(state.color), piece_name(state.piece),
                           state.square.name());
    }
    RenderInfo info;
    info.examples = h.n;
    write_text(out, render(h, format, info));

    double sum = 0.0;
    for (const auto& e : examples) {
        if (e.state == state) sum += e.target_pawns;
    }
    Report r;
    r.add("state", fmt::format("{} {} {}", color_name(state.color), piece_name(state.piece), state.square.name()));
    r.add("n", h.n);
    r.add("bins", h.counts.size());
    r.add("bin_width", h.bin_width());
    r.add("mean", h.n ? fmt_real(sum / static_cast<double>(h.n)) : std::string("-"));
    r.add("out", out.string());
    return r;
}

// ---- convert ------------------------------------------------------------------------

Report cmd_convert(double value, Conversion direction) {
    if (!std::isfinite(value)) throw UsageError("value must be finite");
    Report r;
    r.add("input", fmt_real(value));
    if (direction == Conversion::CpToWinprob) {
        r.add("direction", std::string("cp2wp"));
        r.add("value", fmt::format("{:.6f}", cp_to_winprob(value)));
    } else {
        r.add("direction", std::string("wp2cp"));
        r.add("value", fmt::format("{:.6f}", winprob_to_cp(value)));
    }
    return r;
}

}  // namespace squareval::cli
