// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any gating
// criterion fails.
//
// The qualitative knight-corner check needs real games and a real engine:
//   SQUAREVAL_ACCEPTANCE_PGN    PGN file with at least 200 games
//   SQUAREVAL_ENGINE            UCI engine command
//   SQUAREVAL_ACCEPTANCE_DEPTH  search depth (default 8, minimum 8)
// Without them that line reports SKIP; it never gates the exit status.

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "squareval/board.hpp"
#include "squareval/cli.hpp"
#include "squareval/dataset.hpp"
#include "squareval/engine.hpp"
#include "squareval/model.hpp"
#include "squareval/pgn.hpp"
#include "squareval/rng.hpp"
#include "squareval/valuation.hpp"
#include "synthetic.hpp"
#include "test_support.hpp"

namespace {

using namespace squareval;
using Clock = std::chrono::steady_clock;

struct Outcome {
    enum class Status { Pass, Fail, Skip } status;
    std::string detail;
};

Outcome pass(std::string d) { return {Outcome::Status::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Outcome::Status::Fail, std::move(d)}; }

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// ---- 1 ---------------------------------------------------------------------------

Outcome conversion_fidelity() {
    const auto start = Clock::now();
    const double w = cp_to_winprob(0.2);
    double worst = 0.0;
    for (int i = 0; i <= 2000; ++i) {
        const double c = -10.0 + i * 0.01;
        worst = std::max(worst, std::abs(winprob_to_cp(cp_to_winprob(c)) - c));
    }
    const double t = seconds_since(start);
    const std::string d =
        fmt::format("w(0.2)={:.6f} in [0.523, 0.530]; max round-trip error {:.2e} over 2001 points; {:.3f}s", w, worst, t);
    return (w >= 0.523 && w <= 0.530 && worst < 1e-9 && t < 1.0) ? pass(d) : fail(d);
}

// ---- 2 ---------------------------------------------------------------------------

Outcome gradient_correctness() {
    const auto start = Clock::now();
    SplitMix64 rng(2024);
    std::size_t checked = 0;
    double worst_abs = 0.0;
    double worst_rel = 0.0;  // over entries with magnitude above 1e-6
    std::string first_bad;
    for (int draw = 0; draw < 20; ++draw) {
        ModelParams p;
        for (Tensor* t : p.tensors())
            for (double& v : t->values) v = rng.uniform(-0.5, 0.5);
        std::vector<EncodedExample> batch;
        for (int i = 0; i < 8; ++i) {
            EncodedExample e;
            if (i % 4 == 3) {
                for (double& v : e.x) v = rng.uniform(-1.0, 1.0);
            } else {
                e.x = encode(PieceState{static_cast<Color>(rng.below(2)), static_cast<PieceKind>(rng.below(6)),
                                        Square::from_index(static_cast<int>(rng.below(64)))});
            }
            e.y = rng.uniform(-3.0, 3.0);
            batch.push_back(e);
        }
        const auto analytic = loss_and_gradients(p, batch).gradients;
        auto probe = p;
        auto tensors = probe.tensors();
        const auto grads = analytic.tensors();
        for (std::size_t k = 0; k < tensors.size(); ++k) {
            for (std::size_t i = 0; i < tensors[k]->size(); ++i) {
                double& v = tensors[k]->values[i];
                const double saved = v;
                v = saved + 1e-5;
                const double up = mean_squared_error(probe, batch);
                v = saved - 1e-5;
                const double down = mean_squared_error(probe, batch);
                v = saved;
                const double numeric = (up - down) / 2e-5;
                const double a = grads[k]->values[i];
                const double diff = std::abs(numeric - a);
                const double scale = std::max(std::abs(numeric), std::abs(a));
                ++checked;
                worst_abs = std::max(worst_abs, diff);
                if (scale > 1e-6) worst_rel = std::max(worst_rel, diff / scale);
                if (diff > 1e-8 && diff > 1e-4 * scale && first_bad.empty()) {
                    first_bad = fmt::format("draw {} {}[{}] analytic {} numeric {}", draw, ModelParams::kNames[k], i, a,
                                            numeric);
                }
            }
        }
    }
    const double t = seconds_since(start);
    std::string d = fmt::format("{} gradient entries over 20 draws; worst |diff| {:.2e}, worst relative {:.2e}; {:.1f}s",
                                checked, worst_abs, worst_rel, t);
    if (!first_bad.empty()) d += "; first mismatch: " + first_bad;
    return (first_bad.empty() && t < 30.0) ? pass(d) : fail(d);
}

// ---- 3 ---------------------------------------------------------------------------

Outcome replay_equivalence() {
    const auto start = Clock::now();
    const auto games = parse_pgn(testing::read_file(SQUAREVAL_TEST_DATA "/replay_corpus.pgn"));
    std::ifstream ref(SQUAREVAL_TEST_DATA "/replay_corpus.fens");
    std::vector<std::vector<std::string>> expected(games.size());
    std::string line;
    while (std::getline(ref, line)) {
        std::istringstream in(line);
        std::size_t game = 0;
        int ply = 0;
        in >> game >> ply;
        std::string fen;
        std::getline(in >> std::ws, fen);
        if (game < expected.size()) expected[game].push_back(fen);
    }
    std::size_t plies = 0;
    std::size_t mismatches = 0;
    for (std::size_t g = 0; g < games.size(); ++g) {
        const auto replayed = replay(games[g]);
        if (replayed.size() != expected[g].size()) ++mismatches;
        for (std::size_t i = 0; i < std::min(replayed.size(), expected[g].size()); ++i) {
            ++plies;
            if (emit_fen(replayed[i].position) != expected[g][i]) ++mismatches;
        }
    }
    const auto p3 = perft(Position::start(), 3);
    const auto p4 = perft(Position::start(), 4);
    const double t = seconds_since(start);
    const std::string d = fmt::format("{} games, {} positions, {} mismatches vs reference; perft(3)={} perft(4)={}; {:.1f}s",
                                      games.size(), plies, mismatches, p3, p4, t);
    return (games.size() == 100 && mismatches == 0 && p3 == 8902 && p4 == 197281 && t < 60.0) ? pass(d) : fail(d);
}

// ---- 4 ---------------------------------------------------------------------------

Outcome uci_conformance() {
    testing::TempDir dir;
    const auto log_path = dir / "engine.log";
    const auto engine = testing::mock_engine(dir, "mock",
                                             "on_go = info depth 12 score cp 20 | bestmove 0000\nlog = " +
                                                 log_path.string() + "\n");
    const Position white_to_move = parse_fen("4k3/8/8/3N4/8/8/8/4K3 w - - 0 1");
    Position black_to_move = white_to_move;
    black_to_move.side_to_move = Color::Black;

    SessionOptions opts;
    opts.uci_options = {{"Hash", "16"}, {"Threads", "1"}};
    std::vector<std::string> sent;
    double w = 0.0, b = 0.0;
    {
        auto session = EngineSession::start(engine, opts);
        w = session->evaluate(white_to_move, EngineLimits::fixed_depth(12)).pawns_white;
        b = session->evaluate(black_to_move, EngineLimits::fixed_depth(12)).pawns_white;
        sent = session->sent();
    }
    const std::vector<std::string> expected{
        "uci",
        "setoption name Hash value 16",
        "setoption name Threads value 1",
        "isready",
        "position fen " + emit_fen(white_to_move),
        "go depth 12",
        "position fen " + emit_fen(black_to_move),
        "go depth 12",
    };
    std::vector<std::string> received;
    {
        std::istringstream in(testing::read_file(log_path));
        for (std::string l; std::getline(in, l);) received.push_back(l);
    }
    if (!received.empty() && received.back() == "quit") received.pop_back();
    const bool sequence_ok = sent == expected && received == expected;
    const bool negation_ok = w == 0.2 && b == -0.2;
    const std::string d = fmt::format("client and engine transcripts {} the expected {} commands; "
                                      "same reply with white/black to move gives {:+.2f}/{:+.2f}",
                                      sequence_ok ? "match" : "DIFFER from", expected.size(), w, b);
    return (sequence_ok && negation_ok) ? pass(d) : fail(d);
}

// ---- 5 ---------------------------------------------------------------------------

Outcome synthetic_recovery() {
    const auto start = Clock::now();
    const auto examples = testing::oracle_examples(10'000, 0.1, 5);
    const TrainConfig cfg;  // defaults throughout
    const auto data = split(examples, 0.8, cfg.seed);
    const auto result = train(data, cfg);
    const double val = *result.history.back().val_mse;

    const auto grid = model_heatmap(result.params, Color::White, PieceKind::Knight);
    std::vector<double> predicted, truth;
    for (int i = 0; i < 64; ++i) {
        predicted.push_back(*grid.values[static_cast<std::size_t>(i)]);
        truth.push_back(testing::oracle(PieceState{Color::White, PieceKind::Knight, Square::from_index(i)}));
    }
    const double rho = testing::spearman(predicted, truth);
    const double t = seconds_since(start);
    const std::string d = fmt::format("{} epochs (default config), val MSE {:.5f} < 0.02, Spearman(White Knight) {:.4f} >= 0.9; {:.1f}s",
                                      cfg.epochs, val, rho, t);
    return (cfg.epochs <= 200 && val < 0.02 && rho >= 0.9 && t < 300.0) ? pass(d) : fail(d);
}

// ---- 6 ---------------------------------------------------------------------------

Outcome knight_corners() {
    const char* pgn = std::getenv("SQUAREVAL_ACCEPTANCE_PGN");
    const char* engine = std::getenv("SQUAREVAL_ENGINE");
    if (!pgn || !*pgn || !engine || !*engine) {
        return {Outcome::Status::Skip,
                "needs SQUAREVAL_ACCEPTANCE_PGN (>= 200 master games) and SQUAREVAL_ENGINE; not run"};
    }
    int depth = 8;
    if (const char* d = std::getenv("SQUAREVAL_ACCEPTANCE_DEPTH")) depth = std::max(8, std::atoi(d));

    testing::TempDir dir;
    cli::RunConfig cfg;
    cfg.engine_command = engine;
    cfg.limits = EngineLimits::fixed_depth(depth);
    cfg.sessions = 2;
    std::ostringstream log;
    const auto report = cli::cmd_label(pgn, dir / "evals.csv", cfg, log);
    const std::size_t games = std::stoul(*report.get("games_parsed"));
    const auto examples = examples_from_evals(load_evals(dir / "evals.csv"), StateFilter::parse("knights,white"));

    auto mean_w = [&](std::initializer_list<std::string_view> squares) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& e : examples) {
            for (auto s : squares) {
                if (e.state.square == *Square::parse(s)) {
                    sum += cp_to_winprob(e.target_pawns);
                    ++n;
                }
            }
        }
        return std::pair{n ? sum / static_cast<double>(n) : std::nan(""), n};
    };
    const auto [corner, nc] = mean_w({"a1", "h1"});
    const auto [centre, nm] = mean_w({"d4", "e4", "d5", "e5", "f5"});
    const std::string d = fmt::format("{} games at depth {}: mean w corners {:.4f} (n={}), centre {:.4f} (n={}), margin {:+.4f}",
                                      games, depth, corner, nc, centre, nm, centre - corner);
    if (games < 200) return {Outcome::Status::Skip, d + "; fewer than 200 games, reported only"};
    return (corner < centre) ? pass(d) : fail(d);
}

// ---- 7 ---------------------------------------------------------------------------

Outcome determinism() {
    testing::TempDir dir;
    save_dataset(dir / "d.csv", testing::oracle_examples(2000, 0.1, 8));
    cli::RunConfig cfg;
    cfg.train.epochs = 5;
    std::ostringstream log;
    cli::cmd_train(dir / "d.csv", dir / "a.model", cfg, log);
    cli::cmd_train(dir / "d.csv", dir / "b.model", cfg, log);
    const bool model_same = testing::read_file(dir / "a.model") == testing::read_file(dir / "b.model");

    std::size_t renders = 0;
    bool render_same = true;
    for (const char* kind : {"cp", "winprob"}) {
        for (const char* fmt_name : {"text", "csv", "svg"}) {
            for (const char* src : {"a.model", "d.csv"}) {
                std::string bytes[2];
                for (int rep = 0; rep < 2; ++rep) {
                    const auto out = dir / fmt::format("h{}.out", rep);
                    cli::cmd_heatmap(dir / src, Color::White, PieceKind::Knight, cli::parse_heatmap_kind(kind),
                                     parse_render_format(fmt_name), out, log);
                    bytes[rep] = testing::read_file(out);
                }
                render_same = render_same && bytes[0] == bytes[1];
                ++renders;
            }
        }
    }
    for (const char* fmt_name : {"text", "csv", "svg"}) {
        std::string bytes[2];
        for (int rep = 0; rep < 2; ++rep) {
            const auto out = dir / fmt::format("g{}.out", rep);
            cli::cmd_histogram(dir / "d.csv", PieceState{Color::White, PieceKind::Knight, *Square::parse("f5")},
                               kDefaultBinWidth, parse_render_format(fmt_name), out, log);
            bytes[rep] = testing::read_file(out);
        }
        render_same = render_same && bytes[0] == bytes[1];
        ++renders;
    }
    const std::string d = fmt::format("model file hash {} on both runs: {}; {} renderings byte-identical: {}",
                                      file_hash(dir / "a.model"), model_same ? "yes" : "no", renders,
                                      render_same ? "yes" : "no");
    return (model_same && render_same) ? pass(d) : fail(d);
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 conversion fidelity", conversion_fidelity},
        {"2 gradient correctness", gradient_correctness},
        {"3 replay oracle equivalence", replay_equivalence},
        {"4 UCI protocol conformance", uci_conformance},
        {"5 synthetic recovery", synthetic_recovery},
        {"6 knight corners vs centre (soft, not gating)", knight_corners},
        {"7 determinism", determinism},
    };
    bool ok = true;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = fail(std::string("exception: ") + e.what());
        }
        const bool gating = name[0] != '6';
        const char* label = o.status == Outcome::Status::Pass   ? "PASS"
                            : o.status == Outcome::Status::Skip ? "SKIP"
                                                                : "FAIL";
        if (o.status == Outcome::Status::Fail && gating) ok = false;
        std::cout << fmt::format("[{}] criterion {}: {}\n", label, name, o.detail) << std::flush;
    }
    return ok ? 0 : 1;
}
