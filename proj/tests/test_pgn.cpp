#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "squareval/pgn.hpp"

namespace squareval {
namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

TEST(PgnParse, MinimalGame) {
    const auto games = parse_pgn("[Event \"?\"]\n\n1. e4 e5 1/2-1/2");
    ASSERT_EQ(games.size(), 1u);
    EXPECT_EQ(games[0].san_moves, (std::vector<std::string>{"e4", "e5"}));
    EXPECT_EQ(games[0].result, GameResult::Draw);
    EXPECT_EQ(games[0].tag("Event"), "?");
}

TEST(PgnParse, SkipsCommentsAndVariations) {
    const auto games = parse_pgn("1. e4 {best} (1. d4 d5) 1... c5 *");
    ASSERT_EQ(games.size(), 1u);
    EXPECT_EQ(games[0].san_moves, (std::vector<std::string>{"e4", "c5"}));
    EXPECT_EQ(games[0].result, GameResult::Unknown);
}

TEST(PgnParse, EmptyInput) {
    EXPECT_TRUE(parse_pgn("").empty());
    EXPECT_TRUE(parse_pgn("\n\n   \n").empty());
}

TEST(PgnParse, NestedVariationsNagsAndLineComments) {
    const auto games = parse_pgn(
        "[White \"A\"]\n[Black \"B\"]\n\n"
        "1.e4 $1 e5 (1...c5 2.Nf3 (2.c3 {x (y} d5) 2...d6) 2.Nf3 ; trailing remark (\n"
        "Nc6 {multi\nline} 3.Bb5!? a6?! 4.Ba4 +- 1-0\n");
    ASSERT_EQ(games.size(), 1u);
    EXPECT_EQ(games[0].san_moves,
              (std::vector<std::string>{"e4", "e5", "Nf3", "Nc6", "Bb5!?", "a6?!", "Ba4"}));
    EXPECT_EQ(games[0].result, GameResult::WhiteWin);
}

TEST(PgnParse, TagValuesWithEscapes) {
    const auto games = parse_pgn("[Event \"The \\\"Big\\\" One\"]\n[Site \"a\\\\b\"]\n\n1. d4 0-1\n");
    ASSERT_EQ(games.size(), 1u);
    EXPECT_EQ(games[0].tag("Event"), "The \"Big\" One");
    EXPECT_EQ(games[0].tag("Site"), "a\\b");
    EXPECT_EQ(games[0].result, GameResult::BlackWin);
}

TEST(PgnParse, MissingTerminatorFallsBackToResultTag) {
    const auto games = parse_pgn("[Result \"1-0\"]\n\n1. e4 e5\n\n[Result \"*\"]\n\n1. d4 *\n");
    ASSERT_EQ(games.size(), 2u);
    EXPECT_EQ(games[0].result, GameResult::WhiteWin);
    EXPECT_EQ(games[0].san_moves.size(), 2u);
    EXPECT_EQ(games[1].san_moves, (std::vector<std::string>{"d4"}));
}

TEST(PgnParse, HighBitBytesInCommentsAreTolerated) {
    const auto games = parse_pgn("[Event \"Z\xC3\xBCrich\"]\n\n1. e4 {\xFF\xFE caf\xE9} e5 *\n");
    ASSERT_EQ(games.size(), 1u);
    EXPECT_EQ(games[0].san_moves.size(), 2u);
}

TEST(PgnParse, CorruptGameIsSkippedOthersSurvive) {
    const std::string text =
        "[Event \"one\"]\n\n1. e4 e5 1-0\n\n"
        "[Event \"two\"]\n\n1. e4 ) e5 @@ 0-1\n\n"
        "[Event \"three\"]\n\n1. d4 d5 *\n";
    std::vector<PgnGameError> errors;
    const auto games = parse_pgn(text, &errors);
    ASSERT_EQ(games.size(), 2u);
    EXPECT_EQ(games[0].tag("Event"), "one");
    EXPECT_EQ(games[1].tag("Event"), "three");
    ASSERT_EQ(errors.size(), 1u);
    EXPECT_EQ(errors[0].game_index, 1u);
}

TEST(PgnParse, MalformedTagAndUnterminatedCommentAreSkipped) {
    const std::string text =
        "[Event \"one]\n[Site \"x\"]\n\n1. e4 e5 1-0\n\n"
        "[Event \"two\"]\n\n1. e4 {never closed e5\n\n"
        "[Event \"three\"]\n\n1. d4 d5 *\n";
    std::vector<PgnGameError> errors;
    const auto games = parse_pgn(text, &errors);
    ASSERT_EQ(games.size(), 1u);
    EXPECT_EQ(games[0].tag("Event"), "three");
    ASSERT_EQ(errors.size(), 2u);
    EXPECT_EQ(errors[0].game_index, 0u);
    EXPECT_EQ(errors[1].game_index, 1u);
}

TEST(PgnParse, ReaderIsLazyAndTracksIndices) {
    std::istringstream in("[Event \"a\"]\n\n1. e4 *\n\n[Event \"b\"]\n\n1. e4 Zq *\n\n[Event \"c\"]\n1. c4 *\n");
    PgnReader reader(in);
    auto g = reader.next();
    ASSERT_TRUE(g);
    EXPECT_EQ(reader.last_index(), 0u);
    g = reader.next();
    ASSERT_TRUE(g);
    EXPECT_EQ(g->san_moves, (std::vector<std::string>{"c4"}));
    EXPECT_EQ(reader.last_index(), 2u);
    EXPECT_FALSE(reader.next());
    EXPECT_EQ(reader.games_seen(), 3u);
    EXPECT_EQ(reader.errors().size(), 1u);
}

TEST(PgnParse, NulByteIsStreamError) {
    const std::string text("1. e4 \0 e5 *\n", 13);
    EXPECT_THROW(parse_pgn(text), PgnStreamError);
}

TEST(PgnParse, TokenFilterProperty) {
    const auto games = parse_pgn(read_file(SQUAREVAL_TEST_DATA "/replay_corpus.pgn"));
    ASSERT_EQ(games.size(), 100u);
    for (const auto& g : games) {
        for (const auto& m : g.san_moves) {
            EXPECT_EQ(m.find_first_of("{}()$"), std::string::npos) << m;
            EXPECT_FALSE(m.front() >= '0' && m.front() <= '9' && m.find('.') != std::string::npos) << m;
        }
    }
}

TEST(Replay, CountsAndFirstPly) {
    const auto games = parse_pgn("1. e4 e5 *");
    const auto plies = replay(games[0]);
    ASSERT_EQ(plies.size(), 3u);
    EXPECT_EQ(plies[0].ply, 0);
    EXPECT_EQ(plies[2].ply, 2);
    EXPECT_EQ(emit_fen(plies[1].position), "rnbqkbnr/pppppppp/8/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq e3 0 1");
}

TEST(Replay, IllegalMoveReportsPly) {
    const auto games = parse_pgn("[White \"X\"]\n\n1. Ke2 e5 *");
    ASSERT_EQ(games.size(), 1u);
    try {
        replay(games[0]);
        FAIL() << "expected ReplayError";
    } catch (const ReplayError& e) {
        EXPECT_EQ(e.ply(), 1);
        EXPECT_NE(std::string(e.what()).find("White=X"), std::string::npos);
    }
}

TEST(Replay, HonorsSetupFen) {
    const auto games = parse_pgn(
        "[SetUp \"1\"]\n[FEN \"4k3/8/8/8/8/8/4P3/4K3 w - - 0 1\"]\n\n1. e4 Kd7 *");
    const auto plies = replay(games[0]);
    ASSERT_EQ(plies.size(), 3u);
    EXPECT_EQ(emit_fen(plies.back().position), "8/3k4/8/8/4P3/8/8/4K3 w - - 1 2");
}

// Every ply of the 100-game corpus against FENs produced by python-chess.
TEST(Replay, MatchesReferenceFens) {
    const auto games = parse_pgn(read_file(SQUAREVAL_TEST_DATA "/replay_corpus.pgn"));
    std::map<std::pair<int, int>, std::string> reference;
    std::istringstream fens(read_file(SQUAREVAL_TEST_DATA "/replay_corpus.fens"));
    int game_id = 0, ply = 0;
    std::string fen;
    while (fens >> game_id >> ply && std::getline(fens >> std::ws, fen)) {
        reference[{game_id, ply}] = fen;
    }
    ASSERT_EQ(games.size(), 100u);
    std::size_t compared = 0;
    for (std::size_t g = 0; g < games.size(); ++g) {
        const auto plies = replay(games[g]);
        for (const auto& [k, pos] : plies) {
            const auto it = reference.find({static_cast<int>(g), k});
            ASSERT_NE(it, reference.end()) << "game " << g << " ply " << k;
            ASSERT_EQ(emit_fen(pos), it->second) << "game " << g << " ply " << k;
            ++compared;
        }
    }
    EXPECT_EQ(compared, reference.size());
}

}  // namespace
}  // namespace squareval
