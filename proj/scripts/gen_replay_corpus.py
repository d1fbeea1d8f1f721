#!/usr/bin/env python3
"""Regenerates tests/data/replay_corpus.{pgn,fens} with python-chess.

The FEN file is the independent reference for replay tests: one line per ply,
"<game_id> <ply> <fen>", with the en-passant square written after every double
pawn push (python-chess en_passant="fen" mode).

    pip install chess==1.11.2
    python3 scripts/gen_replay_corpus.py
"""

import pathlib
import random

import chess
import chess.pgn

GAMES = 100
SEED = 20240601
SETUP_FENS = [
    "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1",
    "8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1",
    "r3k2r/Pppp1ppp/1b3nbN/nP6/BBP1P3/q4N2/Pp1P2PP/R2Q1RK1 w kq - 0 1",
    "rnbq1k1r/pp1Pbppp/2p5/8/2B5/8/PPP1NnPP/RNBQK2R w KQ - 1 8",
]


def pick_move(board, rng):
    moves = list(board.legal_moves)
    special = [m for m in moves if board.is_capture(m) or m.promotion or board.is_castling(m)]
    if special and rng.random() < 0.35:
        return rng.choice(special)
    return rng.choice(moves)


def main():
    rng = random.Random(SEED)
    out_dir = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data"
    pgn_lines = []
    fen_lines = []
    for game_id in range(GAMES):
        setup = SETUP_FENS[game_id // 25] if game_id % 25 == 24 else None
        board = chess.Board(setup) if setup else chess.Board()
        game = chess.pgn.Game()
        game.headers["Event"] = "Replay corpus"
        game.headers["Round"] = str(game_id + 1)
        if setup:
            game.setup(board)
        node = game
        fen_lines.append(f"{game_id} 0 {board.fen(en_passant='fen')}")
        plies = rng.randint(20, 160)
        for ply in range(1, plies + 1):
            if board.is_game_over(claim_draw=False):
                break
            move = pick_move(board, rng)
            if rng.random() < 0.05 and len(list(board.legal_moves)) > 1:
                alt = rng.choice([m for m in board.legal_moves if m != move])
                var = node.add_variation(alt)
                var.comment = "alternative"
            node = node.add_main_variation(move)
            if rng.random() < 0.04:
                node.comment = rng.choice(["good", "unclear (see notes)", "threat: mate"])
            if rng.random() < 0.03:
                node.nags.add(rng.choice([1, 2, 3, 4, 5, 6, 14]))
            board.push(move)
            fen_lines.append(f"{game_id} {ply} {board.fen(en_passant='fen')}")
        outcome = board.outcome()
        game.headers["Result"] = outcome.result() if outcome else rng.choice(["*", "1/2-1/2"])
        exporter = chess.pgn.StringExporter(headers=True, variations=True, comments=True)
        pgn_lines.append(game.accept(exporter))
    (out_dir / "replay_corpus.pgn").write_text("\n\n".join(pgn_lines) + "\n")
    (out_dir / "replay_corpus.fens").write_text("\n".join(fen_lines) + "\n")


if __name__ == "__main__":
    main()
