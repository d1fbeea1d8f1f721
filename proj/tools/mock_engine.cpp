// Scriptable stand-in for a UCI engine, used by tests and offline demos.
//
//   squareval-mock-engine --script FILE [--log FILE]
//
// Script lines are "key = value"; '#' starts a comment. Replies are separated
// by '|'; an empty reply list means "stay silent".
//
//   on_start = <lines printed before reading any input>
//   on_uci = id name Mock | uciok                       (default)
//   on_isready = readyok                                (default)
//   on_go = info depth 12 score cp 20 | bestmove 0000   (default)
//   go_fen <FEN> = <replies for a go after that position>
//   exit_immediately = 1
//   crash_after_searches = N     exit silently on search N+1
//   go_delay_ms = N
//   log = FILE                   append every received command

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_replies(const std::string& value) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto bar = value.find('|', start);
        const std::string piece = trim(value.substr(start, bar == std::string::npos ? bar : bar - start));
        if (!piece.empty()) out.push_back(piece);
        if (bar == std::string::npos) break;
        start = bar + 1;
    }
    return out;
}

struct Script {
    std::vector<std::string> on_start;
    std::vector<std::string> on_uci{"id name squareval-mock", "uciok"};
    std::vector<std::string> on_isready{"readyok"};
    std::vector<std::string> on_go{"info depth 12 score cp 20", "bestmove 0000"};
    std::map<std::string, std::vector<std::string>> go_by_fen;
    bool exit_immediately = false;
    std::optional<int> crash_after_searches;
    int go_delay_ms = 0;
    std::string log_path;
};

Script load_script(const std::string& path) {
    Script s;
    std::ifstream in(path);
    if (!in) {
        std::cerr << "mock engine: cannot read script " << path << "\n";
        std::exit(2);
    }
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key == "on_start") s.on_start = split_replies(value);
        else if (key == "on_uci") s.on_uci = split_replies(value);
        else if (key == "on_isready") s.on_isready = split_replies(value);
        else if (key == "on_go") s.on_go = split_replies(value);
        else if (key.rfind("go_fen ", 0) == 0) s.go_by_fen[trim(key.substr(7))] = split_replies(value);
        else if (key == "exit_immediately") s.exit_immediately = value == "1" || value == "true";
        else if (key == "crash_after_searches") s.crash_after_searches = std::stoi(value);
        else if (key == "go_delay_ms") s.go_delay_ms = std::stoi(value);
        else if (key == "log") s.log_path = value;
    }
    return s;
}

void reply(const std::vector<std::string>& lines) {
    for (const auto& l : lines) std::cout << l << '\n';
    std::cout.flush();
}

}  // namespace

int main(int argc, char** argv) {
    std::string script_path;
    std::string log_override;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        if (flag == "--script") script_path = argv[i + 1];
        else if (flag == "--log") log_override = argv[i + 1];
    }
    Script script = script_path.empty() ? Script{} : load_script(script_path);
    if (!log_override.empty()) script.log_path = log_override;
    if (script.exit_immediately) return 0;

    std::ofstream log;
    if (!script.log_path.empty()) log.open(script.log_path, std::ios::app);

    reply(script.on_start);
    std::string current_fen;
    int searches = 0;
    std::string line;
    while (std::getline(std::cin, line)) {
        line = trim(line);
        if (log.is_open()) log << line << '\n' << std::flush;
        if (line == "quit") break;
        if (line == "uci") {
            reply(script.on_uci);
        } else if (line == "isready") {
            reply(script.on_isready);
        } else if (line.rfind("position fen ", 0) == 0) {
            current_fen = line.substr(13);
            if (const auto moves = current_fen.find(" moves"); moves != std::string::npos) {
                current_fen.resize(moves);
            }
        } else if (line.rfind("go", 0) == 0) {
            if (script.crash_after_searches && searches >= *script.crash_after_searches) {
                return 3;
            }
            ++searches;
            if (script.go_delay_ms > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(script.go_delay_ms));
            }
            const auto it = script.go_by_fen.find(current_fen);
            reply(it != script.go_by_fen.end() ? it->second : script.on_go);
        }
        // setoption, ucinewgame, stop: nothing to do
    }
    return 0;
}
