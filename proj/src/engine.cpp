#include "squareval/engine.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <sstream>
#include <thread>

namespace squareval {

using Clock = std::chrono::steady_clock;

// ---- child process with line-oriented pipes --------------------------------

class EngineSession::Process {
public:
    enum class ReadStatus { Line, Timeout, Eof };

    static std::unique_ptr<Process> launch(const std::vector<std::string>& argv) {
        static std::once_flag ignore_sigpipe;
        std::call_once(ignore_sigpipe, [] { ::signal(SIGPIPE, SIG_IGN); });

        if (argv.empty()) {
            throw EngineError(EngineError::Reason::Launch, "empty engine command");
        }
        std::vector<char*> cargv;
        for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
        cargv.push_back(nullptr);

        int to_child[2], from_child[2], exec_status[2];
        if (::pipe2(to_child, O_CLOEXEC) != 0 || ::pipe2(from_child, O_CLOEXEC) != 0 ||
            ::pipe2(exec_status, O_CLOEXEC) != 0) {
            throw EngineError(EngineError::Reason::Launch, std::string("pipe: ") + std::strerror(errno));
        }

        const pid_t pid = ::fork();
        if (pid < 0) {
            throw EngineError(EngineError::Reason::Launch, std::string("fork: ") + std::strerror(errno));
        }
        if (pid == 0) {
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::execvp(cargv[0], cargv.data());
            const int err = errno;
            [[maybe_unused]] auto n = ::write(exec_status[1], &err, sizeof err);
            ::_exit(127);
        }

        ::close(to_child[0]);
        ::close(from_child[1]);
        ::close(exec_status[1]);
        int child_errno = 0;
        ssize_t n;
        do {
            n = ::read(exec_status[0], &child_errno, sizeof child_errno);
        } while (n < 0 && errno == EINTR);
        ::close(exec_status[0]);
        if (n == static_cast<ssize_t>(sizeof child_errno)) {
            ::close(to_child[1]);
            ::close(from_child[0]);
            ::waitpid(pid, nullptr, 0);
            throw EngineError(EngineError::Reason::Launch,
                              "cannot launch engine '" + argv[0] + "': " + std::strerror(child_errno));
        }
        return std::unique_ptr<Process>(new Process(pid, to_child[1], from_child[0]));
    }

    ~Process() {
        if (to_child_ >= 0) ::close(to_child_);
        if (from_child_ >= 0) ::close(from_child_);
        if (pid_ > 0 && !reaped_) {
            // Give a quitting engine a moment before killing it.
            for (int i = 0; i < 50 && !exited(); ++i) {
                std::this_thread::sleep_for(std::chrono::milliseconds(10));
            }
            if (!reaped_) {
                ::kill(pid_, SIGKILL);
                ::waitpid(pid_, nullptr, 0);
            }
        }
    }

    bool write_line(const std::string& line) {
        std::string data = line + '\n';
        const char* p = data.data();
        std::size_t left = data.size();
        while (left > 0) {
            const ssize_t n = ::write(to_child_, p, left);
            if (n < 0) {
                if (errno == EINTR) continue;
                return false;
            }
            p += n;
            left -= static_cast<std::size_t>(n);
        }
        return true;
    }

    ReadStatus read_line(std::string& out, Clock::time_point deadline) {
        for (;;) {
            if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
                out = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                if (!out.empty() && out.back() == '\r') out.pop_back();
                return ReadStatus::Line;
            }
            if (eof_) {
                if (!buffer_.empty()) {
                    out = std::move(buffer_);
                    buffer_.clear();
                    return ReadStatus::Line;
                }
                return ReadStatus::Eof;
            }
            const auto now = Clock::now();
            if (now >= deadline) {
                return ReadStatus::Timeout;
            }
            const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
            pollfd pfd{from_child_, POLLIN, 0};
            const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(wait + 1, 1'000'000)));
            if (ready < 0) {
                if (errno == EINTR) continue;
                eof_ = true;
                continue;
            }
            if (ready == 0) {
                continue;
            }
            char chunk[4096];
            const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
            if (n < 0) {
                if (errno == EINTR || errno == EAGAIN) continue;
                eof_ = true;
            } else if (n == 0) {
                eof_ = true;
            } else {
                buffer_.append(chunk, static_cast<std::size_t>(n));
            }
        }
    }

    bool exited() {
        if (reaped_) return true;
        const pid_t r = ::waitpid(pid_, nullptr, WNOHANG);
        if (r == pid_ || r < 0) reaped_ = true;
        return reaped_;
    }

private:
    Process(pid_t pid, int to_child, int from_child)
        : pid_(pid), to_child_(to_child), from_child_(from_child) {}

    pid_t pid_;
    int to_child_;
    int from_child_;
    std::string buffer_;
    bool eof_ = false;
    bool reaped_ = false;
};

// ---- limits and score conversion ---------------------------------------------

EngineLimits EngineLimits::fixed_depth(int depth) {
    if (depth < 1) throw UsageError("engine depth must be >= 1");
    return EngineLimits{Mode::Depth, depth, 0};
}

EngineLimits EngineLimits::fixed_movetime(int ms) {
    if (ms < 1) throw UsageError("engine movetime must be >= 1 ms");
    return EngineLimits{Mode::MoveTime, 0, ms};
}

std::string EngineLimits::go_command() const {
    return mode == Mode::Depth ? "go depth " + std::to_string(depth)
                               : "go movetime " + std::to_string(movetime_ms);
}

Evaluation evaluation_from_score(Color side_to_move, const UciScore& score, int depth) {
    Evaluation e;
    e.depth_reached = depth;
    double stm_pawns;
    if (score.is_mate) {
        // "mate 0" and negative distances mean the side to move is being mated.
        e.kind = ScoreKind::MateCapped;
        e.mate_in = score.value;
        stm_pawns = score.value > 0 ? kScoreCap : -kScoreCap;
    } else {
        e.kind = ScoreKind::Centipawn;
        e.raw_cp = score.value;
        stm_pawns = std::clamp(score.value, -kRawCentipawnClamp, kRawCentipawnClamp) / 100.0;
    }
    e.pawns_white = side_to_move == Color::White ? stm_pawns : -stm_pawns;
    if (e.pawns_white == 0.0) e.pawns_white = 0.0;  // no negative zero
    return e;
}

std::optional<InfoScore> parse_info_score(std::string_view line) {
    std::istringstream in{std::string(line)};
    std::string word;
    if (!(in >> word) || word != "info") return std::nullopt;
    InfoScore info;
    bool has_score = false;
    while (in >> word) {
        if (word == "depth") {
            in >> info.depth;
        } else if (word == "multipv") {
            in >> info.multipv;
        } else if (word == "score") {
            std::string kind;
            int value = 0;
            if (!(in >> kind >> value)) return std::nullopt;
            if (kind != "cp" && kind != "mate") return std::nullopt;
            info.score = UciScore{kind == "mate", value};
            has_score = true;
        } else if (word == "string" || word == "pv") {
            break;  // free text / move list follows
        }
        if (in.fail()) return std::nullopt;
    }
    if (!has_score) return std::nullopt;
    return info;
}

std::vector<std::string> split_command(std::string_view command) {
    std::vector<std::string> out;
    std::string current;
    bool quoted = false;
    bool have = false;
    for (char c : command) {
        if (c == '"') {
            quoted = !quoted;
            have = true;
        } else if ((c == ' ' || c == '\t') && !quoted) {
            if (have) out.push_back(std::move(current));
            current.clear();
            have = false;
        } else {
            current += c;
            have = true;
        }
    }
    if (have) out.push_back(std::move(current));
    return out;
}

// ---- session ------------------------------------------------------------------

EngineSession::EngineSession(std::unique_ptr<Process> process, SessionOptions options)
    : process_(std::move(process)), options_(std::move(options)) {}

EngineSession::~EngineSession() {
    if (process_ && !failed_) {
        process_->write_line("quit");
    }
}

std::unique_ptr<EngineSession> EngineSession::start(const std::string& engine_command,
                                                    const SessionOptions& options) {
    auto process = Process::launch(split_command(engine_command));
    std::unique_ptr<EngineSession> session(new EngineSession(std::move(process), options));
    session->handshake();
    return session;
}

bool EngineSession::alive() const noexcept { return !failed_ && process_ && !process_->exited(); }

void EngineSession::send(const std::string& command) {
    sent_.push_back(command);
    if (!process_->write_line(command)) {
        failed_ = true;
        throw EngineError(EngineError::Reason::Eof, "engine closed its input while sending '" + command + "'");
    }
}

std::string EngineSession::receive(Clock::time_point deadline, const char* waiting_for) {
    std::string line;
    switch (process_->read_line(line, deadline)) {
        case Process::ReadStatus::Line: return line;
        case Process::ReadStatus::Timeout:
            failed_ = true;
            throw EngineError(EngineError::Reason::Timeout,
                              std::string("timed out waiting for ") + waiting_for);
        case Process::ReadStatus::Eof: break;
    }
    failed_ = true;
    throw EngineError(EngineError::Reason::Eof,
                      std::string("engine exited while waiting for ") + waiting_for);
}

namespace {
std::string first_word(std::string_view line) {
    const auto b = line.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = line.find_first_of(" \t", b);
    return std::string(line.substr(b, e == std::string_view::npos ? e : e - b));
}
}  // namespace

void EngineSession::handshake() {
    const auto deadline = Clock::now() + options_.handshake_timeout;
    send("uci");
    for (;;) {
        const std::string line = receive(deadline, "uciok");
        const std::string word = first_word(line);
        if (word == "uciok") break;
        if (word == "readyok" || word == "bestmove" || (word == "info" && parse_info_score(line))) {
            failed_ = true;
            throw EngineError(EngineError::Reason::Protocol, "unexpected '" + line + "' before uciok");
        }
        if (line.starts_with("id name ")) name_ = line.substr(8);
        // Banners, "id", "option" and unknown lines are ignored.
    }
    for (const auto& [key, value] : options_.uci_options) {
        send("setoption name " + key + " value " + value);
    }
    send("isready");
    for (;;) {
        const std::string line = receive(deadline, "readyok");
        const std::string word = first_word(line);
        if (word == "readyok") break;
        if (word == "uciok" || word == "bestmove") {
            failed_ = true;
            throw EngineError(EngineError::Reason::Protocol, "unexpected '" + line + "' before readyok");
        }
    }
}

Evaluation EngineSession::evaluate(const Position& p, const EngineLimits& limits) {
    if (failed_) {
        throw EngineError(EngineError::Reason::Eof, "session is no longer usable");
    }
    const auto budget = limits.mode == EngineLimits::Mode::MoveTime
                            ? std::chrono::milliseconds(limits.movetime_ms) + options_.grace
                            : options_.depth_search_timeout + options_.grace;
    const auto deadline = Clock::now() + budget;

    send("position fen " + emit_fen(p));
    send(limits.go_command());

    std::optional<InfoScore> best;
    for (;;) {
        std::string line;
        try {
            line = receive(deadline, "bestmove");
        } catch (const EngineError& e) {
            if (e.reason() != EngineError::Reason::Timeout) throw;
            // One chance to wind the search down.
            failed_ = false;
            send("stop");
            line = receive(Clock::now() + options_.grace, "bestmove after stop");
        }
        const std::string word = first_word(line);
        if (word == "bestmove") break;
        if (word == "info") {
            const auto info = parse_info_score(line);
            if (info && info->multipv == 1 && (!best || info->depth >= best->depth)) {
                best = info;
            }
        }
    }
    if (!best) {
        throw EngineError(EngineError::Reason::Protocol,
                          "engine sent bestmove without a score for " + emit_fen(p));
    }
    return evaluation_from_score(p.side_to_move, best->score, best->depth);
}

// ---- pool -----------------------------------------------------------------------

std::vector<std::pair<Position, Evaluation>> evaluate_batch(std::span<EngineSession* const> pool,
                                                           std::span<const Position> positions,
                                                           const EngineLimits& limits,
                                                           const BatchProgress& progress) {
    if (pool.empty()) {
        throw UsageError("evaluate_batch needs at least one engine session");
    }

    std::mutex mutex;
    std::condition_variable cv;
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < positions.size(); ++i) queue.push_back(i);
    std::vector<std::optional<Evaluation>> results(positions.size());
    std::size_t in_flight = 0;
    std::size_t done = 0;
    std::string last_error;

    auto worker = [&](EngineSession* session) {
        for (;;) {
            std::size_t index;
            {
                std::unique_lock lock(mutex);
                cv.wait(lock, [&] { return !queue.empty() || in_flight == 0; });
                if (queue.empty()) return;
                index = queue.front();
                queue.pop_front();
                ++in_flight;
            }
            try {
                Evaluation e = session->evaluate(positions[index], limits);
                std::lock_guard lock(mutex);
                results[index] = e;
                --in_flight;
                ++done;
                if (progress) progress(done, positions.size());
                cv.notify_all();
            } catch (const std::exception& e) {
                std::lock_guard lock(mutex);
                queue.push_front(index);
                --in_flight;
                last_error = e.what();
                cv.notify_all();
                return;  // retire this session
            }
        }
    };

    {
        std::vector<std::jthread> threads;
        threads.reserve(pool.size());
        for (EngineSession* s : pool) threads.emplace_back(worker, s);
    }

    if (!queue.empty()) {
        throw EngineError(EngineError::Reason::Exhausted,
                          "all engine sessions failed; last error: " + last_error);
    }
    std::vector<std::pair<Position, Evaluation>> out;
    out.reserve(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        out.emplace_back(positions[i], *results[i]);
    }
    return out;
}

}  // namespace squareval
