#include "mirage/services.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>

#include "mirage/log.hpp"

namespace mirage::services {

namespace {

double wall_now() {
    return std::chrono::duration<double>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

double mono_now() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

void set_nonblocking(int fd) {
    int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

}  // namespace

// ============================================================================
// DNS state machine
// ============================================================================

DnsState dns_step(DnsState st, bool probe_ok, const DnsConfig& cfg) {
    if (probe_ok) {
        st.consecutive_successes += 1;
        st.consecutive_failures = 0;
    } else {
        st.consecutive_failures += 1;
        st.consecutive_successes = 0;
    }
    if (st.mode == DnsMode::Normal && st.consecutive_failures >= cfg.fail_threshold)
        st.mode = DnsMode::UnderAttack;
    else if (st.mode == DnsMode::UnderAttack && st.consecutive_successes >= cfg.success_threshold)
        st.mode = DnsMode::Normal;
    return st;
}

ResolveAnswer resolve(const DnsState& st, const DnsConfig& cfg) {
    ResolveAnswer a;
    a.mode = st.mode;
    a.ttl_seconds = cfg.ttl_seconds;
    a.address = (st.mode == DnsMode::Normal) ? cfg.victim_record : cfg.puzzle_record;
    return a;
}

// ============================================================================
// Batches
// ============================================================================

PuzzleBatch make_batch(const hop::HopConfig& cfg, uint64_t interval, size_t count,
                       int difficulty, uint64_t rng_seed) {
    PuzzleBatch batch;
    batch.interval = interval;
    batch.puzzles.reserve(count);
    for (size_t j = 0; j < count; ++j) {
        // Indices wrap so every revealed suffix is in the interval's set.
        uint64_t index = j % cfg.addresses_per_interval;
        auto made = puzzle::make_puzzle(cfg, index, interval, difficulty, rng_seed + j);
        batch.puzzles.push_back(made.puzzle);  // oracle half stays with the caller
    }
    return batch;
}

void upload_batch(PuzzleServerState& st, PuzzleBatch batch) {
    uint64_t interval = batch.interval;
    st.batches[interval] = std::move(batch);
    st.cursor[interval] = 0;
}

void drop_stale_batches(PuzzleServerState& st, uint64_t current_interval) {
    for (auto it = st.batches.begin(); it != st.batches.end();) {
        if (current_interval > 0 && it->first < current_interval - 1) {
            st.cursor.erase(it->first);
            it = st.batches.erase(it);
        } else {
            ++it;
        }
    }
}

puzzle::Puzzle serve_puzzle(PuzzleServerState& st, uint64_t interval) {
    auto it = st.batches.find(interval);
    if (it == st.batches.end())
        throw std::out_of_range("no batch uploaded for interval " + std::to_string(interval));
    size_t& c = st.cursor[interval];
    if (c >= it->second.puzzles.size())
        throw BatchExhausted("batch for interval " + std::to_string(interval) + " is used up");
    st.served_total += 1;
    return it->second.puzzles[c++];
}

// ============================================================================
// LineServer
// ============================================================================

LineServer::LineServer(uint16_t port) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw BindError("socket() failed");
    int one = 1;
    setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw BindError("cannot bind 127.0.0.1:" + std::to_string(port));
    }
    if (listen(listen_fd_, 64) != 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw BindError("listen() failed");
    }
    socklen_t len = sizeof addr;
    getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    set_nonblocking(listen_fd_);
    if (pipe(wake_pipe_) != 0) throw BindError("pipe() failed");
    set_nonblocking(wake_pipe_[0]);
}

LineServer::~LineServer() {
    stop();
    if (listen_fd_ >= 0) ::close(listen_fd_);
    for (auto& [id, c] : conns_)
        if (c.fd >= 0) ::close(c.fd);
    if (wake_pipe_[0] >= 0) ::close(wake_pipe_[0]);
    if (wake_pipe_[1] >= 0) ::close(wake_pipe_[1]);
}

void LineServer::set_timer(double period_seconds, std::function<void()> fn) {
    timer_period_ = period_seconds;
    timer_fn_ = std::move(fn);
    next_timer_ = mono_now() + period_seconds;
}

void LineServer::send_line(uint64_t conn_id, const std::string& line) {
    std::lock_guard<std::mutex> lk(out_mutex_);
    auto it = conns_.find(conn_id);
    if (it == conns_.end()) return;
    it->second.outbuf += line;
    it->second.outbuf += '\n';
}

void LineServer::close_conn(uint64_t id) {
    auto it = conns_.find(id);
    if (it == conns_.end()) return;
    ::close(it->second.fd);
    conns_.erase(it);
}

void LineServer::loop_once(int timeout_ms) {
    std::vector<pollfd> fds;
    std::vector<uint64_t> ids;
    fds.push_back(pollfd{listen_fd_, POLLIN, 0});
    fds.push_back(pollfd{wake_pipe_[0], POLLIN, 0});
    for (auto& [id, c] : conns_) {
        short ev = POLLIN;
        if (!c.outbuf.empty()) ev |= POLLOUT;
        fds.push_back(pollfd{c.fd, ev, 0});
        ids.push_back(id);
    }
    int rc = ::poll(fds.data(), fds.size(), timeout_ms);

    if (timer_fn_ && mono_now() >= next_timer_) {
        next_timer_ += timer_period_;
        timer_fn_();
    }
    if (rc <= 0) return;

    if (fds[0].revents & POLLIN) {
        while (true) {
            int fd = accept(listen_fd_, nullptr, nullptr);
            if (fd < 0) break;
            set_nonblocking(fd);
            int one = 1;
            setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            conns_[next_conn_id_++] = Conn{fd, "", ""};
        }
    }
    if (fds[1].revents & POLLIN) {
        char buf[64];
        while (read(wake_pipe_[0], buf, sizeof buf) > 0) {
        }
    }
    for (size_t i = 2; i < fds.size(); ++i) {
        uint64_t id = ids[i - 2];
        auto it = conns_.find(id);
        if (it == conns_.end()) continue;
        Conn& c = it->second;
        if (fds[i].revents & (POLLERR | POLLHUP)) {
            close_conn(id);
            continue;
        }
        if (fds[i].revents & POLLIN) {
            char buf[4096];
            ssize_t n;
            bool closed = false;
            while ((n = read(c.fd, buf, sizeof buf)) > 0) c.inbuf.append(buf, static_cast<size_t>(n));
            if (n == 0) closed = true;
            size_t pos;
            while ((pos = c.inbuf.find('\n')) != std::string::npos) {
                std::string line = c.inbuf.substr(0, pos);
                c.inbuf.erase(0, pos + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (!line.empty() && handler_) handler_(id, line);
                if (conns_.find(id) == conns_.end()) break;  // handler closed us
            }
            if (closed) {
                close_conn(id);
                continue;
            }
        }
        it = conns_.find(id);
        if (it == conns_.end()) continue;
        Conn& c2 = it->second;
        if (!c2.outbuf.empty()) {
            ssize_t n = write(c2.fd, c2.outbuf.data(), c2.outbuf.size());
            if (n > 0) c2.outbuf.erase(0, static_cast<size_t>(n));
        }
    }
}

void LineServer::run() {
    running_ = true;
    while (running_) {
        int timeout_ms = 50;
        if (timer_fn_) {
            double remain = next_timer_ - mono_now();
            timeout_ms = std::max(1, std::min(50, static_cast<int>(remain * 1000)));
        }
        loop_once(timeout_ms);
        // Flush pending writes promptly even without new input.
        for (auto& [id, c] : conns_) {
            if (c.outbuf.empty()) continue;
            ssize_t n = write(c.fd, c.outbuf.data(), c.outbuf.size());
            if (n > 0) c.outbuf.erase(0, static_cast<size_t>(n));
        }
    }
}

void LineServer::start_in_background() {
    thread_ = std::thread([this]() { run(); });
    // Wait until the loop actually runs so stop() cannot race startup.
    while (!running_) std::this_thread::yield();
}

void LineServer::stop() {
    if (running_.exchange(false)) {
        char b = 1;
        ssize_t ignored = write(wake_pipe_[1], &b, 1);
        (void)ignored;
    }
    if (thread_.joinable()) thread_.join();
}

// ============================================================================
// LineClient
// ============================================================================

LineClient::LineClient(const std::string& host, uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw std::runtime_error("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd_);
        fd_ = -1;
        throw std::runtime_error("bad host address: " + host);
    }
    if (connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw std::runtime_error("cannot connect to " + host + ":" + std::to_string(port));
    }
    int one = 1;
    setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

LineClient::~LineClient() {
    if (fd_ >= 0) ::close(fd_);
}

void LineClient::send_line(const std::string& line) {
    std::string out = line;
    out += '\n';
    size_t off = 0;
    while (off < out.size()) {
        ssize_t n = write(fd_, out.data() + off, out.size() - off);
        if (n <= 0) throw std::runtime_error("short write to service");
        off += static_cast<size_t>(n);
    }
}

std::optional<std::string> LineClient::recv_line(double timeout_seconds) {
    double deadline = mono_now() + timeout_seconds;
    while (true) {
        size_t pos = buf_.find('\n');
        if (pos != std::string::npos) {
            std::string line = buf_.substr(0, pos);
            buf_.erase(0, pos + 1);
            return line;
        }
        double remain = deadline - mono_now();
        if (remain <= 0) return std::nullopt;
        pollfd p{fd_, POLLIN, 0};
        int rc = ::poll(&p, 1, std::max(1, static_cast<int>(remain * 1000)));
        if (rc <= 0) continue;
        char chunk[4096];
        ssize_t n = read(fd_, chunk, sizeof chunk);
        if (n <= 0) return std::nullopt;
        buf_.append(chunk, static_cast<size_t>(n));
    }
}

WireMessage LineClient::request(const WireMessage& m, double timeout_seconds) {
    send_line(encode(m));
    double deadline = mono_now() + timeout_seconds;
    while (true) {
        double remain = deadline - mono_now();
        if (remain <= 0) throw std::runtime_error("service reply timed out");
        auto line = recv_line(remain);
        if (!line) throw std::runtime_error("service reply timed out");
        WireMessage r = decode(*line);
        if (r.req_id == m.req_id) return r;
        // A reply to some other outstanding request; not ours, drop it.
    }
}

// ============================================================================
// DnsService
// ============================================================================

DnsService::DnsService(DnsServiceConfig cfg) : cfg_(std::move(cfg)), server_(cfg_.port) {
    server_.set_handler([this](uint64_t conn, const std::string& line) { on_line(conn, line); });
    server_.set_timer(cfg_.dns.probe_period_seconds, [this]() { probe(); });
}

void DnsService::start() { server_.start_in_background(); }
void DnsService::stop() { server_.stop(); }

DnsState DnsService::state() const {
    std::lock_guard<std::mutex> lk(mu_);
    return st_;
}

nlohmann::json DnsService::state_log() const {
    std::lock_guard<std::mutex> lk(mu_);
    nlohmann::json j;
    j["mode"] = st_.mode == DnsMode::Normal ? "normal" : "under_attack";
    j["consecutive_failures"] = st_.consecutive_failures;
    j["consecutive_successes"] = st_.consecutive_successes;
    j["probes_sent"] = probes_sent_;
    j["queries_served"] = queries_served_;
    return j;
}

void DnsService::probe() {
    // Health = a TCP connect to the victim endpoint within the timeout.
    bool ok = false;
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd >= 0) {
        set_nonblocking(fd);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(cfg_.victim_probe_port);
        inet_pton(AF_INET, cfg_.victim_probe_host.c_str(), &addr.sin_addr);
        int rc = connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
        if (rc == 0) {
            ok = true;
        } else if (errno == EINPROGRESS) {
            pollfd p{fd, POLLOUT, 0};
            if (::poll(&p, 1, static_cast<int>(cfg_.probe_timeout_seconds * 1000)) > 0) {
                int err = 0;
                socklen_t len = sizeof err;
                getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
                ok = (err == 0);
            }
        }
        ::close(fd);
    }
    std::lock_guard<std::mutex> lk(mu_);
    probes_sent_ += 1;
    st_ = dns_step(st_, ok, cfg_.dns);
    MIRAGE_LOG_DEBUG("dns probe %s (fail streak %d)", ok ? "ok" : "failed", st_.consecutive_failures);
}

void DnsService::on_line(uint64_t conn, const std::string& line) {
    WireMessage reply;
    uint64_t req_id = 0;
    try {
        WireMessage m = decode(line);
        req_id = m.req_id;
        if (m.type != MsgType::Resolve) throw WireError("dns service only answers Resolve");
        ResolveAnswer a;
        {
            std::lock_guard<std::mutex> lk(mu_);
            queries_served_ += 1;
            a = resolve(st_, cfg_.dns);
        }
        reply.type = MsgType::ResolveReply;
        reply.req_id = req_id;
        reply.body["address"] = a.address;
        reply.body["ttl_s"] = a.ttl_seconds;
        reply.body["mode"] = a.mode == DnsMode::Normal ? "normal" : "under_attack";
    } catch (const std::exception& e) {
        reply.type = MsgType::Error;
        reply.req_id = req_id;
        reply.body["message"] = e.what();
    }
    server_.send_line(conn, encode(reply));
}

// ============================================================================
// PuzzleService
// ============================================================================

PuzzleService::PuzzleService(PuzzleServiceConfig cfg) : cfg_(std::move(cfg)), server_(cfg_.port) {
    cfg_.hop.validate();
    st_.cfg = cfg_.server;
    alloc_.cfg = cfg_.server.allocator;
    server_.set_handler([this](uint64_t conn, const std::string& line) { on_line(conn, line); });
    server_.set_timer(cfg_.allocator_step_seconds, [this]() { on_tick(); });
}

void PuzzleService::start() { server_.start_in_background(); }
void PuzzleService::stop() { server_.stop(); }

uint64_t PuzzleService::current_interval() const {
    double t = wall_now() - cfg_.epoch_start_unix;
    if (t < 0) t = 0;
    return static_cast<uint64_t>(t / cfg_.hop.interval_seconds);
}

nlohmann::json PuzzleService::state_log() const {
    nlohmann::json j;
    j["served_total"] = st_.served_total;
    j["grants_total"] = grants_total_;
    j["mode"] = cfg_.server.mode == ServeMode::SelfService ? "selfservice" : "auction";
    return j;
}

void PuzzleService::ensure_batches(uint64_t interval) {
    // Stands in for the victim's periodic upload: only public puzzle halves
    // ever land in st_.
    if (st_.batches.count(interval)) return;
    upload_batch(st_, make_batch(cfg_.hop, interval, cfg_.server.batch_size, cfg_.difficulty,
                                 cfg_.batch_seed ^ (interval * 0x9e3779b97f4a7c15ULL)));
    drop_stale_batches(st_, current_interval());
}

void PuzzleService::on_line(uint64_t conn, const std::string& line) {
    WireMessage reply;
    uint64_t req_id = 0;
    try {
        WireMessage m = decode(line);
        req_id = m.req_id;
        std::lock_guard<std::mutex> lk(mu_);
        if (m.type == MsgType::GetPuzzle) {
            uint64_t cur = current_interval();
            uint64_t want = m.body.value("interval", cur);
            double into = wall_now() - cfg_.epoch_start_unix -
                          static_cast<double>(cur) * cfg_.hop.interval_seconds;
            double left = cfg_.hop.interval_seconds - into;
            bool ok = want == cur || (want == cur + 1 && left <= cfg_.server.presolve_lead_seconds) ||
                      (cur > 0 && want == cur - 1 && into < cfg_.hop.grace_seconds);
            if (!ok) throw std::out_of_range("interval outside the serve window");
            ensure_batches(want);
            puzzle::Puzzle pz = serve_puzzle(st_, want);
            reply.type = MsgType::PuzzleMsg;
            reply.body["puzzle"] = puzzle_to_json(pz);
            reply.body["prefix"] = suffix_to_hex(cfg_.hop.prefix, cfg_.hop.prefix_bits);
        } else if (m.type == MsgType::SubmitSolution) {
            if (cfg_.server.mode != ServeMode::Auction)
                throw WireError("solution auction is not enabled");
            puzzle::PendingSolution sol;
            sol.requester = m.body.at("requester").get<uint64_t>();
            sol.difficulty = m.body.at("difficulty").get<int>();
            sol.arrival = wall_now();
            u128 suffix;
            if (!parse_hex_u128(m.body.at("suffix").get<std::string>(), suffix))
                throw WireError("bad suffix hex");
            sol.suffix_value = suffix;
            uint64_t index = m.body.at("index").get<uint64_t>();
            uint64_t interval = m.body.at("interval").get<uint64_t>();
            // Victim-side validation: the claimed suffix must be the real
            // schedule entry. Invalid claims are dropped by the allocator.
            sol.valid = hop::derive_suffix(cfg_.hop, index, interval).value == suffix;
            pending_.emplace_back(sol, Waiting{conn, req_id, sol.requester});
            return;  // adjudicated on the next allocator tick
        } else {
            throw WireError("unsupported message for puzzle service");
        }
        reply.req_id = req_id;
    } catch (const std::exception& e) {
        reply.type = MsgType::Error;
        reply.req_id = req_id;
        reply.body["message"] = e.what();
    }
    server_.send_line(conn, encode(reply));
}

void PuzzleService::on_tick() {
    std::vector<std::pair<puzzle::PendingSolution, Waiting>> batch;
    {
        std::lock_guard<std::mutex> lk(mu_);
        batch = std::move(pending_);
        pending_.clear();
        if (batch.empty() && cfg_.server.mode == ServeMode::SelfService) return;

        std::vector<puzzle::PendingSolution> sols;
        for (auto& [sol, who] : batch) sols.push_back(sol);
        auto step = puzzle::allocator_step(alloc_, wall_now(), sols);

        auto find_waiting = [&batch](uint64_t requester) -> const Waiting* {
            for (auto& [sol, who] : batch)
                if (who.requester == requester) return &who;
            return nullptr;
        };
        for (const auto& g : step.grants) {
            const Waiting* w = find_waiting(g.requester);
            if (!w) continue;
            grants_total_ += 1;
            WireMessage reply;
            reply.type = MsgType::Grant;
            reply.req_id = w->req_id;
            reply.body["suffix"] = suffix_to_hex(g.suffix_value, cfg_.hop.suffix_bits());
            server_.send_line(w->conn, encode(reply));
        }
        for (const auto& e : step.escalations) {
            const Waiting* w = find_waiting(e.requester);
            if (!w) continue;
            WireMessage reply;
            reply.type = MsgType::Escalate;
            reply.req_id = w->req_id;
            reply.body["new_difficulty"] = e.new_difficulty;
            server_.send_line(w->conn, encode(reply));
        }
    }
}

// ============================================================================
// Client driver
// ============================================================================

ClientDriverStats client_session(const ClientDriverConfig& cfg, double duration_seconds) {
    cfg.hop.validate();
    ClientDriverStats stats;

    auto interval_at = [&cfg](double unix_t) -> uint64_t {
        double t = unix_t - cfg.epoch_start_unix;
        if (t < 0) t = 0;
        return static_cast<uint64_t>(t / cfg.hop.interval_seconds);
    };
    auto into_interval = [&cfg, &interval_at](double unix_t) {
        return unix_t - cfg.epoch_start_unix -
               static_cast<double>(interval_at(unix_t)) * cfg.hop.interval_seconds;
    };
    // Client-side validity needs only the published schedule shape.
    auto held_valid = [&cfg, &interval_at, &into_interval](const HeldSuffix& h, double unix_t) {
        uint64_t cur = interval_at(unix_t);
        if (h.interval == cur) return true;
        return h.interval + 1 == cur && into_interval(unix_t) < cfg.hop.grace_seconds;
    };

    double deadline = mono_now() + duration_seconds;
    double backoff = cfg.backoff_base_seconds;
    double next_solve_at = mono_now();
    double last_valid_at = -1;
    size_t traffic_rr = 0;

    std::unique_ptr<LineClient> dns, puz;
    uint64_t req_id = 1;

    double cached_mode_until = 0;
    bool under_attack = false;

    auto sleep_s = [](double s) {
        if (s > 0) std::this_thread::sleep_for(std::chrono::duration<double>(s));
    };

    while (mono_now() < deadline) {
        try {
            // Refresh the service record when the cached answer expires.
            if (mono_now() >= cached_mode_until) {
                if (!dns) dns = std::make_unique<LineClient>(cfg.dns_host, cfg.dns_port);
                WireMessage q;
                q.type = MsgType::Resolve;
                q.req_id = req_id++;
                q.body["name"] = "victim";
                WireMessage r = dns->request(q, 1.0);
                if (r.type != MsgType::ResolveReply) throw std::runtime_error("resolve failed");
                stats.resolves += 1;
                under_attack = r.body.at("mode").get<std::string>() == "under_attack";
                cached_mode_until = mono_now() + r.body.at("ttl_s").get<double>();
            }

            double now_u = wall_now();
            uint64_t cur = interval_at(now_u);

            if (under_attack && mono_now() >= next_solve_at) {
                // Prefer the upcoming interval once inside the pre-solve lead.
                uint64_t want = cur;
                double left = cfg.hop.interval_seconds - into_interval(now_u);
                bool have_cur = false, have_next = false;
                for (const auto& h : stats.acquisitions) {
                    if (h.interval == cur) have_cur = true;
                    if (h.interval == cur + 1) have_next = true;
                }
                if (have_cur && left <= cfg.presolve_lead_seconds && !have_next) want = cur + 1;

                if (!puz) puz = std::make_unique<LineClient>(cfg.puzzle_host, cfg.puzzle_port);
                WireMessage q;
                q.type = MsgType::GetPuzzle;
                q.req_id = req_id++;
                q.body["interval"] = want;
                WireMessage r = puz->request(q, 1.0);
                if (r.type == MsgType::PuzzleMsg) {
                    stats.puzzles_fetched += 1;
                    puzzle::Puzzle pz = puzzle_from_json(r.body.at("puzzle"));
                    auto sol = puzzle::solve_puzzle(pz);
                    if (sol) {
                        stats.acquisitions.push_back(HeldSuffix{sol->suffix_value, pz.interval, wall_now()});
                    }
                    next_solve_at = mono_now() + cfg.solve_pace_seconds / std::max(cfg.compute, 1e-9);
                } else {
                    throw std::runtime_error("puzzle fetch refused");
                }
            }
            backoff = cfg.backoff_base_seconds;
        } catch (const std::exception& e) {
            MIRAGE_LOG_DEBUG("client backoff: %s", e.what());
            stats.backoffs += 1;
            dns.reset();
            puz.reset();
            sleep_s(std::min(backoff, cfg.backoff_cap_seconds));
            backoff = std::min(backoff * 2, cfg.backoff_cap_seconds);
        }

        // Spread traffic round robin over currently valid held suffixes.
        double now_u = wall_now();
        std::vector<const HeldSuffix*> valid;
        for (const auto& h : stats.acquisitions)
            if (held_valid(h, now_u)) valid.push_back(&h);
        if (!valid.empty()) {
            const HeldSuffix* pick = valid[traffic_rr % valid.size()];
            ++traffic_rr;
            stats.traffic_packets += 1;
            stats.traffic_by_suffix[suffix_to_hex(pick->value, cfg.hop.suffix_bits())] += 1;
        }
        if (!stats.acquisitions.empty()) {
            if (!valid.empty()) {
                if (last_valid_at >= 0) {
                    double gap = mono_now() - last_valid_at;
                    stats.max_validity_gap_seconds = std::max(stats.max_validity_gap_seconds, gap);
                }
                last_valid_at = mono_now();
            }
            // While invalid, the growing gap is charged when validity returns
            // or the session ends.
        }
        sleep_s(cfg.traffic_tick_seconds);
    }
    if (last_valid_at >= 0) {
        double tail_gap = mono_now() - last_valid_at;
        stats.max_validity_gap_seconds = std::max(stats.max_validity_gap_seconds, tail_gap);
    }
    return stats;
}

}  // namespace mirage::services
