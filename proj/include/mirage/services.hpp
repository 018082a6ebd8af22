#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mirage/hop.hpp"
#include "mirage/puzzle.hpp"
#include "mirage/report.hpp"

namespace mirage::services {

struct BindError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct WireError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BatchExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ============================================================================
// Wire protocol: newline-delimited JSON, one message per line.
// ============================================================================

enum class MsgType {
    Resolve,
    ResolveReply,
    GetPuzzle,
    PuzzleMsg,
    SubmitSolution,
    Grant,
    Escalate,
    Error
};

constexpr int kProtocolVersion = 1;

struct WireMessage {
    MsgType type = MsgType::Error;
    uint64_t req_id = 0;
    int version = kProtocolVersion;
    nlohmann::json body = nlohmann::json::object();
};

std::string msg_type_name(MsgType t);
MsgType msg_type_from_name(const std::string& s);  // throws WireError

std::string encode(const WireMessage& m);          // single line, no newline
WireMessage decode(const std::string& line);       // throws WireError

nlohmann::json puzzle_to_json(const puzzle::Puzzle& pz);
puzzle::Puzzle puzzle_from_json(const nlohmann::json& j);  // throws WireError

// ============================================================================
// DNS failover state machine
// ============================================================================

enum class DnsMode { Normal, UnderAttack };

struct DnsConfig {
    int fail_threshold = 3;     // consecutive probe failures to fail over
    int success_threshold = 5;  // consecutive successes to fail back
    double ttl_seconds = 5.0;
    double probe_period_seconds = 2.0;
    std::string victim_record;
    std::string puzzle_record;
};

struct DnsState {
    DnsMode mode = DnsMode::Normal;
    int consecutive_failures = 0;
    int consecutive_successes = 0;
};

DnsState dns_step(DnsState st, bool probe_ok, const DnsConfig& cfg);

struct ResolveAnswer {
    std::string address;
    double ttl_seconds = 0;
    DnsMode mode = DnsMode::Normal;
};

ResolveAnswer resolve(const DnsState& st, const DnsConfig& cfg);

// ============================================================================
// Puzzle distribution point
// ============================================================================

enum class ServeMode { SelfService, Auction };

struct PuzzleBatch {
    uint64_t interval = 0;
    std::vector<puzzle::Puzzle> puzzles;
};

// Victim-side batch preparation; the oracle halves stay with the caller.
PuzzleBatch make_batch(const hop::HopConfig& cfg, uint64_t interval, size_t count,
                       int difficulty, uint64_t rng_seed);

struct PuzzleServerConfig {
    ServeMode mode = ServeMode::SelfService;
    size_t batch_size = 4096;
    // Near a rollover the upcoming interval's batch may be served early so
    // clients can pre-solve.
    double presolve_lead_seconds = 5.0;
    puzzle::AllocatorConfig allocator{};
};

// Holds only public puzzle material: no trapdoor keys, no expected suffixes.
struct PuzzleServerState {
    PuzzleServerConfig cfg;
    std::map<uint64_t, PuzzleBatch> batches;  // by interval
    std::map<uint64_t, size_t> cursor;        // next unserved per interval
    uint64_t served_total = 0;
};

void upload_batch(PuzzleServerState& st, PuzzleBatch batch);
void drop_stale_batches(PuzzleServerState& st, uint64_t current_interval);

// Round-robin serve from the requested interval's batch. Throws
// std::out_of_range when that interval's batch is absent, BatchExhausted when
// used up.
puzzle::Puzzle serve_puzzle(PuzzleServerState& st, uint64_t interval);

// ============================================================================
// Loopback TCP servers (line-oriented)
// ============================================================================

// Single-threaded poll loop; handlers run serially on the loop thread.
class LineServer {
  public:
    using Handler = std::function<void(uint64_t conn_id, const std::string& line)>;

    explicit LineServer(uint16_t port);  // 0 picks an ephemeral port
    ~LineServer();

    uint16_t port() const { return port_; }
    void set_handler(Handler h) { handler_ = std::move(h); }
    void set_timer(double period_seconds, std::function<void()> fn);

    void send_line(uint64_t conn_id, const std::string& line);

    void run();                    // blocks until stop()
    void start_in_background();    // spawns a thread running run()
    void stop();                   // idempotent, joins the background thread

  private:
    struct Conn {
        int fd = -1;
        std::string inbuf;
        std::string outbuf;
    };

    void loop_once(int timeout_ms);
    void close_conn(uint64_t id);

    int listen_fd_ = -1;
    int wake_pipe_[2] = {-1, -1};
    uint16_t port_ = 0;
    Handler handler_;
    double timer_period_ = 0;
    std::function<void()> timer_fn_;
    double next_timer_ = 0;
    std::map<uint64_t, Conn> conns_;
    uint64_t next_conn_id_ = 1;
    std::atomic<bool> running_{false};
    std::thread thread_;
    std::mutex out_mutex_;  // send_line may be called from handlers only
};

// Blocking line-oriented client with a receive deadline.
class LineClient {
  public:
    LineClient(const std::string& host, uint16_t port);  // throws on failure
    ~LineClient();
    void send_line(const std::string& line);
    std::optional<std::string> recv_line(double timeout_seconds);

    // Round trip helper keyed by req_id; skips unrelated lines.
    WireMessage request(const WireMessage& m, double timeout_seconds);

  private:
    int fd_ = -1;
    std::string buf_;
};

// ============================================================================
// DNS service: probes the victim's TCP endpoint, serves Resolve messages.
// ============================================================================

struct DnsServiceConfig {
    DnsConfig dns;
    uint16_t port = 0;
    std::string victim_probe_host = "127.0.0.1";
    uint16_t victim_probe_port = 0;
    double probe_timeout_seconds = 0.25;
};

class DnsService {
  public:
    explicit DnsService(DnsServiceConfig cfg);
    uint16_t port() const { return server_.port(); }
    void start();
    void stop();
    DnsState state() const;
    nlohmann::json state_log() const;

  private:
    void on_line(uint64_t conn, const std::string& line);
    void probe();

    DnsServiceConfig cfg_;
    LineServer server_;
    mutable std::mutex mu_;
    DnsState st_;
    uint64_t probes_sent_ = 0;
    uint64_t queries_served_ = 0;
};

// ============================================================================
// Puzzle service: serves GetPuzzle, and in Auction mode runs the allocator
// over SubmitSolution messages, answering Grant or Escalate asynchronously.
// ============================================================================

struct PuzzleServiceConfig {
    PuzzleServerConfig server;
    uint16_t port = 0;
    hop::HopConfig hop;       // schedule parameters; key stays victim-side
    uint64_t batch_seed = 1;  // victim's batch generation seed
    int difficulty = 4;
    double allocator_step_seconds = 0.2;
    double epoch_start_unix = 0;  // wall-clock origin of interval 0
};

class PuzzleService {
  public:
    explicit PuzzleService(PuzzleServiceConfig cfg);
    uint16_t port() const { return server_.port(); }
    void start();
    void stop();
    uint64_t current_interval() const;
    nlohmann::json state_log() const;

  private:
    void on_line(uint64_t conn, const std::string& line);
    void on_tick();
    void ensure_batches(uint64_t interval);

    PuzzleServiceConfig cfg_;
    LineServer server_;
    std::mutex mu_;
    PuzzleServerState st_;
    puzzle::AllocatorState alloc_;
    struct Waiting {
        uint64_t conn;
        uint64_t req_id;
        uint64_t requester;
    };
    std::vector<std::pair<puzzle::PendingSolution, Waiting>> pending_;
    uint64_t grants_total_ = 0;
};

// ============================================================================
// Client driver
// ============================================================================

struct ClientDriverConfig {
    std::string dns_host = "127.0.0.1";
    uint16_t dns_port = 0;
    std::string puzzle_host = "127.0.0.1";
    uint16_t puzzle_port = 0;
    hop::HopConfig hop;           // published schedule shape (no key needed)
    double epoch_start_unix = 0;  // must match the puzzle service
    double compute = 1.0;         // relative solve pacing
    double solve_pace_seconds = 0.4;  // mean wall delay per solve at compute 1
    double presolve_lead_seconds = 0.5;
    double traffic_tick_seconds = 0.05;
    double backoff_base_seconds = 1.0;
    double backoff_cap_seconds = 30.0;
    uint64_t rng_seed = 1;
};

struct HeldSuffix {
    u128 value = 0;
    uint64_t interval = 0;
    double acquired_unix = 0;
};

struct ClientDriverStats {
    std::vector<HeldSuffix> acquisitions;
    uint64_t traffic_packets = 0;
    std::map<std::string, uint64_t> traffic_by_suffix;  // hex -> packets
    uint64_t resolves = 0;
    uint64_t puzzles_fetched = 0;
    uint64_t backoffs = 0;
    // Longest wall-clock span after the first acquisition with no suffix
    // valid for the current wall time.
    double max_validity_gap_seconds = 0;
};

// Runs resolve -> fetch -> solve -> spread-traffic for `duration`; returns
// what it held and sent. Real sockets, real solving.
ClientDriverStats client_session(const ClientDriverConfig& cfg, double duration_seconds);

}  // namespace mirage::services
