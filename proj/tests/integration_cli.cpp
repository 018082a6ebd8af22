#include <catch2/catch_amalgamated.hpp>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mirage/puzzle.hpp"
#include "mirage/services.hpp"

using namespace mirage;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

pid_t spawn_cli(const std::vector<std::string>& args, int* out_fd, int* err_fd) {
    int out_pipe[2], err_pipe[2];
    REQUIRE(pipe(out_pipe) == 0);
    REQUIRE(pipe(err_pipe) == 0);
    pid_t pid = fork();
    REQUIRE(pid >= 0);
    if (pid == 0) {
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(err_pipe[1], STDERR_FILENO);
        close(out_pipe[0]);
        close(out_pipe[1]);
        close(err_pipe[0]);
        close(err_pipe[1]);
        std::vector<char*> argv;
        std::string exe = MIRAGE_CLI_PATH;
        argv.push_back(exe.data());
        std::vector<std::string> copy = args;
        for (auto& a : copy) argv.push_back(a.data());
        argv.push_back(nullptr);
        execv(exe.c_str(), argv.data());
        _exit(127);
    }
    close(out_pipe[1]);
    close(err_pipe[1]);
    *out_fd = out_pipe[0];
    *err_fd = err_pipe[0];
    return pid;
}

void drain(int fd, std::string& into) {
    char buf[4096];
    ssize_t n;
    while ((n = read(fd, buf, sizeof buf)) > 0) into.append(buf, static_cast<size_t>(n));
}

CliResult run_cli(const std::vector<std::string>& args) {
    int out_fd, err_fd;
    pid_t pid = spawn_cli(args, &out_fd, &err_fd);

    CliResult res;
    pollfd fds[2] = {{out_fd, POLLIN, 0}, {err_fd, POLLIN, 0}};
    int open_fds = 2;
    while (open_fds > 0) {
        REQUIRE(poll(fds, 2, 60000) > 0);
        for (auto& p : fds) {
            if (p.fd < 0 || !(p.revents & (POLLIN | POLLHUP))) continue;
            char buf[4096];
            ssize_t n = read(p.fd, buf, sizeof buf);
            if (n > 0) {
                (p.fd == out_fd ? res.out : res.err).append(buf, static_cast<size_t>(n));
            } else {
                close(p.fd);
                p.fd = -1;
                --open_fds;
            }
        }
    }
    int status = 0;
    REQUIRE(waitpid(pid, &status, 0) == pid);
    REQUIRE(WIFEXITED(status));
    res.exit_code = WEXITSTATUS(status);
    return res;
}

// Holds a backgrounded serve process; kills it on scope exit.
struct ServeGuard {
    pid_t pid = -1;
    int out_fd = -1;
    int err_fd = -1;

    ~ServeGuard() {
        if (pid > 0) {
            kill(pid, SIGKILL);
            waitpid(pid, nullptr, 0);
        }
        if (out_fd >= 0) close(out_fd);
        if (err_fd >= 0) close(err_fd);
    }

    uint16_t wait_for_port() {
        std::string seen;
        char c;
        while (seen.find('\n') == std::string::npos) {
            pollfd p{out_fd, POLLIN, 0};
            REQUIRE(poll(&p, 1, 30000) > 0);
            ssize_t n = read(out_fd, &c, 1);
            REQUIRE(n == 1);
            seen.push_back(c);
        }
        auto colon = seen.rfind(':');
        REQUIRE(colon != std::string::npos);
        return static_cast<uint16_t>(std::stoul(seen.substr(colon + 1)));
    }

    int terminate() {
        kill(pid, SIGTERM);
        int status = 0;
        REQUIRE(waitpid(pid, &status, 0) == pid);
        pid_t done = pid;
        pid = -1;
        (void)done;
        drain(out_fd, trailing);
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string trailing;
};

ServeGuard spawn_serve(const std::vector<std::string>& args) {
    ServeGuard g;
    g.pid = spawn_cli(args, &g.out_fd, &g.err_fd);
    return g;
}

std::string write_temp(const std::string& tag, const std::string& text) {
    std::string path = "/tmp/mirage_cli_" + tag + "_" + std::to_string(::getpid());
    std::ofstream f(path);
    f << text;
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("analyze subcommands print the frozen closed-form numbers") {
    auto bf = run_cli({"analyze", "bruteforce", "--active-entries", "5000"});
    CHECK(bf.exit_code == 0);
    CHECK(bf.out.find("hit_probability 2.71050543e-16") != std::string::npos);

    auto scan = run_cli({"analyze", "scan"});
    CHECK(scan.exit_code == 0);
    CHECK(scan.out.find("scan_fraction 1.8189894e-07") != std::string::npos);

    auto fs = run_cli({"analyze", "fairshare", "--honest-compute", "1", "--attacker-compute", "1",
                       "--compromised-fraction", "0.5"});
    CHECK(fs.exit_code == 0);
    CHECK(fs.out.find("honest_share 0.25") != std::string::npos);
    CHECK(fs.out.find("attacker_share 0.75") != std::string::npos);

    auto cost = run_cli({"analyze", "cost", "--share", "0.5"});
    CHECK(cost.exit_code == 0);
    CHECK(cost.out.find("attacker_share,cost_without_usd_hr,cost_with_usd_hr") !=
          std::string::npos);
    CHECK(cost.out.find("0.5,40.5,5020.25") != std::string::npos);
}

TEST_CASE("analyze pushback reads a topology file") {
    std::string chain = std::string(TESTS_DATA_DIR) + "/chain.tsv";
    auto pb = run_cli({"analyze", "pushback", "--topology", chain, "--attack-gbps", "0.05"});
    CHECK(pb.exit_code == 0);
    CHECK(pb.out.find("link_id,router_hops,as_hops,attack_fraction") != std::string::npos);
    CHECK(pb.out.find("L1,1,1,1") != std::string::npos);
    CHECK(pb.out.find("mean_router_hops 1") != std::string::npos);
    CHECK(pb.out.find("pushed_back_fraction 1") != std::string::npos);
}

TEST_CASE("bad arguments and inputs map to distinct exit codes") {
    CHECK(run_cli({}).exit_code == 2);                      // a subcommand is required
    CHECK(run_cli({"bogus"}).exit_code == 2);               // unknown subcommand
    CHECK(run_cli({"analyze", "scan", "--nope"}).exit_code == 2);

    auto dom = run_cli({"analyze", "cost", "--share", "1.5"});
    CHECK(dom.exit_code == 2);  // domain error in the calculator
    CHECK(dom.err.find("argument error") != std::string::npos);

    auto gone = run_cli({"analyze", "pushback", "--topology", "/nonexistent/topo.tsv"});
    CHECK(gone.exit_code == 3);  // environment problem, not a usage problem

    std::string bad = write_temp("topo", "#wrong header\n");
    auto malformed = run_cli({"analyze", "pushback", "--topology", bad});
    CHECK(malformed.exit_code == 2);
    CHECK(malformed.err.find("input error") != std::string::npos);
    std::remove(bad.c_str());
}

TEST_CASE("run executes a config, writes artifacts, repeats byte for byte") {
    std::string cfg = write_temp("cfg", R"({
        "scenario": "bandwidth_exhaustion",
        "seed": 5,
        "duration_s": 12,
        "simnet": {"warmup_s": 4, "benign_flows": 2}
    })");

    std::string base1 = "/tmp/mirage_cli_out1_" + std::to_string(::getpid());
    auto r1 = run_cli({"run", cfg, "--out", base1});
    CHECK(r1.exit_code == 0);
    CHECK(r1.out.find("scenario: bandwidth_exhaustion  seed: 5") != std::string::npos);
    CHECK(r1.out.find("benign_aggregate_bps") != std::string::npos);

    std::string csv1 = slurp(base1 + ".csv");
    CHECK(csv1.rfind("time_s,entity_id,metric,value\n", 0) == 0);

    auto summary = nlohmann::json::parse(slurp(base1 + ".summary.json"));
    CHECK(summary.at("tool_version") == "1.0.0");
    CHECK(summary.at("seed") == 5);
    CHECK(summary.at("effective_config").at("simnet").at("benign_flows") == 2);

    std::string base2 = "/tmp/mirage_cli_out2_" + std::to_string(::getpid());
    auto r2 = run_cli({"run", cfg, "--out", base2});
    CHECK(r2.exit_code == 0);
    CHECK(slurp(base2 + ".csv") == csv1);  // same seed, same bytes

    auto r3 = run_cli({"run", cfg, "--seed", "9", "--out", base2});
    CHECK(r3.exit_code == 0);
    auto summary9 = nlohmann::json::parse(slurp(base2 + ".summary.json"));
    CHECK(summary9.at("seed") == 9);

    for (const auto& p : {base1 + ".csv", base1 + ".summary.json", base2 + ".csv",
                          base2 + ".summary.json", cfg})
        std::remove(p.c_str());
}

TEST_CASE("run rejects broken configs with the right exit codes") {
    CHECK(run_cli({"run", "/nonexistent/cfg.json"}).exit_code == 3);

    std::string bad = write_temp("badcfg", R"({"scenario": "bandwidth_exhaustion", "oops": 1})");
    auto r = run_cli({"run", bad});
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("oops") != std::string::npos);
    std::remove(bad.c_str());

    std::string syntax = write_temp("syntax", "{");
    CHECK(run_cli({"run", syntax}).exit_code == 2);
    std::remove(syntax.c_str());
}

TEST_CASE("run drives the live client session end to end") {
    std::string cfg = write_temp("sess", R"({"scenario": "client_session", "duration_s": 4})");
    std::string base = "/tmp/mirage_cli_sess_" + std::to_string(::getpid());
    auto r = run_cli({"run", cfg, "--out", base});
    CHECK(r.exit_code == 0);
    auto summary = nlohmann::json::parse(slurp(base + ".summary.json"));
    CHECK(summary.at("summary").at("acquisitions_total").get<double>() >= 1.0);
    for (const auto& p : {base + ".csv", base + ".summary.json", cfg}) std::remove(p.c_str());
}

TEST_CASE("serve puzzle answers over TCP until terminated") {
    std::string state = "/tmp/mirage_cli_puzstate_" + std::to_string(::getpid());
    auto srv = spawn_serve({"serve", "puzzle", "--port", "0", "--difficulty", "2",
                            "--interval-s", "600", "--grace-s", "30",
                            "--addresses-per-interval", "8", "--batch-size", "16",
                            "--key", "000102030405060708090a0b0c0d0e0f",
                            "--state-log", state});
    uint16_t port = srv.wait_for_port();
    REQUIRE(port != 0);

    services::LineClient c("127.0.0.1", port);
    services::WireMessage q;
    q.type = services::MsgType::GetPuzzle;
    q.req_id = 1;
    auto reply = c.request(q, 5.0);
    REQUIRE(reply.type == services::MsgType::PuzzleMsg);
    auto pz = services::puzzle_from_json(reply.body.at("puzzle"));
    auto sol = puzzle::solve_puzzle(pz);
    CHECK(sol.has_value());

    CHECK(srv.terminate() == 0);
    auto log = nlohmann::json::parse(slurp(state));
    CHECK(log.at("served_total").get<uint64_t>() >= 1);
    CHECK(log.at("mode") == "selfservice");
    std::remove(state.c_str());
}

TEST_CASE("serve dns fails over and reports it in the state log") {
    std::string state = "/tmp/mirage_cli_dnsstate_" + std::to_string(::getpid());
    auto srv = spawn_serve({"serve", "dns", "--port", "0", "--victim-port", "9",
                            "--probe-period-s", "0.05", "--fail-threshold", "3",
                            "--ttl-s", "0.2", "--victim-record", "10.1.1.1",
                            "--puzzle-record", "10.2.2.2", "--state-log", state});
    uint16_t port = srv.wait_for_port();

    services::LineClient c("127.0.0.1", port);
    bool under_attack = false;
    for (int i = 0; i < 100 && !under_attack; ++i) {
        services::WireMessage q;
        q.type = services::MsgType::Resolve;
        q.req_id = static_cast<uint64_t>(i + 1);
        auto reply = c.request(q, 5.0);
        REQUIRE(reply.type == services::MsgType::ResolveReply);
        if (reply.body.at("mode") == "under_attack") {
            under_attack = true;
            CHECK(reply.body.at("address") == "10.2.2.2");
        }
        usleep(20000);
    }
    CHECK(under_attack);

    CHECK(srv.terminate() == 0);
    auto log = nlohmann::json::parse(slurp(state));
    CHECK(log.at("mode") == "under_attack");
    CHECK(log.at("probes_sent").get<uint64_t>() >= 3);
    std::remove(state.c_str());
}

TEST_CASE("serving on an occupied port exits with the environment code") {
    services::LineServer occupier(0);
    auto r = run_cli({"serve", "dns", "--port", std::to_string(occupier.port()),
                      "--victim-port", "9"});
    CHECK(r.exit_code == 3);
    CHECK(r.err.find("bind error") != std::string::npos);
}
