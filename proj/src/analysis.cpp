#include "mirage/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mirage::analysis {

double scan_fraction(double bots, double probe_rate_bps, double probe_size_bits,
                     double interval_seconds, int suffix_bits) {
    if (bots < 0 || probe_rate_bps < 0) throw std::domain_error("bots and probe rate must be nonnegative");
    if (probe_size_bits <= 0) throw std::domain_error("probe size must be positive");
    if (interval_seconds <= 0) throw std::domain_error("interval must be positive");
    if (suffix_bits < 1 || suffix_bits > 120) throw std::domain_error("suffix_bits must be in [1, 120]");
    double probes_per_bot = std::floor(probe_rate_bps * interval_seconds / probe_size_bits);
    double space = std::exp2(suffix_bits);
    return std::min(1.0, bots * probes_per_bot / space);
}

double brute_force_success(double active_entries, int suffix_bits) {
    if (active_entries < 0) throw std::domain_error("active_entries must be nonnegative");
    if (suffix_bits < 1 || suffix_bits > 120) throw std::domain_error("suffix_bits must be in [1, 120]");
    return std::min(1.0, active_entries / std::exp2(suffix_bits));
}

FairShare fair_share(double honest_compute, double attacker_compute, double compromised_fraction) {
    if (honest_compute < 0 || attacker_compute < 0)
        throw std::domain_error("compute rates must be nonnegative");
    if (honest_compute + attacker_compute <= 0)
        throw std::domain_error("total compute must be positive");
    if (compromised_fraction < 0 || compromised_fraction > 1)
        throw std::domain_error("compromised_fraction must be in [0, 1]");
    double total = honest_compute + attacker_compute;
    FairShare out;
    out.honest = honest_compute * (1.0 - compromised_fraction) / total;
    out.attacker = (attacker_compute + compromised_fraction * honest_compute) / total;
    return out;
}

double expected_attempts(int difficulty) {
    if (difficulty < 0 || difficulty > 30) throw std::domain_error("difficulty must be in [0, 30]");
    return (std::exp2(difficulty) + 1.0) / 2.0;
}

static double gb_per_hour(double bps) { return bps * 3600.0 / 8e9; }

CostPoint attack_cost(const CostModel& m, double x) {
    if (!(x >= 0) || x >= 1) throw std::domain_error("attacker share x must be in [0, 1)");
    if (m.legit_load_bps < 0 || m.victim_capacity_bps < 0 || m.honest_compute_units < 0 ||
        m.price_compute_per_unit_hr < 0 || m.price_transfer_per_gb < 0)
        throw std::domain_error("cost model parameters must be nonnegative");
    CostPoint p;
    p.attacker_share = x;
    double ratio = x / (1.0 - x);
    // Undefended: buy enough transfer to claim share x of the pipe.
    p.without_defense_per_hr = m.price_transfer_per_gb * gb_per_hour(ratio * m.legit_load_bps);
    // Defended: out-compute the whole honest client population and still pay
    // transfer for the captured share.
    p.with_defense_per_hr = m.price_compute_per_unit_hr * ratio * m.honest_compute_units +
                            m.price_transfer_per_gb * gb_per_hour(x * m.victim_capacity_bps);
    return p;
}

std::vector<CostPoint> attack_cost_grid(const CostModel& m, const std::vector<double>& xs) {
    std::vector<CostPoint> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back(attack_cost(m, x));
    return out;
}

size_t TopologyMap::link_index(const std::string& id) const {
    for (size_t i = 0; i < links.size(); ++i)
        if (links[i].id == id) return i;
    throw std::out_of_range("unknown link id: " + id);
}

namespace {

struct RawEstimate {
    std::optional<double> capacity;
    std::optional<double> avail;
};

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == '\t') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::optional<double> parse_bw(const std::string& s, const char* what, size_t lineno) {
    if (s == "NA") return std::nullopt;
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size() || v < 0 || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(lineno) + ": bad " + what + " value '" + s + "'");
    }
}

}  // namespace

TopologyMap ingest_topology(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty topology input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "#mirage-topo v1") throw ParseError("missing '#mirage-topo v1' header");

    struct LinkAgg {
        std::vector<double> valid_caps;
        int hop_distance = 0;
        uint32_t as_number = 0;
        std::set<std::string> paths;
    };
    std::map<std::string, LinkAgg> agg;                       // link id -> data
    std::map<std::string, std::map<int, std::string>> paths;  // path id -> hop -> link

    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto cols = split_tabs(line);
        if (cols.size() != 6)
            throw ParseError("line " + std::to_string(lineno) + ": expected 6 tab-separated columns");
        const std::string& path_id = cols[0];
        int hop;
        uint32_t asn;
        try {
            hop = std::stoi(cols[1]);
            long asl = std::stol(cols[5]);
            if (asl < 0) throw std::invalid_argument(cols[5]);
            asn = static_cast<uint32_t>(asl);
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(lineno) + ": bad hop_index or as_number");
        }
        if (hop < 1) throw ParseError("line " + std::to_string(lineno) + ": hop_index must be >= 1");
        const std::string& link_id = cols[2];
        auto capacity = parse_bw(cols[3], "capacity", lineno);
        auto avail = parse_bw(cols[4], "avail_bw", lineno);

        auto [it, fresh] = agg.try_emplace(link_id);
        LinkAgg& la = it->second;
        if (fresh) {
            la.hop_distance = hop;
            la.as_number = asn;
        } else if (la.hop_distance != hop || la.as_number != asn) {
            throw ParseError("line " + std::to_string(lineno) + ": link '" + link_id +
                             "' reappears with different hop_index or as_number");
        }
        la.paths.insert(path_id);
        // Capacity below measured available bandwidth is impossible, so the
        // estimate is discarded as a measurement error.
        if (capacity && !(avail && *capacity < *avail)) la.valid_caps.push_back(*capacity);

        auto [pit, _] = paths.try_emplace(path_id);
        auto [hit, hop_fresh] = pit->second.try_emplace(hop, link_id);
        if (!hop_fresh && hit->second != link_id)
            throw ParseError("line " + std::to_string(lineno) + ": path '" + path_id +
                             "' has two links at hop " + std::to_string(hop));
    }
    if (paths.empty()) throw ParseError("topology has no paths");

    TopologyMap map;
    std::map<std::string, size_t> index_of;
    for (auto& [id, la] : agg) {
        LinkStat ls;
        ls.id = id;
        ls.hop_distance = la.hop_distance;
        ls.as_number = la.as_number;
        if (!la.valid_caps.empty()) {
            std::sort(la.valid_caps.begin(), la.valid_caps.end());
            size_t n = la.valid_caps.size();
            ls.capacity_bps = (n % 2) ? la.valid_caps[n / 2]
                                      : 0.5 * (la.valid_caps[n / 2 - 1] + la.valid_caps[n / 2]);
        }
        index_of[id] = map.links.size();
        map.links.push_back(std::move(ls));
    }
    for (auto& [pid, hops] : paths) {
        std::vector<size_t> path;
        int expect = 1;
        for (auto& [hop, link_id] : hops) {
            if (hop != expect)
                throw ParseError("path '" + pid + "' is missing hop " + std::to_string(expect));
            ++expect;
            path.push_back(index_of.at(link_id));
        }
        map.paths.push_back(std::move(path));
    }
    for (auto& ls : map.links) ls.path_fraction = 0;
    for (const auto& path : map.paths)
        for (size_t li : path) map.links[li].path_fraction += 1.0 / static_cast<double>(map.paths.size());
    return map;
}

TopologyMap load_topology(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open topology file: " + path);
    return ingest_topology(f);
}

PushbackReport compute_pushback(const TopologyMap& map, double total_attack_bps) {
    if (total_attack_bps < 0) throw std::domain_error("attack volume must be nonnegative");
    if (map.paths.empty()) throw std::domain_error("topology has no paths");

    size_t n_paths = map.paths.size();
    double path_share = total_attack_bps / static_cast<double>(n_paths);

    std::vector<double> load(map.links.size(), 0);
    for (const auto& path : map.paths)
        for (size_t li : path) load[li] += path_share;

    std::vector<bool> congested(map.links.size(), false);
    for (size_t i = 0; i < map.links.size(); ++i)
        congested[i] = map.links[i].capacity_bps && load[i] > *map.links[i].capacity_bps;

    PushbackReport rep;
    double hop_sum = 0, as_sum = 0;
    std::map<std::string, PushbackLink> chosen;
    double w = 1.0 / static_cast<double>(n_paths);
    for (const auto& path : map.paths) {
        // Farthest congested link on this path; its position in the vector is
        // hop distance - 1.
        std::optional<size_t> filter_pos;
        for (size_t pos = 0; pos < path.size(); ++pos)
            if (congested[path[pos]]) filter_pos = pos;
        if (!filter_pos) continue;  // clean path, contributes distance 0

        size_t li = path[*filter_pos];
        int router_hops = map.links[li].hop_distance;
        std::set<uint32_t> distinct_as;
        for (size_t pos = 0; pos <= *filter_pos; ++pos)
            distinct_as.insert(map.links[path[pos]].as_number);
        int as_hops = static_cast<int>(distinct_as.size());

        hop_sum += w * router_hops;
        as_sum += w * as_hops;
        rep.pushed_back_fraction += w;

        auto [it, fresh] = chosen.try_emplace(map.links[li].id,
                                              PushbackLink{map.links[li].id, router_hops, as_hops, 0});
        it->second.weight += w;
        (void)fresh;
    }
    rep.mean_router_hops = hop_sum;  // clean paths already count as zero
    rep.mean_as_hops = as_sum;
    for (auto& [id, pl] : chosen) rep.links.push_back(pl);
    for (size_t i = 0; i < map.links.size(); ++i)
        rep.link_loads.emplace_back(map.links[i].id, load[i]);
    std::sort(rep.link_loads.begin(), rep.link_loads.end());
    return rep;
}

}  // namespace mirage::analysis
