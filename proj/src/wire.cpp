#include <array>

#include "mirage/services.hpp"

namespace mirage::services {

namespace {
const std::array<const char*, 8> kTypeNames = {
    "Resolve", "ResolveReply", "GetPuzzle", "PuzzleMsg", "SubmitSolution", "Grant", "Escalate", "Error"};
}

std::string msg_type_name(MsgType t) { return kTypeNames[static_cast<size_t>(t)]; }

MsgType msg_type_from_name(const std::string& s) {
    for (size_t i = 0; i < kTypeNames.size(); ++i)
        if (s == kTypeNames[i]) return static_cast<MsgType>(i);
    throw WireError("unknown message type: " + s);
}

std::string encode(const WireMessage& m) {
    nlohmann::json j;
    j["type"] = msg_type_name(m.type);
    j["req_id"] = m.req_id;
    j["version"] = m.version;
    j["body"] = m.body;
    return j.dump();
}

WireMessage decode(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw WireError("message is not a JSON object");
    WireMessage m;
    try {
        m.type = msg_type_from_name(j.at("type").get<std::string>());
        m.req_id = j.at("req_id").get<uint64_t>();
        m.version = j.at("version").get<int>();
        m.body = j.value("body", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw WireError(std::string("malformed message: ") + e.what());
    }
    if (m.version != kProtocolVersion)
        throw WireError("unsupported protocol version " + std::to_string(m.version));
    return m;
}

nlohmann::json puzzle_to_json(const puzzle::Puzzle& pz) {
    nlohmann::json j;
    j["prefix_bits"] = pz.prefix_bits;
    j["check_bits"] = pz.check_bits;
    j["difficulty"] = pz.difficulty;
    j["check_value"] = suffix_to_hex(pz.check_value, pz.check_bits);
    j["cipher"] = to_hex(pz.cipher);
    j["partial_key"] = to_hex(pz.partial_key);
    j["index"] = pz.index;
    j["interval"] = pz.interval;
    return j;
}

puzzle::Puzzle puzzle_from_json(const nlohmann::json& j) {
    puzzle::Puzzle pz;
    try {
        pz.prefix_bits = static_cast<uint8_t>(j.at("prefix_bits").get<int>());
        pz.check_bits = static_cast<uint8_t>(j.at("check_bits").get<int>());
        pz.difficulty = static_cast<uint8_t>(j.at("difficulty").get<int>());
        u128 check;
        if (!parse_hex_u128(j.at("check_value").get<std::string>(), check))
            throw WireError("bad check_value hex");
        pz.check_value = check;
        if (!parse_hex_block(j.at("cipher").get<std::string>(), pz.cipher))
            throw WireError("bad cipher hex");
        if (!parse_hex_block(j.at("partial_key").get<std::string>(), pz.partial_key))
            throw WireError("bad partial_key hex");
        pz.index = j.at("index").get<uint64_t>();
        pz.interval = j.at("interval").get<uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw WireError(std::string("malformed puzzle: ") + e.what());
    }
    return pz;
}

}  // namespace mirage::services
