#include "gridse/case_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace gridse::grid {

using nlohmann::json;

namespace {

BusKind kind_from_string(const std::string& s) {
    if (s == "slack") return BusKind::Slack;
    if (s == "pv") return BusKind::Pv;
    if (s == "pq") return BusKind::Pq;
    throw Error("unknown bus kind '" + s + "'");
}

std::string kind_to_string(BusKind k) {
    switch (k) {
        case BusKind::Slack: return "slack";
        case BusKind::Pv: return "pv";
        case BusKind::Pq: return "pq";
    }
    throw Error("bad bus kind");
}

}  // namespace

NetworkCase parse_case_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("case JSON parse error: ") + e.what());
    }
    NetworkCase c;
    c.base_mva = j.at("base_mva").get<double>();
    for (const auto& jb : j.at("buses")) {
        Bus b;
        b.id = jb.at("id").get<int>();
        b.kind = kind_from_string(jb.at("kind").get<std::string>());
        b.p_load = jb.at("p_load").get<double>();
        b.q_load = jb.at("q_load").get<double>();
        b.gs = jb.value("gs", 0.0);
        b.bs = jb.value("bs", 0.0);
        b.base_kv = jb.at("base_kv").get<double>();
        b.vm_init = jb.value("vm", 1.0);
        b.va_init = deg2rad(jb.value("va", 0.0));
        b.v_setpoint = jb.value("v_set", 1.0);
        b.p_gen = jb.value("p_gen", 0.0);
        c.buses.push_back(b);
    }
    for (const auto& jb : j.at("branches")) {
        Branch br;
        br.from_bus = jb.at("from").get<int>();
        br.to_bus = jb.at("to").get<int>();
        br.r = jb.at("r").get<double>();
        br.x = jb.at("x").get<double>();
        br.b_charging = jb.value("b", 0.0);
        br.tap = jb.value("tap", 1.0);
        if (br.tap == 0.0) br.tap = 1.0;
        br.shift = deg2rad(jb.value("shift", 0.0));
        br.in_service = jb.value("status", 1) != 0;
        c.branches.push_back(br);
    }
    validate(c);
    return c;
}

std::string case_to_json(const NetworkCase& c) {
    json j;
    j["base_mva"] = c.base_mva;
    j["buses"] = json::array();
    for (const Bus& b : c.buses) {
        j["buses"].push_back({{"id", b.id},
                              {"kind", kind_to_string(b.kind)},
                              {"p_load", b.p_load},
                              {"q_load", b.q_load},
                              {"gs", b.gs},
                              {"bs", b.bs},
                              {"base_kv", b.base_kv},
                              {"vm", b.vm_init},
                              {"va", rad2deg(b.va_init)},
                              {"v_set", b.v_setpoint},
                              {"p_gen", b.p_gen}});
    }
    j["branches"] = json::array();
    for (const Branch& br : c.branches) {
        j["branches"].push_back({{"from", br.from_bus},
                                 {"to", br.to_bus},
                                 {"r", br.r},
                                 {"x", br.x},
                                 {"b", br.b_charging},
                                 {"tap", br.tap},
                                 {"shift", rad2deg(br.shift)},
                                 {"status", br.in_service ? 1 : 0}});
    }
    return j.dump(1);
}

namespace {

struct MatRow {
    int line = 0;
    std::vector<double> values;
};

// Extracts the numeric rows of an "mpc.<name> = [ ... ];" block, tracking
// source line numbers for error reports.
std::vector<MatRow> matpower_block(const std::string& text, const std::string& name) {
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    bool inside = false;
    bool done = false;
    std::vector<MatRow> rows;
    const std::string opener = "mpc." + name;
    while (!done && std::getline(is, line)) {
        ++lineno;
        if (const auto c = line.find('%'); c != std::string::npos) line.erase(c);
        if (!inside) {
            const auto p = line.find(opener);
            if (p == std::string::npos) continue;
            const auto eq = line.find('=', p);
            if (eq == std::string::npos) continue;
            const auto open = line.find('[', eq);
            if (open == std::string::npos) continue;
            inside = true;
            line.erase(0, open + 1);
        }
        if (const auto close = line.find(']'); close != std::string::npos) {
            line.erase(close);
            done = true;
        }
        // ';' terminates a matrix row; split in case several share a line
        std::string segment;
        std::istringstream segs(line);
        while (std::getline(segs, segment, ';')) {
            MatRow row{lineno, {}};
            std::string token;
            std::istringstream ls(segment);
            while (ls >> token) {
                std::size_t used = 0;
                double value = 0.0;
                try {
                    value = std::stod(token, &used);
                } catch (const std::exception&) {
                    throw Error("case line " + std::to_string(lineno) + ": malformed value '" + token + "'");
                }
                if (used != token.size())
                    throw Error("case line " + std::to_string(lineno) + ": malformed value '" + token + "'");
                row.values.push_back(value);
            }
            if (!row.values.empty()) rows.push_back(std::move(row));
        }
    }
    if (rows.empty()) throw Error("MATPOWER block mpc." + name + " not found or empty");
    return rows;
}

}  // namespace

NetworkCase parse_case_matpower(const std::string& text) {
    NetworkCase c;
    {
        const auto p = text.find("mpc.baseMVA");
        if (p == std::string::npos) throw Error("mpc.baseMVA not found");
        const auto eq = text.find('=', p);
        c.base_mva = std::stod(text.substr(eq + 1));
    }
    for (const MatRow& row : matpower_block(text, "bus")) {
        if (row.values.size() < 13)
            throw Error("case line " + std::to_string(row.line) + ": bus row needs 13 columns");
        const auto& v = row.values;
        Bus b;
        b.id = static_cast<int>(v[0]);
        const int type = static_cast<int>(v[1]);
        b.kind = type == 3 ? BusKind::Slack : (type == 2 ? BusKind::Pv : BusKind::Pq);
        b.p_load = v[2];
        b.q_load = v[3];
        b.gs = v[4];
        b.bs = v[5];
        b.vm_init = v[7];
        b.va_init = deg2rad(v[8]);
        b.base_kv = v[9];
        b.v_setpoint = v[7];  // refined from the gen table below
        c.buses.push_back(b);
    }
    std::map<int, int> index;
    for (int i = 0; i < c.n(); ++i) {
        if (!index.emplace(c.buses[i].id, i).second)
            throw Error("duplicate bus id " + std::to_string(c.buses[i].id));
    }
    for (const MatRow& row : matpower_block(text, "gen")) {
        if (row.values.size() < 10)
            throw Error("case line " + std::to_string(row.line) + ": gen row needs 10 columns");
        const auto& v = row.values;
        if (v[7] == 0.0) continue;  // out-of-service unit
        const auto it = index.find(static_cast<int>(v[0]));
        if (it == index.end())
            throw Error("case line " + std::to_string(row.line) + ": gen at unknown bus " +
                        std::to_string(static_cast<int>(v[0])));
        Bus& b = c.buses[it->second];
        b.p_gen += v[1];
        b.v_setpoint = v[5];
    }
    for (const MatRow& row : matpower_block(text, "branch")) {
        if (row.values.size() < 11)
            throw Error("case line " + std::to_string(row.line) + ": branch row needs 11 columns");
        const auto& v = row.values;
        Branch br;
        br.from_bus = static_cast<int>(v[0]);
        br.to_bus = static_cast<int>(v[1]);
        br.r = v[2];
        br.x = v[3];
        br.b_charging = v[4];
        br.tap = v[8] == 0.0 ? 1.0 : v[8];
        br.shift = deg2rad(v[9]);
        br.in_service = v[10] != 0.0;
        if (!index.count(br.from_bus))
            throw Error("case line " + std::to_string(row.line) + ": dangling endpoint, bus " +
                        std::to_string(br.from_bus));
        if (!index.count(br.to_bus))
            throw Error("case line " + std::to_string(row.line) + ": dangling endpoint, bus " +
                        std::to_string(br.to_bus));
        c.branches.push_back(br);
    }
    validate(c);
    return c;
}

NetworkCase parse_case(const std::string& text) {
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) continue;
        if (ch == '{') return parse_case_json(text);
        break;
    }
    return parse_case_matpower(text);
}

NetworkCase load_case(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open case file " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_case(ss.str());
}

}  // namespace gridse::grid
