#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "failsafe/rollout.hpp"
#include "failsafe/scenario.hpp"

namespace failsafe {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigurationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kScenarioSchemaVersion = 1;

namespace io_detail {

using nlohmann::json;

inline json vec2_to_json(const Vec2& v) { return json::array({v.x, v.y}); }
inline Vec2 vec2_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

inline json box_to_json(const Box2& b) {
    return {{"x", json::array({b.x.lo, b.x.hi})}, {"y", json::array({b.y.lo, b.y.hi})}};
}

inline Box2 box_from_json(const json& j) {
    return {Interval{j.at("x").at(0).get<double>(), j.at("x").at(1).get<double>()},
            Interval{j.at("y").at(0).get<double>(), j.at("y").at(1).get<double>()}};
}

inline json bounds_to_json(const MotionBounds& b) {
    return {{"aMaxLong", b.aMaxLong},
            {"aMaxLat", b.aMaxLat},
            {"vMaxLong", b.vMaxLong},
            {"vMinLong", b.vMinLong},
            {"vMaxLat", b.vMaxLat}};
}

inline MotionBounds bounds_from_json(const json& j) {
    return {j.at("aMaxLong").get<double>(), j.at("aMaxLat").get<double>(),
            j.at("vMaxLong").get<double>(), j.at("vMinLong").get<double>(),
            j.at("vMaxLat").get<double>()};
}

}  // namespace io_detail

inline nlohmann::json to_json(const ReplayScenario& rs) {
    using nlohmann::json;
    using namespace io_detail;
    const Scenario& sc = rs.scenario;
    json j;
    j["schemaVersion"] = kScenarioSchemaVersion;
    j["road"] = {{"yMin", sc.road.yMin}, {"yMax", sc.road.yMax}, {"laneWidth", sc.road.laneWidth}};
    j["dt"] = sc.dt;
    j["horizon"] = sc.horizon;
    j["drivingDirection"] = sc.direction == DrivingDirection::PlusX ? "+x" : "-x";
    j["actionBox"] = box_to_json(sc.actionBox);
    j["ego"] = {{"px", sc.ego.px},       {"py", sc.ego.py},
                {"vx", sc.ego.vx},       {"vy", sc.ego.vy},
                {"halfLen", sc.ego.halfLen}, {"halfWid", sc.ego.halfWid},
                {"limits",
                 {{"aMaxLong", sc.egoLimits.aMaxLong}, {"aMaxLat", sc.egoLimits.aMaxLat}}}};
    j["others"] = json::array();
    for (size_t i = 0; i < sc.others.size(); ++i) {
        const AgentState& o = sc.others[i];
        json a = {{"px", o.px},           {"py", o.py},
                  {"vx", o.vx},           {"vy", o.vy},
                  {"halfLen", o.halfLen}, {"halfWid", o.halfWid},
                  {"bounds", bounds_to_json(o.bounds)}};
        if (i < rs.tracks.size() && !rs.tracks[i].pos.empty()) {
            json pos = json::array(), vel = json::array();
            for (const Vec2& p : rs.tracks[i].pos) pos.push_back(vec2_to_json(p));
            for (const Vec2& v : rs.tracks[i].vel) vel.push_back(vec2_to_json(v));
            a["track"] = {{"pos", pos}, {"vel", vel}};
        }
        j["others"].push_back(a);
    }
    if (!rs.egoReference.empty()) {
        json ref = json::array();
        for (const Vec2& p : rs.egoReference) ref.push_back(io_detail::vec2_to_json(p));
        j["egoReference"] = ref;
    }
    return j;
}

inline ReplayScenario scenario_from_json(const nlohmann::json& j) {
    using namespace io_detail;
    try {
        int version = j.at("schemaVersion").get<int>();
        if (version != kScenarioSchemaVersion) {
            throw ParseError("scenario: unsupported schemaVersion " + std::to_string(version));
        }
        ReplayScenario rs;
        Scenario& sc = rs.scenario;
        sc.road = {j.at("road").at("yMin").get<double>(), j.at("road").at("yMax").get<double>(),
                   j.at("road").at("laneWidth").get<double>()};
        sc.dt = j.at("dt").get<double>();
        sc.horizon = j.at("horizon").get<int>();
        std::string dir = j.at("drivingDirection").get<std::string>();
        if (dir == "+x") {
            sc.direction = DrivingDirection::PlusX;
        } else if (dir == "-x") {
            sc.direction = DrivingDirection::MinusX;
        } else {
            throw ParseError("scenario: drivingDirection must be \"+x\" or \"-x\"");
        }
        sc.actionBox = box_from_json(j.at("actionBox"));
        const auto& e = j.at("ego");
        sc.ego = {e.at("px").get<double>(),      e.at("py").get<double>(),
                  e.at("vx").get<double>(),      e.at("vy").get<double>(),
                  e.at("halfLen").get<double>(), e.at("halfWid").get<double>()};
        sc.egoLimits = {e.at("limits").at("aMaxLong").get<double>(),
                        e.at("limits").at("aMaxLat").get<double>()};
        for (const auto& a : j.at("others")) {
            AgentState o{a.at("px").get<double>(),      a.at("py").get<double>(),
                         a.at("vx").get<double>(),      a.at("vy").get<double>(),
                         a.at("halfLen").get<double>(), a.at("halfWid").get<double>(),
                         bounds_from_json(a.at("bounds"))};
            sc.others.push_back(o);
            AgentTrack track;
            if (a.contains("track")) {
                for (const auto& p : a.at("track").at("pos")) track.pos.push_back(vec2_from_json(p));
                for (const auto& v : a.at("track").at("vel")) track.vel.push_back(vec2_from_json(v));
                if (track.pos.size() != track.vel.size()) {
                    throw ParseError("scenario: track pos/vel length mismatch");
                }
            }
            rs.tracks.push_back(std::move(track));
        }
        if (j.contains("egoReference")) {
            for (const auto& p : j.at("egoReference")) {
                rs.egoReference.push_back(vec2_from_json(p));
            }
        }
        validate(sc);
        return rs;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("scenario: malformed JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }
}

inline ReplayScenario load_scenario_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return scenario_from_json(j);
}

inline void save_scenario_json(const ReplayScenario& rs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write scenario file: " + path);
    out << to_json(rs).dump(2) << "\n";
}

/// Sidecar configuration for CSV ingestion: frame rate, which track is the
/// ego, and the defaults the CSV itself does not carry.
struct CsvConfig {
    double frameRate{25.0};
    long egoId{0};
    MotionBounds defaultBounds;
    EgoLimits egoLimits;
    RoadBounds road;
    Box2 actionBox;
    DrivingDirection direction{DrivingDirection::PlusX};
};

inline CsvConfig load_csv_config(const std::string& path) {
    using namespace io_detail;
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
        CsvConfig cfg;
        cfg.frameRate = j.at("frameRate").get<double>();
        cfg.egoId = j.at("egoId").get<long>();
        cfg.defaultBounds = bounds_from_json(j.at("defaultBounds"));
        cfg.egoLimits = {j.at("egoLimits").at("aMaxLong").get<double>(),
                         j.at("egoLimits").at("aMaxLat").get<double>()};
        cfg.road = {j.at("road").at("yMin").get<double>(), j.at("road").at("yMax").get<double>(),
                    j.at("road").at("laneWidth").get<double>()};
        cfg.actionBox = box_from_json(j.at("actionBox"));
        std::string dir = j.value("drivingDirection", "+x");
        cfg.direction = dir == "-x" ? DrivingDirection::MinusX : DrivingDirection::PlusX;
        if (cfg.frameRate <= 0.0) throw ParseError("config: frameRate must be positive");
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

namespace io_detail {

struct CsvRow {
    long frame{0};
    long id{0};
    double x{0}, y{0}, width{0}, height{0}, xVelocity{0}, yVelocity{0};
    int line{0};
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        size_t a = field.find_first_not_of(" \t\r");
        size_t b = field.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
    }
    return out;
}

}  // namespace io_detail

/// Ingests a highD-style CSV (columns frame, id, x, y, width, height,
/// xVelocity, yVelocity; x/y the vehicle center) into one replay scenario.
/// The ego track is selected by the configured id; every other id becomes an
/// agent with the configured default motion bounds.
inline std::vector<ReplayScenario> ingest_csv(const std::string& path, const CsvConfig& cfg) {
    using io_detail::CsvRow;
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open CSV file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    auto header = io_detail::split_csv_line(line);
    const std::vector<std::string> required = {"frame", "id",     "x",         "y",
                                               "width", "height", "xVelocity", "yVelocity"};
    std::map<std::string, size_t> col;
    for (size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const auto& name : required) {
        if (!col.count(name)) throw ParseError(path + ": missing column '" + name + "'");
    }

    std::map<long, std::vector<CsvRow>> tracks;
    int lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fields = io_detail::split_csv_line(line);
        if (fields.size() < header.size()) {
            throw ParseError(path + ":" + std::to_string(lineNo) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        }
        CsvRow row;
        row.line = lineNo;
        try {
            row.frame = std::stol(fields[col["frame"]]);
            row.id = std::stol(fields[col["id"]]);
            row.x = std::stod(fields[col["x"]]);
            row.y = std::stod(fields[col["y"]]);
            row.width = std::stod(fields[col["width"]]);
            row.height = std::stod(fields[col["height"]]);
            row.xVelocity = std::stod(fields[col["xVelocity"]]);
            row.yVelocity = std::stod(fields[col["yVelocity"]]);
        } catch (const std::exception&) {
            throw ParseError(path + ":" + std::to_string(lineNo) + ": non-numeric field");
        }
        auto& track = tracks[row.id];
        if (!track.empty() && row.frame <= track.back().frame) {
            throw ParseError(path + ":" + std::to_string(lineNo) + ": non-monotone frames for id " +
                             std::to_string(row.id));
        }
        if (!track.empty() && row.frame != track.back().frame + 1) {
            throw ParseError(path + ":" + std::to_string(lineNo) + ": gap in frames for id " +
                             std::to_string(row.id));
        }
        track.push_back(row);
    }
    if (tracks.empty()) throw ParseError(path + ": no data rows");
    auto egoIt = tracks.find(cfg.egoId);
    if (egoIt == tracks.end()) {
        throw ConfigurationError(path + ": ego id " + std::to_string(cfg.egoId) +
                                 " not present in the recording");
    }
    const auto& egoRows = egoIt->second;
    if (egoRows.size() < 2) throw ParseError(path + ": ego track needs at least 2 frames");

    double dt = 1.0 / cfg.frameRate;
    long f0 = egoRows.front().frame;
    int horizon = static_cast<int>(egoRows.size()) - 1;

    ReplayScenario rs;
    Scenario& sc = rs.scenario;
    sc.road = cfg.road;
    sc.dt = dt;
    sc.horizon = horizon;
    sc.actionBox = cfg.actionBox;
    sc.direction = cfg.direction;
    sc.egoLimits = cfg.egoLimits;
    sc.ego = {egoRows.front().x,           egoRows.front().y,
              egoRows.front().xVelocity,   egoRows.front().yVelocity,
              0.5 * egoRows.front().width, 0.5 * egoRows.front().height};
    for (const CsvRow& r : egoRows) rs.egoReference.push_back({r.x, r.y});

    for (const auto& [id, rows] : tracks) {
        if (id == cfg.egoId) continue;
        AgentTrack track;
        for (long f = f0; f <= f0 + horizon; ++f) {
            long first = rows.front().frame, last = rows.back().frame;
            const CsvRow* r;
            double extA = 0.0;
            if (f < first) {
                r = &rows.front();
                extA = static_cast<double>(f - first);
            } else if (f > last) {
                r = &rows.back();
                extA = static_cast<double>(f - last);
            } else {
                r = &rows[static_cast<size_t>(f - first)];
            }
            track.pos.push_back({r->x + r->xVelocity * dt * extA, r->y + r->yVelocity * dt * extA});
            track.vel.push_back({r->xVelocity, r->yVelocity});
        }
        AgentState agent{track.pos.front().x,     track.pos.front().y,
                         track.vel.front().x,     track.vel.front().y,
                         0.5 * rows.front().width, 0.5 * rows.front().height,
                         cfg.defaultBounds};
        sc.others.push_back(agent);
        rs.tracks.push_back(std::move(track));
    }

    validate(sc);
    return {rs};
}

}  // namespace failsafe
