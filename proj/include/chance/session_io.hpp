#pragma once

// JSON document for one elicitation session: configuration, answer log and
// the last computed estimates. Loading rebuilds the session by replaying the
// log, so a document is always consistent with the engine that reads it.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chance/elicitation.hpp"

namespace chance {

inline constexpr int kSessionSchemaVersion = 1;

class SchemaVersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DocumentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline nlohmann::json to_json(const UtilityPoint& p) {
  return {{"c", p.c},
          {"u", p.u},
          {"omega", p.omega.value()},
          {"disposition", std::string(to_string(p.disposition))},
          {"method", std::string(to_string(p.method))},
          {"basis", std::string(to_string(p.basis))},
          {"at_bound", p.at_bound}};
}

inline UtilityPoint utility_point_from_json(const nlohmann::json& j) {
  UtilityPoint p;
  p.c = j.at("c").get<double>();
  p.u = j.at("u").get<double>();
  p.omega = Offset(j.at("omega").get<double>());
  p.disposition = parse_disposition(j.at("disposition").get<std::string>());
  p.method = parse_method(j.at("method").get<std::string>());
  p.basis = parse_gamble_kind(j.value("basis", std::string("end_point")));
  p.at_bound = j.value("at_bound", false);
  return p;
}

inline nlohmann::json to_json(const std::vector<UtilityPoint>& pts) {
  auto arr = nlohmann::json::array();
  for (const auto& p : pts) arr.push_back(to_json(p));
  return arr;
}

inline nlohmann::json to_json(const GambleSpec& g) {
  return {{"id", g.id},
          {"kind", std::string(to_string(g.kind))},
          {"c", g.c},
          {"p", g.p},
          {"prize_lo", g.prize_lo},
          {"prize_hi", g.prize_hi}};
}

inline nlohmann::json to_json(const EstimationConfig& e) {
  return {{"method", std::string(to_string(e.method))},
          {"prior_alpha", {{"shape", e.prior_alpha.shape}, {"rate", e.prior_alpha.rate}}},
          {"prior_beta", {{"shape", e.prior_beta.shape}, {"rate", e.prior_beta.rate}}},
          {"box", {{"alpha", {e.box.alpha_lo, e.box.alpha_hi}}, {"beta", {e.box.beta_lo, e.box.beta_hi}}}},
          {"grid",
           {{"alpha", {e.grid.alpha_min, e.grid.alpha_max}},
            {"beta", {e.grid.beta_min, e.grid.beta_max}},
            {"nodes", {e.grid.alpha_nodes, e.grid.beta_nodes}}}}};
}

inline EstimationConfig estimation_config_from_json(const nlohmann::json& j) {
  EstimationConfig e;
  e.method = parse_method(j.at("method").get<std::string>());
  const auto& pa = j.at("prior_alpha");
  const auto& pb = j.at("prior_beta");
  e.prior_alpha = GammaPrior(pa.at("shape").get<double>(), pa.at("rate").get<double>());
  e.prior_beta = GammaPrior(pb.at("shape").get<double>(), pb.at("rate").get<double>());
  const auto& box = j.at("box");
  e.box = {box.at("alpha").at(0).get<double>(), box.at("alpha").at(1).get<double>(), box.at("beta").at(0).get<double>(),
           box.at("beta").at(1).get<double>()};
  e.box.validate();
  const auto& g = j.at("grid");
  e.grid = {g.at("alpha").at(0).get<double>(), g.at("alpha").at(1).get<double>(), g.at("beta").at(0).get<double>(),
            g.at("beta").at(1).get<double>(),  g.at("nodes").at(0).get<std::size_t>(), g.at("nodes").at(1).get<std::size_t>()};
  return e;
}

inline nlohmann::json to_json(const SessionUtilities& u) {
  return {{"end_point", to_json(u.end_point)}, {"adjacent", to_json(u.adjacent)}};
}

inline SessionUtilities session_utilities_from_json(const nlohmann::json& j) {
  SessionUtilities u;
  for (const auto& p : j.at("end_point")) u.end_point.push_back(utility_point_from_json(p));
  for (const auto& p : j.at("adjacent")) u.adjacent.push_back(utility_point_from_json(p));
  return u;
}

inline nlohmann::json config_to_json(const SessionConfig& cfg) {
  return {{"id", cfg.id},
          {"mode", std::string(to_string(cfg.mode))},
          {"seed", cfg.seed},
          {"c_grid", cfg.c_grid},
          {"p_grids", {{"end_point", cfg.end_point_p}, {"adjacent", cfg.adjacent_p}}},
          {"bootstrap", to_json(cfg.bootstrap)}};
}

inline SessionConfig config_from_json(const nlohmann::json& j) {
  SessionConfig cfg;
  cfg.id = j.at("id").get<std::string>();
  cfg.mode = parse_session_mode(j.at("mode").get<std::string>());
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.c_grid = j.at("c_grid").get<std::vector<double>>();
  cfg.end_point_p = j.at("p_grids").at("end_point").get<std::vector<std::vector<double>>>();
  cfg.adjacent_p = j.at("p_grids").value("adjacent", std::vector<std::vector<double>>{});
  cfg.bootstrap = estimation_config_from_json(j.at("bootstrap"));
  return cfg;
}

inline nlohmann::json to_json(const Session& s) {
  nlohmann::json doc = config_to_json(s.config());
  doc["schema_version"] = kSessionSchemaVersion;
  auto answers = nlohmann::json::array();
  for (const auto& a : s.answered()) {
    auto j = to_json(a.gamble);
    j["y"] = a.y;
    j["timestamp_ms"] = a.timestamp_ms;
    answers.push_back(std::move(j));
  }
  doc["answers"] = std::move(answers);
  if (const auto& e = s.estimates()) {
    doc["estimates"] = {{"method", std::string(to_string(e->method))},
                        {"isotonic", e->isotonic},
                        {"utilities", to_json(e->utilities)}};
  } else {
    doc["estimates"] = nullptr;
  }
  return doc;
}

inline Session session_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw DocumentError("session document is not an object");
  if (!doc.contains("schema_version")) throw SchemaVersionError("session document has no schema_version");
  const auto& v = doc.at("schema_version");
  if (!v.is_number_integer() || v.get<int>() != kSessionSchemaVersion)
    throw SchemaVersionError("unsupported session schema_version " + v.dump() + " (expected " +
                             std::to_string(kSessionSchemaVersion) + ")");
  try {
    const auto cfg = config_from_json(doc);
    std::vector<AnsweredGamble> log;
    for (const auto& a : doc.at("answers")) {
      AnsweredGamble ag;
      ag.gamble.id = a.at("id").get<std::string>();
      ag.gamble.kind = parse_gamble_kind(a.at("kind").get<std::string>());
      ag.gamble.c = a.at("c").get<double>();
      ag.gamble.p = a.at("p").get<double>();
      ag.gamble.prize_lo = a.at("prize_lo").get<double>();
      ag.gamble.prize_hi = a.at("prize_hi").get<double>();
      ag.y = a.at("y").get<int>();
      ag.timestamp_ms = a.at("timestamp_ms").get<std::int64_t>();
      log.push_back(std::move(ag));
    }
    Session s = replay(cfg, log);
    if (doc.contains("estimates") && !doc.at("estimates").is_null()) {
      const auto& e = doc.at("estimates");
      s.set_estimates({parse_method(e.at("method").get<std::string>()), e.at("isotonic").get<bool>(),
                       session_utilities_from_json(e.at("utilities"))});
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DocumentError(std::string("malformed session document: ") + e.what());
  }
}

inline Session load_session(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DocumentError("cannot open session file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DocumentError("cannot parse session file " + path.string() + ": " + e.what());
  }
  return session_from_json(doc);
}

// Write to a sibling temporary file, then rename over the target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void save_session(const std::filesystem::path& path, const Session& s) {
  write_file_atomic(path, to_json(s).dump(2) + "\n");
}

}  // namespace chance
