#pragma once

// HTTP facade over elicitation sessions.
//
//   POST /sessions                       create (idempotent on client_token)
//   GET  /sessions/{id}                  export the session document
//   GET  /sessions/{id}/next             next gamble, or completion + curve
//   POST /sessions/{id}/answers          {"gamble_id": "...", "y": 0|1}
//   GET  /sessions/{id}/utility          ?method=mle|bayes[&isotonic=1]
//   GET  /sessions/{id}/answers.csv      end-point answers as c,p,y
//
// Bodies are JSON. Errors are {"error": message, "code": token} with 404 for
// unknown sessions or gambles, 409 for replayed answers or answers after
// completion, and 422 for requests that fail validation.

// The chance headers come first: httplib pulls in <resolv.h>, whose `_res`
// macro breaks Eigen if Eigen is parsed afterwards.
#include "chance/delimited.hpp"
#include "chance/elicitation.hpp"
#include "chance/session_io.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>

namespace chance::service {

using nlohmann::json;

struct Response {
  int status = 200;
  json body;
  std::string content_type = "application/json";
  std::string text;  // used instead of body when content_type is not JSON
};

class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Directory-backed sessions, one <id>.json per session. Mutations on one
// session are serialized and persisted (temp file + rename) before the new
// state becomes visible; readers take an immutable snapshot.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  const std::filesystem::path& directory() const { return dir_; }

  bool exists(const std::string& id) {
    return cached(id) != nullptr || (valid_id(id) && std::filesystem::exists(path_for(id)));
  }

  std::shared_ptr<const Session> get(const std::string& id) {
    auto e = entry(id);
    std::lock_guard lk(e->snap_mu);
    return e->snapshot;
  }

  // Stores a new session unless one with this id exists; returns the stored one
  // and whether it was created.
  std::pair<std::shared_ptr<const Session>, bool> create(Session s) {
    const std::string id = s.id();
    if (!valid_id(id)) throw std::invalid_argument("invalid session id");
    std::lock_guard lk(map_mu_);
    if (auto it = entries_.find(id); it != entries_.end()) return {it->second->snapshot, false};
    if (std::filesystem::exists(path_for(id))) {
      auto e = std::make_shared<Entry>();
      e->snapshot = std::make_shared<const Session>(load_session(path_for(id)));
      entries_[id] = e;
      return {e->snapshot, false};
    }
    save_session(path_for(id), s);
    auto e = std::make_shared<Entry>();
    e->snapshot = std::make_shared<const Session>(std::move(s));
    entries_[id] = e;
    return {e->snapshot, true};
  }

  // Applies fn to a copy of the session, persists it, then publishes it.
  template <typename Fn>
  std::shared_ptr<const Session> mutate(const std::string& id, Fn&& fn) {
    auto e = entry(id);
    std::lock_guard write(e->write_mu);
    std::shared_ptr<const Session> current;
    {
      std::lock_guard lk(e->snap_mu);
      current = e->snapshot;
    }
    auto next = std::make_shared<Session>(*current);
    fn(*next);
    save_session(path_for(id), *next);
    std::shared_ptr<const Session> published = std::move(next);
    std::lock_guard lk(e->snap_mu);
    e->snapshot = published;
    return published;
  }

 private:
  struct Entry {
    std::mutex write_mu;
    std::mutex snap_mu;
    std::shared_ptr<const Session> snapshot;
  };

  static bool valid_id(const std::string& id) {
    if (id.empty() || id.size() > 128) return false;
    for (char ch : id)
      if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_')) return false;
    return true;
  }

  std::filesystem::path path_for(const std::string& id) const { return dir_ / (id + ".json"); }

  std::shared_ptr<Entry> cached(const std::string& id) {
    std::lock_guard lk(map_mu_);
    auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : it->second;
  }

  std::shared_ptr<Entry> entry(const std::string& id) {
    if (auto e = cached(id)) return e;
    if (!valid_id(id) || !std::filesystem::exists(path_for(id))) throw NotFound("unknown session: " + id);
    auto loaded = std::make_shared<const Session>(load_session(path_for(id)));
    std::lock_guard lk(map_mu_);
    auto& slot = entries_[id];
    if (!slot) {
      slot = std::make_shared<Entry>();
      slot->snapshot = std::move(loaded);
    }
    return slot;
  }

  std::filesystem::path dir_;
  std::mutex map_mu_;
  std::map<std::string, std::shared_ptr<Entry>> entries_;
};

namespace detail {

inline Response error(int status, const std::string& code, const std::string& msg) {
  return {status, {{"error", msg}, {"code", code}}};
}

inline json progress(const Session& s) { return {{"answered", s.answered_count()}, {"total", s.total()}}; }

inline std::vector<std::vector<double>> grids_from_json(const json& j, std::size_t n) {
  if (j.is_array() && !j.empty() && j.front().is_array()) return j.get<std::vector<std::vector<double>>>();
  return broadcast(n, j.get<std::vector<double>>());
}

// FNV-1a of the client token; keeps ids filesystem-safe and reproducible.
inline std::string token_id(const std::string& token) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : token) h = (h ^ ch) * 1099511628211ull;
  std::ostringstream os;
  os << "t-" << std::hex << h;
  return os.str();
}

inline std::string random_id() {
  std::random_device rd;
  std::ostringstream os;
  os << "s-" << std::hex << ((static_cast<std::uint64_t>(rd()) << 32) | rd());
  return os.str();
}

}  // namespace detail

class Service {
 public:
  explicit Service(std::filesystem::path storage) : store_(std::move(storage)) {}

  SessionStore& store() { return store_; }

  Response create(const std::string& body) {
    json req;
    try {
      req = json::parse(body);
    } catch (const json::parse_error&) {
      return detail::error(422, "invalid_json", "request body is not valid JSON");
    }
    SessionConfig cfg;
    try {
      if (!req.is_object()) return detail::error(422, "invalid_request", "request body must be an object");
      if (!req.contains("mode")) return detail::error(422, "missing_field", "field 'mode' is required");
      cfg.mode = parse_session_mode(req.at("mode").get<std::string>());
      cfg.c_grid = req.contains("c_grid") ? req.at("c_grid").get<std::vector<double>>() : case_study::c_grid;
      const auto n = cfg.c_grid.size();
      const json grids = req.value("p_grids", json::object());
      cfg.end_point_p = grids.contains("end_point") ? detail::grids_from_json(grids.at("end_point"), n)
                                                    : broadcast(n, case_study::end_point_p);
      cfg.adjacent_p = grids.contains("adjacent") ? detail::grids_from_json(grids.at("adjacent"), n)
                                                  : broadcast(n, case_study::adjacent_p);
      cfg.seed = req.value("seed", std::uint64_t{0});
      if (req.contains("bootstrap_method")) cfg.bootstrap.method = parse_method(req.at("bootstrap_method").get<std::string>());
      if (cfg.bootstrap.method == EstimationMethod::adjusted)
        return detail::error(422, "invalid_field", "bootstrap_method must be mle or bayes");
      cfg.id = req.contains("client_token") ? detail::token_id(req.at("client_token").get<std::string>())
                                            : detail::random_id();
    } catch (const json::exception& e) {
      return detail::error(422, "invalid_field", e.what());
    } catch (const std::invalid_argument& e) {
      return detail::error(422, "invalid_field", e.what());
    }

    std::optional<Session> session;
    try {
      session.emplace(cfg);
      session->next_gamble();
    } catch (const std::invalid_argument& e) {
      return detail::error(422, "invalid_schedule", e.what());
    }
    auto [stored, created] = store_.create(std::move(*session));
    Session view = *stored;
    json out{{"session_id", view.id()}, {"created", created}, {"progress", detail::progress(view)}};
    if (auto g = view.next_gamble()) {
      out["complete"] = false;
      out["gamble"] = to_json(*g);
    } else {
      out["complete"] = true;
      out["gamble"] = nullptr;
    }
    return {created ? 201 : 200, out};
  }

  Response next(const std::string& id) {
    return guarded([&] {
      Session view = *store_.get(id);
      json out{{"session_id", id}, {"progress", detail::progress(view)}};
      if (auto g = view.next_gamble()) {
        out["complete"] = false;
        out["gamble"] = to_json(*g);
      } else {
        out["complete"] = true;
        out["gamble"] = nullptr;
        out["utility"] = utility_document(view, EstimationMethod::mle, false);
      }
      return Response{200, out};
    });
  }

  Response answer(const std::string& id, const std::string& body) {
    json req;
    try {
      req = json::parse(body);
    } catch (const json::parse_error&) {
      return detail::error(422, "invalid_json", "request body is not valid JSON");
    }
    if (!req.is_object() || !req.contains("gamble_id") || !req.at("gamble_id").is_string())
      return detail::error(422, "missing_field", "field 'gamble_id' (string) is required");
    if (!req.contains("y") || !req.at("y").is_number_integer())
      return detail::error(422, "invalid_answer", "field 'y' must be 0 or 1");
    const auto y = req.at("y").get<std::int64_t>();
    if (y != 0 && y != 1) return detail::error(422, "invalid_answer", "field 'y' must be 0 or 1");
    const auto gid = req.at("gamble_id").get<std::string>();
    return guarded([&] {
      auto updated = store_.mutate(id, [&](Session& s) {
        if (s.complete()) throw SessionError(SessionError::Code::already_answered, "session is complete");
        s.record_choice(gid, static_cast<int>(y));
        if (!s.complete()) s.next_gamble();  // price newly unlocked adjacent gambles
      });
      return Response{200,
                      {{"acknowledged", true},
                       {"session_id", id},
                       {"gamble_id", gid},
                       {"progress", detail::progress(*updated)},
                       {"complete", updated->complete()}}};
    });
  }

  Response utility(const std::string& id, const std::string& method, bool isotonic) {
    EstimationMethod m;
    try {
      m = parse_method(method.empty() ? "mle" : method);
    } catch (const std::invalid_argument& e) {
      return detail::error(422, "invalid_method", e.what());
    }
    if (m == EstimationMethod::adjusted) return detail::error(422, "invalid_method", "method must be mle or bayes");
    return guarded([&] {
      const auto snap = store_.get(id);
      if (snap->answered_count() == 0) {
        return Response{200,
                        {{"session_id", id},
                         {"method", std::string(to_string(m))},
                         {"points", json::array()},
                         {"end_point", json::array()},
                         {"adjacent", json::array()},
                         {"note", "no answers recorded yet"}}};
      }
      auto doc = utility_document(*snap, m, isotonic);
      store_.mutate(id, [&](Session& s) {
        EstimationConfig cfg = s.config().bootstrap;
        cfg.method = m;
        s.set_estimates({m, isotonic, s.compute_utilities(cfg, isotonic)});
      });
      return Response{200, doc};
    });
  }

  Response export_session(const std::string& id) {
    return guarded([&] { return Response{200, to_json(*store_.get(id))}; });
  }

  Response export_answers(const std::string& id) {
    return guarded([&] {
      std::ostringstream os;
      write_dataset(os, store_.get(id)->answer_log(GambleKind::end_point));
      Response r;
      r.content_type = "text/csv";
      r.text = os.str();
      return r;
    });
  }

  static json utility_document(const Session& s, EstimationMethod m, bool isotonic) {
    EstimationConfig cfg = s.config().bootstrap;
    cfg.method = m;
    const auto u = s.compute_utilities(cfg, isotonic);
    const auto& primary = s.mode() == SessionMode::adjacent ? u.adjacent : u.end_point;
    return {{"session_id", s.id()},
            {"method", std::string(to_string(m))},
            {"isotonic", isotonic},
            {"points", to_json(primary)},
            {"end_point", to_json(u.end_point)},
            {"adjacent", to_json(u.adjacent)}};
  }

 private:
  template <typename Fn>
  Response guarded(Fn&& fn) {
    try {
      return fn();
    } catch (const NotFound& e) {
      return detail::error(404, "not_found", e.what());
    } catch (const SessionError& e) {
      switch (e.code()) {
        case SessionError::Code::unknown_gamble: return detail::error(404, "unknown_gamble", e.what());
        case SessionError::Code::already_answered: return detail::error(409, "conflict", e.what());
        case SessionError::Code::not_available: return detail::error(409, "not_available", e.what());
        case SessionError::Code::invalid_answer: return detail::error(422, "invalid_answer", e.what());
        default: return detail::error(500, "estimation_failed", e.what());
      }
    } catch (const std::exception& e) {
      return detail::error(500, "internal", e.what());
    }
  }

  SessionStore store_;
};

// Registers the routes on an httplib server.
inline void bind_routes(httplib::Server& svr, Service& service) {
  auto send = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    if (r.content_type == "application/json")
      res.set_content(r.body.dump(), "application/json");
    else
      res.set_content(r.text, r.content_type);
  };
  svr.Post("/sessions", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.create(req.body));
  });
  svr.Get(R"(/sessions/([A-Za-z0-9_-]+))", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.export_session(req.matches[1]));
  });
  svr.Get(R"(/sessions/([A-Za-z0-9_-]+)/next)", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.next(req.matches[1]));
  });
  svr.Post(R"(/sessions/([A-Za-z0-9_-]+)/answers)",
           [&service, send](const httplib::Request& req, httplib::Response& res) {
             send(res, service.answer(req.matches[1], req.body));
           });
  svr.Get(R"(/sessions/([A-Za-z0-9_-]+)/utility)",
          [&service, send](const httplib::Request& req, httplib::Response& res) {
            const auto iso = req.get_param_value("isotonic");
            send(res, service.utility(req.matches[1], req.get_param_value("method"), iso == "1" || iso == "true"));
          });
  svr.Get(R"(/sessions/([A-Za-z0-9_-]+)/answers\.csv)",
          [&service, send](const httplib::Request& req, httplib::Response& res) {
            send(res, service.export_answers(req.matches[1]));
          });
}

}  // namespace chance::service
