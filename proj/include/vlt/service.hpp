#pragma once

// HTTP+JSON front end over sessions.

#include <cstdlib>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <unordered_map>

#include <httplib.h>

#include "vlt/session.hpp"

namespace vlt {

inline constexpr int kDefaultPort = 7342;

inline int service_port_from_env() {
  const char* v = std::getenv("VLT_PORT");
  if (v == nullptr || *v == '\0') return kDefaultPort;
  char* end = nullptr;
  const long port = std::strtol(v, &end, 10);
  if (*end != '\0' || port <= 0 || port > 65535) throw Error(ErrorCode::invalid_argument, std::string("bad VLT_PORT ") + v);
  return static_cast<int>(port);
}

/// HTTP status for a library error.
inline int http_status(ErrorCode code) {
  if (code == ErrorCode::unknown_command || is_input_error(code)) return 400;
  return 409;
}

inline std::vector<std::string> split_ids(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

class Service {
 public:
  explicit Service(std::optional<std::filesystem::path> data_dir = std::nullopt) {
    if (data_dir) store_.emplace(*data_dir);
  }

  void install(httplib::Server& server) {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        std::string a, b;
        if (req.is_multipart_form_data()) {
          a = form_file(req, {"a", "a.svg"});
          b = form_file(req, {"b", "b.svg"});
        } else {
          const json body = parse_body(req);
          a = wire::detail::get<std::string>(body, "a");
          b = wire::detail::get<std::string>(body, "b");
        }
        auto entry = std::make_shared<Entry>(Session::create(new_session_id(), std::move(a), std::move(b)));
        json state = entry->session.state_json();
        persist(entry->session);
        {
          std::unique_lock lock(map_mutex_);
          sessions_.emplace(entry->session.id(), entry);
        }
        send_json(res, state, 201);
      });
    });

    server.Get(R"(/sessions/([A-Za-z0-9_-]+))", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, false, [&](Session& s) { send_json(res, s.state_json()); });
    });

    server.Get(R"(/sessions/([A-Za-z0-9_-]+)/rules)", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, false, [&](Session& s) {
        std::set<std::string, std::less<>> selection;
        if (req.has_param("selection")) {
          for (auto& id : split_ids(req.get_param_value("selection"))) selection.insert(id);
        }
        const std::string which = req.has_param("set") ? req.get_param_value("set") : "output";
        const RuleSet* rules = which == "output" ? &s.output_rules()
                               : which == "target" ? &s.target_rules()
                               : which == "source" ? &s.source_rules()
                                                   : nullptr;
        if (rules == nullptr) throw Error(ErrorCode::invalid_argument, "unknown rule set " + which);
        send_json(res, wire::to_json(rules_for_selection(*rules, selection)));
      });
    });

    server.Post(R"(/sessions/([A-Za-z0-9_-]+)/commands)", [this](const httplib::Request& req, httplib::Response& res) {
      mutate(req, res, [&] { return parse_body(req); });
    });

    server.Post(R"(/sessions/([A-Za-z0-9_-]+)/match/override)", [this](const httplib::Request& req, httplib::Response& res) {
      mutate(req, res, [&] {
        json c = parse_body(req);
        c["type"] = "match_override";
        return c;
      });
    });

    server.Post(R"(/sessions/([A-Za-z0-9_-]+)/optimize)", [this](const httplib::Request& req, httplib::Response& res) {
      mutate(req, res, [&] {
        json c = req.body.empty() ? json::object() : parse_body(req);
        c["type"] = "optimize";
        return c;
      });
    });

    server.Post(R"(/sessions/([A-Za-z0-9_-]+)/undo)", [this](const httplib::Request& req, httplib::Response& res) {
      mutate(req, res, [] { return json{{"type", "undo"}}; });
    });

    server.Post(R"(/sessions/([A-Za-z0-9_-]+)/redo)", [this](const httplib::Request& req, httplib::Response& res) {
      mutate(req, res, [] { return json{{"type", "redo"}}; });
    });

    server.Get(R"(/sessions/([A-Za-z0-9_-]+)/export.svg)", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, false, [&](Session& s) { res.set_content(s.export_svg(), "image/svg+xml"); });
    });

    server.Get(R"(/sessions/([A-Za-z0-9_-]+)/trace.csv)", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, false, [&](Session& s) { res.set_content(wire::trace_csv(s.last_trace()), "text/csv"); });
    });
  }

 private:
  struct Entry {
    explicit Entry(Session s) : session(std::move(s)) {}
    std::shared_mutex mutex;
    Session session;
  };

  static json parse_body(const httplib::Request& req) {
    try {
      return json::parse(req.body);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::invalid_argument, std::string("invalid JSON body: ") + e.what());
    }
  }

  static std::string form_file(const httplib::Request& req, std::initializer_list<const char*> names) {
    for (const char* n : names) {
      if (req.has_file(n)) return req.get_file_value(n).content;
    }
    throw Error(ErrorCode::invalid_argument, std::string("missing multipart field ") + *names.begin());
  }

  static void send_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    send_json(res, json{{"error", {{"code", code}, {"message", message}}}}, status);
  }

  template <class F>
  static void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), std::string(to_string(e.code())), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "InvalidArgument", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "Internal", e.what());
    }
  }

  std::shared_ptr<Entry> find(const std::string& id) {
    {
      std::shared_lock lock(map_mutex_);
      if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
    }
    if (!store_) return nullptr;
    auto loaded = store_->load(id);
    if (!loaded) return nullptr;
    std::unique_lock lock(map_mutex_);
    auto [it, inserted] = sessions_.emplace(id, std::make_shared<Entry>(std::move(*loaded)));
    return it->second;
  }

  template <class F>
  void with_session(const httplib::Request& req, httplib::Response& res, bool write, F&& f) {
    guarded(res, [&] {
      auto entry = find(req.matches[1]);
      if (!entry) return send_error(res, 404, "UnknownSession", std::string(req.matches[1]));
      if (write) {
        std::unique_lock lock(entry->mutex);
        f(entry->session);
      } else {
        std::shared_lock lock(entry->mutex);
        f(entry->session);
      }
    });
  }

  template <class Build>
  void mutate(const httplib::Request& req, httplib::Response& res, Build&& build) {
    with_session(req, res, true, [&](Session& s) {
      const json command = build();
      Session trial = s;
      json out = trial.mutate(command);
      persist(trial);
      s = std::move(trial);
      send_json(res, out);
    });
  }

  void persist(const Session& s) const {
    if (store_) store_->save(s);
  }

  std::optional<SessionStore> store_;
  std::shared_mutex map_mutex_;
  std::unordered_map<std::string, std::shared_ptr<Entry>> sessions_;
};

}  // namespace vlt
