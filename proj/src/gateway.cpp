#include "gateway.hpp"

#include <algorithm>
#include <condition_variable>
#include <map>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "error.hpp"
#include "eval_harness.hpp"

namespace prodcell {

namespace {

struct SessionEntry {
  std::string id;
  std::unique_ptr<Session> session;
  std::thread worker;
  std::mutex mu;
  std::condition_variable cv;
  bool stop = false;
  bool work = false;

  void poke() {
    {
      std::lock_guard lock(mu);
      work = true;
    }
    cv.notify_all();
  }
};

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownApproval:
    case ErrorCode::Io:
      return 404;
    case ErrorCode::AlreadyResolved:
    case ErrorCode::InvalidState:
      return 409;
    case ErrorCode::Internal:
    case ErrorCode::BackendUnavailable:
      return 500;
    default:
      return 400;
  }
}

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send_json(res, http_status(code), {{"code", std::string(error_code_name(code))}, {"message", message}});
}

nlohmann::json body_json(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  auto j = nlohmann::json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
  return j;
}

}  // namespace

struct Gateway::Impl {
  const World& world;
  GatewayConfig config;
  httplib::Server server;
  std::mutex mu;
  std::map<std::string, std::shared_ptr<SessionEntry>> sessions;
  int next_id = 1;
  int bound_port = -1;

  Impl(const World& w, GatewayConfig c) : world(w), config(std::move(c)) { routes(); }

  ~Impl() {
    std::map<std::string, std::shared_ptr<SessionEntry>> all;
    {
      std::lock_guard lock(mu);
      all.swap(sessions);
    }
    for (auto& [id, e] : all) shutdown(*e);
  }

  static void shutdown(SessionEntry& e) {
    {
      std::lock_guard lock(e.mu);
      e.stop = true;
    }
    e.cv.notify_all();
    if (e.worker.joinable()) e.worker.join();
  }

  std::shared_ptr<SessionEntry> find(const std::string& id) {
    std::lock_guard lock(mu);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw Error(ErrorCode::UnknownSession, "unknown session '" + id + "'");
    return it->second;
  }

  static void worker_loop(SessionEntry* e) {
    while (true) {
      try {
        e->session->run();
      } catch (const std::exception&) {
        // the transcript already records module errors; keep serving reads
      }
      std::unique_lock lock(e->mu);
      e->cv.wait(lock, [&] { return e->stop || e->work; });
      if (e->stop) return;
      e->work = false;
    }
  }

  template <typename F>
  void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, ErrorCode::InvalidArgument, e.what());
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::Internal, e.what());
    }
  }

  void routes() {
    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto body = body_json(req);
        if (!body.contains("scenario")) throw Error(ErrorCode::InvalidArgument, "missing field 'scenario'");
        auto scenario = world.scenario(body.at("scenario").get<std::string>());
        nlohmann::json opts = body;
        if (body.contains("approve")) opts["approval"] = body.at("approve");
        const auto run_config = RunConfig::from_json(opts);
        const auto backend = world.backend(body.value("backend", config.default_backend));
        auto entry = std::make_shared<SessionEntry>();
        entry->session = std::make_unique<Session>(world, std::move(scenario), make_backend(backend), run_config);
        {
          std::lock_guard lock(mu);
          entry->id = "s" + std::to_string(next_id++);
          sessions[entry->id] = entry;
        }
        entry->worker = std::thread(worker_loop, entry.get());
        send_json(res, 201, {{"id", entry->id}, {"scenario", entry->session->scenario().id}});
      });
    });

    server.Get("/sessions", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        nlohmann::json list = nlohmann::json::array();
        std::lock_guard lock(mu);
        for (const auto& [id, e] : sessions) {
          list.push_back({{"id", id},
                          {"scenario", e->session->scenario().id},
                          {"status", std::string(to_string(e->session->status()))}});
        }
        send_json(res, 200, {{"sessions", list}});
      });
    });

    server.Delete(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        std::shared_ptr<SessionEntry> e = find(req.matches[1]);
        {
          std::lock_guard lock(mu);
          sessions.erase(e->id);
        }
        shutdown(*e);
        send_json(res, 200, {{"id", e->id}, {"deleted", true}});
      });
    });

    server.Post(R"(/sessions/([^/]+)/task)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto e = find(req.matches[1]);
        const auto body = body_json(req);
        if (!body.contains("text") || !body.at("text").is_string()) {
          throw Error(ErrorCode::InvalidArgument, "missing string field 'text'");
        }
        e->session->submit_task(body.at("text").get<std::string>());
        e->poke();
        send_json(res, 202, {{"accepted", true}});
      });
    });

    server.Get(R"(/sessions/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto e = find(req.matches[1]);
        std::uint64_t since = 0;
        long wait_ms = 0;
        try {
          if (req.has_param("since")) since = std::stoull(req.get_param_value("since"));
          if (req.has_param("wait_ms")) wait_ms = std::stol(req.get_param_value("wait_ms"));
        } catch (const std::exception&) {
          throw Error(ErrorCode::InvalidArgument, "since and wait_ms must be non-negative integers");
        }
        if (wait_ms < 0) throw Error(ErrorCode::InvalidArgument, "wait_ms must be non-negative");
        const auto& log = e->session->log();
        if (wait_ms > 0) log.wait_for_new(since, std::chrono::milliseconds(std::min<long>(wait_ms, 30'000)));
        const auto records = log.since(since);
        nlohmann::json events = nlohmann::json::array();
        for (const auto& r : records) events.push_back(to_json(r));
        const std::uint64_t next = records.empty() ? since : records.back().seq;
        send_json(res, 200,
                  {{"events", events}, {"next_since", next}, {"status", std::string(to_string(e->session->status()))}});
      });
    });

    server.Get(R"(/sessions/([^/]+)/state)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, find(req.matches[1])->session->state_json()); });
    });

    server.Get(R"(/sessions/([^/]+)/transcript)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        res.status = 200;
        res.set_content(find(req.matches[1])->session->transcript().to_jsonl(), "application/x-ndjson");
      });
    });

    server.Get(R"(/sessions/([^/]+)/approvals)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto e = find(req.matches[1]);
        nlohmann::json list = nlohmann::json::array();
        for (const auto& p : e->session->approvals()) {
          auto j = p.to_json();
          j["id"] = e->id + "-" + p.id;
          list.push_back(std::move(j));
        }
        send_json(res, 200, {{"approvals", list}});
      });
    });

    server.Post(R"(/approvals/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string full = req.matches[1];
        const auto dash = full.rfind('-');
        if (dash == std::string::npos) throw Error(ErrorCode::UnknownApproval, "unknown approval '" + full + "'");
        auto e = find(full.substr(0, dash));
        const auto body = body_json(req);
        const auto verdict = body.value("verdict", std::string{});
        if (verdict != "approved" && verdict != "rejected") {
          throw Error(ErrorCode::InvalidArgument, "verdict must be approved or rejected");
        }
        auto result = e->session->resolve_approval(full.substr(dash + 1), verdict == "approved",
                                                   body.value("actor", std::string("operator")));
        result["id"] = full;
        e->poke();
        send_json(res, 200, result);
      });
    });

    server.Get("/services", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto& reg = world.registry();
        std::vector<std::string> names;
        if (req.has_param("agents") && req.has_param("agent")) {
          for (const auto& a : world.agents(req.get_param_value("agents"))) {
            if (a.id == req.get_param_value("agent")) {
              nlohmann::json out = reg.to_json();
              out["catalog"] = render_catalog(reg, a.catalog);
              send_json(res, 200, out);
              return;
            }
          }
          throw Error(ErrorCode::InvalidArgument, "unknown agent '" + req.get_param_value("agent") + "'");
        }
        for (const auto& s : reg.services()) names.push_back(s.name);
        nlohmann::json out = reg.to_json();
        out["catalog"] = render_catalog(reg, names);
        send_json(res, 200, out);
      });
    });

    server.Post("/eval/run", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto body = body_json(req);
        const auto suite = world.suite(body.value("suite", std::string("suite100")));
        std::vector<std::string> backends = body.value("backends", std::vector<std::string>{config.default_backend});
        EvalReport report;
        report.suite = suite.id;
        for (const auto& b : backends) report.backends.push_back(evaluate_backend(world, suite, world.backend(b)));
        auto out = report_json(report);
        out["text"] = report_text(report);
        send_json(res, 200, out);
      });
    });
  }
};

Gateway::Gateway(const World& world, GatewayConfig config) : impl_(std::make_unique<Impl>(world, std::move(config))) {}

Gateway::~Gateway() {
  stop();
}

int Gateway::bind() {
  if (impl_->bound_port >= 0) return impl_->bound_port;
  int port = impl_->config.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(impl_->config.host);
  } else if (!impl_->server.bind_to_port(impl_->config.host, port)) {
    port = -1;
  }
  if (port < 0) throw Error(ErrorCode::Io, "cannot bind " + impl_->config.host + ":" + std::to_string(impl_->config.port));
  impl_->bound_port = port;
  return port;
}

void Gateway::listen() {
  bind();
  impl_->server.listen_after_bind();
}

void Gateway::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace prodcell
