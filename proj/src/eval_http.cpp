#include "sitemt/eval_http.hpp"

#include <httplib.h>

#include "sitemt/error.hpp"

namespace sitemt::evalsvc {

namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& msg) {
  send_json(res, status, {{"error", code}, {"message", msg}});
}

int status_for(const Error& e) {
  if (e.code() == "not-found") return 404;
  if (e.code() == "duplicate") return 409;
  if (e.code() == "validation") return 400;
  return 500;
}

// Runs fn and maps thrown errors to HTTP statuses.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_error(res, status_for(e), e.code(), e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, "validation", e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal", e.what());
  }
}

const json& field(const json& body, const char* name) {
  auto it = body.find(name);
  if (it == body.end()) throw Error("validation", std::string("missing field '") + name + "'");
  return *it;
}

std::string string_field(const json& body, const char* name) {
  const json& v = field(body, name);
  if (!v.is_string()) throw Error("validation", std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) throw Error("validation", "request body must be a JSON object");
  return body;
}

}  // namespace

struct HttpServer::Impl {
  EvalService& service;
  httplib::Server server;

  explicit Impl(EvalService& s) : service(s) {}

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        json body = parse_body(req);
        std::vector<ItemInput> items;
        const json& arr = field(body, "items");
        if (!arr.is_array()) throw Error("validation", "field 'items' must be an array");
        for (const json& it : arr) {
          if (!it.is_object()) throw Error("validation", "items must be objects");
          items.push_back({string_field(it, "source"), string_field(it, "a"), string_field(it, "b")});
        }
        std::uint64_t seed = 0;
        if (auto s = body.find("seed"); s != body.end()) {
          if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<long long>() >= 0))
            throw Error("validation", "field 'seed' must be a non-negative integer");
          seed = s->get<std::uint64_t>();
        }
        std::optional<std::string> id;
        if (body.contains("session_id")) id = string_field(body, "session_id");
        std::string sid = service.create_session(string_field(body, "label_a"),
                                                 string_field(body, "label_b"), items, seed, id);
        send_json(res, 201, {{"session_id", sid}});
      });
    });

    server.Get(R"(/sessions/([^/]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        std::string annotator = req.get_param_value("annotator");
        if (annotator.empty()) throw Error("validation", "query parameter 'annotator' is required");
        auto item = service.next_item(req.matches[1], annotator);
        if (!item) {
          res.status = 204;
          return;
        }
        send_json(res, 200, to_json(*item));
      });
    });

    server.Post(R"(/sessions/([^/]+)/judgments)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        json body = parse_body(req);
        const json& idx = field(body, "index");
        if (!idx.is_number_integer() || idx.get<long long>() < 0)
          throw Error("validation", "field 'index' must be a non-negative integer");
        auto choice = parse_choice(string_field(body, "choice"));
        if (!choice) throw Error("validation", "choice must be one of first, second, tie");
        std::string annotator = string_field(body, "annotator");
        auto rec = service.submit_judgment(req.matches[1], idx.get<std::size_t>(), annotator, *choice);
        send_json(res, 201, {{"index", rec.index}, {"annotator", rec.annotator},
                             {"choice", to_string(rec.choice)}});
      });
    });

    server.Get(R"(/sessions/([^/]+)/tally)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, to_json(service.tally(req.matches[1]))); });
    });
  }
};

HttpServer::HttpServer(EvalService& service, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(service)) {
  impl_->routes();
  if (static_dir) impl_->server.set_mount_point("/", static_dir->string());
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace sitemt::evalsvc
