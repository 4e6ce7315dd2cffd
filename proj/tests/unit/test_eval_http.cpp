#include <doctest.h>

#include <httplib.h>

#include <thread>

#include "sitemt/eval_http.hpp"
#include "support.hpp"

using namespace sitemt::evalsvc;
using nlohmann::json;

namespace {

struct Fixture {
  testing::TempDir dir;
  EvalService service{dir / "log.jsonl"};
  HttpServer server{service};
  int port = server.bind("127.0.0.1", 0);
  std::jthread thread{[this] { server.listen_after_bind(); }};
  httplib::Client client{"127.0.0.1", port};

  Fixture() { server.wait_until_ready(); }
  ~Fixture() { server.stop(); }

  httplib::Result post(const std::string& path, const json& body) {
    return client.Post(path, body.dump(), "application/json");
  }

  std::string create(const std::string& la = "SysAlpha", const std::string& lb = "SysBeta", int n = 3) {
    json items = json::array();
    for (int i = 0; i < n; ++i)
      items.push_back({{"source", "src " + std::to_string(i)}, {"a", "aa " + std::to_string(i)},
                       {"b", "bb " + std::to_string(i)}});
    auto res = post("/sessions", {{"label_a", la}, {"label_b", lb}, {"seed", 42}, {"items", items}});
    REQUIRE(res);
    REQUIRE(res->status == 201);
    return json::parse(res->body).at("session_id").get<std::string>();
  }
};

}  // namespace

TEST_SUITE("eval_http") {
  TEST_CASE("create, next, judge, tally") {
    Fixture f;
    REQUIRE(f.port > 0);
    auto id = f.create();
    auto next = f.client.Get("/sessions/" + id + "/next?annotator=ann1");
    REQUIRE(next);
    CHECK(next->status == 200);
    auto item = json::parse(next->body);
    CHECK(item.at("index") == 0);
    CHECK(item.size() == 4);
    CHECK(next->body.find("SysAlpha") == std::string::npos);
    CHECK(next->body.find("SysBeta") == std::string::npos);
    CHECK(next->get_header_value("Access-Control-Allow-Origin") == "*");

    auto j = f.post("/sessions/" + id + "/judgments", {{"index", 0}, {"annotator", "ann1"}, {"choice", "first"}});
    REQUIRE(j);
    CHECK(j->status == 201);
    CHECK(j->body.find("SysAlpha") == std::string::npos);
    auto dup = f.post("/sessions/" + id + "/judgments", {{"index", 0}, {"annotator", "ann1"}, {"choice", "tie"}});
    CHECK(dup->status == 409);

    for (int i = 1; i < 3; ++i)
      CHECK(f.post("/sessions/" + id + "/judgments", {{"index", i}, {"annotator", "ann1"}, {"choice", "tie"}})->status ==
            201);
    auto done = f.client.Get("/sessions/" + id + "/next?annotator=ann1");
    CHECK(done->status == 204);

    auto tally = f.client.Get("/sessions/" + id + "/tally");
    REQUIRE(tally->status == 200);
    auto t = json::parse(tally->body);
    CHECK(t.at("count") == 3);
    CHECK(t.at("points_a").get<double>() + t.at("points_b").get<double>() == 3.0);
  }

  TEST_CASE("first resolves against the served layout") {
    Fixture f;
    auto id = f.create("L_A", "L_B", 10);
    auto session = f.service.session(id);
    double expect_a = 0.0;
    for (int i = 0; i < 10; ++i) {
      auto item = json::parse(f.client.Get("/sessions/" + id + "/next?annotator=z")->body);
      bool a_shown_left = item.at("left") == "aa " + std::to_string(i);
      CHECK(a_shown_left == session.items[static_cast<std::size_t>(i)].a_left);
      if (a_shown_left) expect_a += 1.0;
      f.post("/sessions/" + id + "/judgments", {{"index", i}, {"annotator", "z"}, {"choice", "first"}});
    }
    auto t = json::parse(f.client.Get("/sessions/" + id + "/tally")->body);
    CHECK(t.at("points_a").get<double>() == expect_a);
  }

  TEST_CASE("error statuses") {
    Fixture f;
    auto id = f.create();
    CHECK(f.client.Get("/sessions/missing/next?annotator=a")->status == 404);
    CHECK(f.client.Get("/sessions/missing/tally")->status == 404);
    CHECK(f.client.Get("/sessions/" + id + "/next")->status == 400);
    CHECK(f.post("/sessions/missing/judgments", {{"index", 0}, {"annotator", "a"}, {"choice", "tie"}})->status == 404);
    CHECK(f.post("/sessions/" + id + "/judgments", {{"index", 0}, {"annotator", "a"}, {"choice", "left"}})->status ==
          400);
    CHECK(f.post("/sessions/" + id + "/judgments", {{"index", 99}, {"annotator", "a"}, {"choice", "tie"}})->status ==
          400);
    CHECK(f.post("/sessions/" + id + "/judgments", {{"index", -1}, {"annotator", "a"}, {"choice", "tie"}})->status ==
          400);
    CHECK(f.post("/sessions/" + id + "/judgments", {{"annotator", "a"}, {"choice", "tie"}})->status == 400);
    CHECK(f.client.Post("/sessions", "not json", "application/json")->status == 400);
    CHECK(f.post("/sessions", {{"label_a", "A"}, {"label_b", "B"}, {"items", json::array()}})->status == 400);
    json one = json::array({{{"source", "s"}, {"a", "x"}, {"b", "y"}}});
    CHECK(f.post("/sessions", {{"label_a", "A"}, {"label_b", "B"}, {"items", one}, {"session_id", "s1"}})->status ==
          201);
    CHECK(f.post("/sessions", {{"label_a", "A"}, {"label_b", "B"}, {"items", one}, {"session_id", "s1"}})->status ==
          409);
  }

  TEST_CASE("concurrent judgments over HTTP") {
    Fixture f;
    auto id = f.create("A", "B", 20);
    {
      std::vector<std::jthread> ts;
      for (int a = 0; a < 4; ++a)
        ts.emplace_back([&, a] {
          httplib::Client c("127.0.0.1", f.port);
          for (int i = 0; i < 20; ++i) {
            json body = {{"index", i}, {"annotator", "ann" + std::to_string(a)}, {"choice", "second"}};
            c.Post("/sessions/" + id + "/judgments", body.dump(), "application/json");
          }
        });
    }
    auto t = json::parse(f.client.Get("/sessions/" + id + "/tally")->body);
    CHECK(t.at("count") == 80);
  }
}
