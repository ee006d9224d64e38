#include <gtest/gtest.h>

#include "harness.hpp"

using namespace vlt;
using support::LiveService;
using support::post_json;

namespace {

std::string create_session(httplib::Client& c, const support::SamplePair& p) {
  int status = 0;
  const json state = post_json(c, "/sessions", {{"a", p.a}, {"b", p.b}}, &status);
  EXPECT_EQ(status, 201);
  return state.at("id").get<std::string>();
}

}  // namespace

TEST(Service, HttpStatusMapping) {
  EXPECT_EQ(http_status(ErrorCode::malformed_xml), 400);
  EXPECT_EQ(http_status(ErrorCode::unknown_element), 400);
  EXPECT_EQ(http_status(ErrorCode::unknown_command), 400);
  EXPECT_EQ(http_status(ErrorCode::infeasible_rule), 409);
  EXPECT_EQ(http_status(ErrorCode::locked_property_violation), 409);
}

TEST(Service, SplitIds) {
  EXPECT_EQ(split_ids("a, b,,c "), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(split_ids("").empty());
}

TEST(Service, PortFromEnvironment) {
  ::unsetenv("VLT_PORT");
  EXPECT_EQ(service_port_from_env(), kDefaultPort);
  ::setenv("VLT_PORT", "8123", 1);
  EXPECT_EQ(service_port_from_env(), 8123);
  ::setenv("VLT_PORT", "80x", 1);
  EXPECT_THROW(service_port_from_env(), Error);
  ::unsetenv("VLT_PORT");
}

TEST(Service, CreateFetchAndExport) {
  LiveService live;
  auto c = live.client();
  const auto p = support::load_pair("pair1");
  const std::string id = create_session(c, p);

  auto got = c.Get("/sessions/" + id);
  ASSERT_TRUE(got);
  EXPECT_EQ(got->status, 200);
  const json state = json::parse(got->body);
  EXPECT_EQ(state.at("id"), id);
  EXPECT_EQ(state.at("target").at("elements").size(), 5u);
  EXPECT_TRUE(state.contains("mapping"));
  EXPECT_TRUE(state.at("reward").contains("hard"));
  EXPECT_EQ(got->get_header_value("Access-Control-Allow-Origin"), "*");

  auto svg = c.Get("/sessions/" + id + "/export.svg");
  ASSERT_TRUE(svg);
  EXPECT_EQ(svg->status, 200);
  EXPECT_EQ(svg->get_header_value("Content-Type"), "image/svg+xml");
  EXPECT_EQ(svg->body, p.a);
}

TEST(Service, MultipartCreate) {
  LiveService live;
  auto c = live.client();
  const auto p = support::load_pair("pair2");
  httplib::MultipartFormDataItems items{{"a", p.a, "a.svg", "image/svg+xml"}, {"b", p.b, "b.svg", "image/svg+xml"}};
  auto res = c.Post("/sessions", items);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201);
  EXPECT_EQ(json::parse(res->body).at("output").at("elements").size(), 7u);

  httplib::MultipartFormDataItems missing{{"a", p.a, "a.svg", "image/svg+xml"}};
  res = c.Post("/sessions", missing);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

TEST(Service, ErrorStatuses) {
  LiveService live;
  auto c = live.client();
  const auto p = support::load_pair("pair1");
  int status = 0;

  json err = post_json(c, "/sessions", {{"a", "<svg"}, {"b", p.b}}, &status);
  EXPECT_EQ(status, 400);
  EXPECT_EQ(err.at("error").at("code"), "MalformedXml");
  EXPECT_NE(err.at("error").at("message").get<std::string>().find("design A"), std::string::npos);

  auto bad_body = c.Post("/sessions", "{not json", "application/json");
  ASSERT_TRUE(bad_body);
  EXPECT_EQ(bad_body->status, 400);

  auto missing = c.Get("/sessions/doesnotexist");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(json::parse(missing->body).at("error").at("code"), "UnknownSession");
  auto missing_cmd = c.Post("/sessions/doesnotexist/commands", R"({"type":"global_copy"})", "application/json");
  ASSERT_TRUE(missing_cmd);
  EXPECT_EQ(missing_cmd->status, 404);

  const std::string id = create_session(c, p);
  const std::string commands = "/sessions/" + id + "/commands";
  err = post_json(c, commands, {{"type", "fly"}}, &status);
  EXPECT_EQ(status, 400);
  EXPECT_EQ(err.at("error").at("code"), "UnknownCommand");
  post_json(c, commands, {{"type", "element_copy"}, {"ids", {"ghost"}}}, &status);
  EXPECT_EQ(status, 400);

  post_json(c, commands, {{"type", "global_copy"}}, &status);
  post_json(c, commands, {{"type", "lock"}, {"id", "cta"}, {"properties", {"y"}}}, &status);
  EXPECT_EQ(status, 200);
  const std::string before = c.Get("/sessions/" + id)->body;
  err = post_json(c, commands,
                  {{"type", "enforce_rule"},
                   {"rule", {{"type", "VAlign"}, {"params", {{"mode", "bottom"}}}, {"members", {"cta", "hero"}}}}},
                  &status);
  EXPECT_EQ(status, 409);
  EXPECT_EQ(err.at("error").at("code"), "InfeasibleRule");
  EXPECT_EQ(c.Get("/sessions/" + id)->body, before);

  auto undo_empty = c.Post("/sessions/" + id + "/redo");
  ASSERT_TRUE(undo_empty);
  EXPECT_EQ(undo_empty->status, 400);
}

TEST(Service, OptionsPreflight) {
  LiveService live;
  auto c = live.client();
  auto res = c.Options("/sessions");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 204);
  EXPECT_NE(res->get_header_value("Access-Control-Allow-Methods").find("POST"), std::string::npos);
}

TEST(Service, CommandsUndoRedoAndRules) {
  LiveService live;
  auto c = live.client();
  const auto p = support::load_pair("pair2");
  const std::string id = create_session(c, p);
  const std::string base = "/sessions/" + id;
  int status = 0;

  const json r = post_json(c, base + "/commands", {{"type", "global_copy"}}, &status);
  EXPECT_EQ(status, 200);
  for (const char* key : {"changed", "step", "transformation", "output", "mapping", "rules", "reward", "history"})
    EXPECT_TRUE(r.contains(key)) << key;
  EXPECT_EQ(r.at("history").at("undo"), 1);
  const std::string copied = c.Get(base)->body;

  auto undo = c.Post(base + "/undo");
  ASSERT_TRUE(undo);
  EXPECT_EQ(undo->status, 200);
  EXPECT_EQ(json::parse(undo->body).at("history").at("redo"), 1);
  auto redo = c.Post(base + "/redo");
  ASSERT_TRUE(redo);
  EXPECT_EQ(c.Get(base)->body, copied);

  const json ov = post_json(c, base + "/match/override", {{"a", "card1"}, {"b", "c3"}}, &status);
  EXPECT_EQ(status, 200);
  bool found = false;
  for (const auto& pair : ov.at("mapping").at("pairs"))
    found |= pair.at("a") == "card1" && pair.at("b") == "c3" && pair.at("overridden") == true;
  EXPECT_TRUE(found);

  auto all = c.Get(base + "/rules");
  ASSERT_TRUE(all);
  EXPECT_EQ(all->status, 200);
  const json all_rules = json::parse(all->body).at("rules");
  auto some = c.Get(base + "/rules?selection=lab1,lab2&set=target");
  ASSERT_TRUE(some);
  EXPECT_EQ(some->status, 200);
  for (const auto& rule : json::parse(some->body).at("rules")) {
    bool touches = false;
    for (const auto& m : rule.at("members")) touches |= m == "lab1" || m == "lab2";
    EXPECT_TRUE(touches) << rule.dump();
  }
  auto wrong_set = c.Get(base + "/rules?set=everything");
  ASSERT_TRUE(wrong_set);
  EXPECT_EQ(wrong_set->status, 400);
  EXPECT_FALSE(all_rules.empty());
}

TEST(Service, OptimizeAndTrace) {
  LiveService live;
  auto c = live.client();
  const std::string id = create_session(c, support::load_pair("pair1"));
  const std::string base = "/sessions/" + id;
  int status = 0;
  const json r = post_json(c, base + "/optimize", {{"budget", 20}, {"seed", 3}}, &status);
  EXPECT_EQ(status, 200);
  const auto& trace = r.at("trace");
  ASSERT_GE(trace.size(), 1u);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_GE(trace[i].get<double>(), trace[i - 1].get<double>());

  auto csv = c.Get(base + "/trace.csv");
  ASSERT_TRUE(csv);
  EXPECT_EQ(csv->status, 200);
  EXPECT_EQ(csv->body.rfind("iteration,total,r_rule,r_off,r_con\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv->body.begin(), csv->body.end(), '\n')), trace.size() + 1);

  auto empty = c.Post(base + "/optimize", "", "application/json");
  ASSERT_TRUE(empty);
  EXPECT_EQ(empty->status, 200);
}

TEST(Service, SessionsPersistAcrossRestart) {
  support::TempDir dir("vlt-http");
  const auto p = support::load_pair("pair1");
  std::string id, state;
  {
    LiveService live(dir.path);
    auto c = live.client();
    id = create_session(c, p);
    post_json(c, "/sessions/" + id + "/commands", {{"type", "global_copy"}});
    state = c.Get("/sessions/" + id)->body;
  }
  LiveService again(dir.path);
  auto c = again.client();
  auto res = c.Get("/sessions/" + id);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, state);
  auto undo = c.Post("/sessions/" + id + "/undo");
  ASSERT_TRUE(undo);
  EXPECT_EQ(undo->status, 200);
}

// ---- command line ----------------------------------------------------------

class Cli : public ::testing::Test {
 protected:
  support::TempDir scratch{"vlt-cli"};
  std::string path(const std::string& name) const { return (scratch.path / name).string(); }
  void write(const std::string& name, const std::string& content) const {
    std::ofstream(scratch.path / name, std::ios::binary) << content;
  }
  support::CliResult run(const std::vector<std::string>& args) const { return support::run_cli(args, scratch.path); }
};

TEST_F(Cli, TransferScriptReachesGoal) {
  for (const char* name : {"pair1", "pair2"}) {
    const auto dir = support::source_path("samples") / name;
    const auto r = run({"transfer", "--target", (dir / "a.svg").string(), "--source", (dir / "b.svg").string(), "--script",
                        (dir / "script.json").string(), "--out", path("out.svg"), "--dump-rules", path("rules.json")});
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("reward ", 0), 0u);
    const auto out = parse_design(support::read_file(path("out.svg"))).design;
    EXPECT_EQ(support::goal_mismatch(out, support::load_pair(name).goal), "") << name;
    const json rules = support::read_json(path("rules.json"));
    EXPECT_TRUE(rules.contains("target") && rules.contains("source") && rules.contains("output"));
  }
}

TEST_F(Cli, TransferAutoAndOptimize) {
  const auto dir = support::source_path("samples/pair2");
  write("w.json", R"({"offset": 2, "consistency": 1, "sigma": 1})");
  const auto r = run({"transfer", "--target", (dir / "a.svg").string(), "--source", (dir / "b.svg").string(), "--auto",
                      "--optimize", "10", "--seed", "2", "--weights", path("w.json"), "--out", path("o.svg")});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NO_THROW(parse_design(support::read_file(path("o.svg"))));
}

TEST_F(Cli, ExitCodes) {
  const auto dir = support::source_path("samples/pair1");
  const std::string a = (dir / "a.svg").string(), b = (dir / "b.svg").string();

  EXPECT_EQ(run({"transfer", "--target", path("nope.svg"), "--source", b, "--out", path("o.svg")}).exit_code, 1);
  write("bad.svg", "<svg width='10' height='10'><rect");
  const auto malformed = run({"rules", path("bad.svg")});
  EXPECT_EQ(malformed.exit_code, 1);
  EXPECT_NE(malformed.err.find("MalformedXml"), std::string::npos) << malformed.err;
  EXPECT_EQ(run({"transfer", "--target", a}).exit_code, 1);
  EXPECT_EQ(run({"frobnicate"}).exit_code, 1);

  write("bad.json", R"([{"type": "warp"}])");
  EXPECT_EQ(run({"transfer", "--target", a, "--source", b, "--script", path("bad.json"), "--out", path("o.svg")}).exit_code, 1);

  write("locked.json", R"([
    {"type": "lock", "id": "cta", "properties": ["y"]},
    {"type": "enforce_rule", "rule": {"type": "VAlign", "params": {"mode": "bottom"}, "members": ["cta", "hero"]}}
  ])");
  const auto infeasible =
      run({"transfer", "--target", a, "--source", b, "--auto", "--script", path("locked.json"), "--out", path("o.svg")});
  EXPECT_EQ(infeasible.exit_code, 2);
  EXPECT_NE(infeasible.err.find("InfeasibleRule"), std::string::npos) << infeasible.err;
}

TEST_F(Cli, RulesAndMatchJson) {
  const auto dir = support::source_path("samples/pair2");
  const auto rules = run({"rules", (dir / "a.svg").string(), "--json"});
  ASSERT_EQ(rules.exit_code, 0) << rules.err;
  const json rs = json::parse(rules.out);
  EXPECT_EQ(wire::ruleset_from_json(rs), infer_rules(parse_design(support::read_file(dir / "a.svg")).design));

  const auto text = run({"rules", (dir / "a.svg").string()});
  ASSERT_EQ(text.exit_code, 0);
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.out.begin(), text.out.end(), '\n')), rs.at("rules").size());

  const auto match = run({"match", (dir / "a.svg").string(), (dir / "b.svg").string(), "--json"});
  ASSERT_EQ(match.exit_code, 0) << match.err;
  const auto m = wire::correspondence_from_json(json::parse(match.out));
  EXPECT_EQ(m.partner_of_a("card2"), "c2");
  EXPECT_EQ(m.partner_of_a("lab3"), "t3");
  EXPECT_EQ(m.pairs.size(), 7u);
}
