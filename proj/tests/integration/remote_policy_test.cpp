#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <deque>
#include <mutex>
#include <thread>

#include "adept/engine.hpp"
#include "adept/fixture.hpp"

using namespace adept;
using nlohmann::json;

namespace {

// Chat endpoint that replays a queue of canned replies; an entry with a
// positive delay_ms sleeps first so the client times out.
class MockEndpoint {
 public:
  struct Reply {
    int status = 200;
    std::string body;
    int delay_ms = 0;
  };

  MockEndpoint() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      Reply r;
      {
        std::lock_guard<std::mutex> lock(mu_);
        requests_.push_back(json::parse(req.body));
        if (!replies_.empty()) {
          r = replies_.front();
          replies_.pop_front();
        } else {
          r = {503, "{}", 0};
        }
      }
      if (r.delay_ms) std::this_thread::sleep_for(std::chrono::milliseconds(r.delay_ms));
      res.status = r.status;
      res.set_content(r.body, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockEndpoint() {
    server_.stop();
    thread_.join();
  }

  void push(Reply r) {
    std::lock_guard<std::mutex> lock(mu_);
    replies_.push_back(std::move(r));
  }
  void say(const json& content) { push({200, completion_text(content.dump()), 0}); }
  void call(const std::string& name, const json& args) { push({200, completion_call(name, args), 0}); }

  std::vector<json> requests() {
    std::lock_guard<std::mutex> lock(mu_);
    return requests_;
  }

  RemoteConfig config() const {
    RemoteConfig c;
    c.url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    c.model = "mock";
    c.timeout_s = 0.3;
    c.backoff_initial_ms = 10;
    c.backoff_cap_ms = 40;
    return c;
  }

  static std::string completion_text(const std::string& text) {
    return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}}.dump();
  }
  static std::string completion_call(const std::string& name, const json& args) {
    return json{{"choices",
                 {{{"message",
                    {{"role", "assistant"},
                     {"content", nullptr},
                     {"tool_calls",
                      {{{"id", "c1"}, {"type", "function"}, {"function", {{"name", name}, {"arguments", args.dump()}}}}}}}}}}}}
        .dump();
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  std::deque<Reply> replies_;
  std::vector<json> requests_;
};

struct Env {
  UtteranceRecord record;
  UtteranceInput input;
  PriorTable prior;
  EngineConfig cfg;

  Env() {
    record.id = "r1";
    record.audio = "r1.wav";
    record.transcript = "you always lie";
    record.alignment = {{"you", 0.1, 0.3}, {"always", 0.35, 0.7}, {"lie", 0.8, 1.1}};
    input.record = &record;
    input.acoustics = std::make_shared<const UtteranceAcoustics>(prepare_acoustics(synth_burst(170.0, 0.05, 0.5, 1.5, 0.8, 1.1)));
    prior = build_prior(accumulate(std::vector<LabelSet>{LabelSet({Emotion::Anger}, {Emotion::Sadness})}));
    cfg.prior = &prior;
  }
};

const json kPhase1 = {{"candidate_pool", {"Anger", "Sadness"}}};
const json kPriorArgs = {{"candidates", {"Anger", "Sadness"}}, {"intent", "verify"}};
const json kGateArgs = {{"emotion", "Anger"}};
const json kDecision = {{"final_decision", {{"primary_emotions", {"Anger"}}, {"minor_emotions", json::array()}}}};
const json kFinal = {{"final_output",
                      {{"primary_emotions", {"Anger"}}, {"minor_emotions", json::array()}, {"reasoning", "r"}, {"evidence", {"obs-2"}}}}};

void queue_legal(MockEndpoint& m) {
  m.say(kPhase1);
  m.call("StructuralPriorTool", kPriorArgs);
  m.call("run_semantic_gate", kGateArgs);
  m.say(kDecision);
  m.say(kFinal);
}

bool has_diag(const Trajectory& t, std::string_view code, std::string_view detail = {}) {
  for (const auto& d : t.diagnostics) {
    if (d.code == code && d.detail.find(detail) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(RemotePolicy, MatchesScriptedPath) {
  Env env;
  MockEndpoint mock;
  queue_legal(mock);
  RemotePolicy remote(mock.config());
  const auto t = run_trajectory(env.input, remote, env.cfg, 5);

  const json script = {{"phase1", {{{"emit", kPhase1}}}},
                       {"phase2", {{{"call", "StructuralPriorTool"}, {"args", kPriorArgs}},
                                   {{"call", "run_semantic_gate"}, {"args", kGateArgs}},
                                   {{"emit", kDecision}}}},
                       {"phase3", {{{"emit", kFinal}}}}};
  ScriptedPolicy scripted(std::make_shared<const json>(script));
  const auto s = run_trajectory(env.input, scripted, env.cfg, 5);

  EXPECT_TRUE(t.violations.empty()) << to_json(t)["violations"].dump();
  ASSERT_EQ(t.observations.size(), s.observations.size());
  for (std::size_t i = 0; i < s.observations.size(); ++i) {
    EXPECT_EQ(to_json(t.observations[i]).dump(), to_json(s.observations[i]).dump());
  }
  EXPECT_EQ(t.predicted_primary, s.predicted_primary);

  const auto reqs = mock.requests();
  ASSERT_EQ(reqs.size(), 5u);
  EXPECT_FALSE(reqs[0].contains("tools"));
  EXPECT_EQ(reqs[1]["tools"].size(), 8u);
  EXPECT_FALSE(reqs[4].contains("tools"));
  EXPECT_EQ(reqs[1]["model"], "mock");
}

TEST(RemotePolicy, InvalidJsonIsMalformed) {
  Env env;
  MockEndpoint mock;
  mock.push({200, "this is not json", 0});
  RemotePolicy remote(mock.config());
  const auto t = run_trajectory(env.input, remote, env.cfg, 5);
  EXPECT_TRUE(t.has_violation(violation::kMalformedPolicyMessage));
  EXPECT_TRUE(t.predicted_primary.empty());
  EXPECT_EQ(t.status, "completed");
}

TEST(RemotePolicy, TwoTimeoutsThenSuccess) {
  Env env;
  MockEndpoint mock;
  mock.push({200, MockEndpoint::completion_text(kPhase1.dump()), 800});
  mock.push({200, MockEndpoint::completion_text(kPhase1.dump()), 800});
  queue_legal(mock);
  RemotePolicy remote(mock.config());
  const auto t = run_trajectory(env.input, remote, env.cfg, 5);
  EXPECT_EQ(t.status, "completed");
  EXPECT_TRUE(has_diag(t, violation::kTransportRetry, "2 retries")) << to_json(t)["diagnostics"].dump();
  ASSERT_TRUE(t.phase1);
  EXPECT_EQ(t.predicted_primary, EmotionSet{Emotion::Anger});
}

TEST(RemotePolicy, UnavailableBackend) {
  Env env;
  MockEndpoint mock;  // every request gets 503
  RemotePolicy remote(mock.config());
  const auto t = run_trajectory(env.input, remote, env.cfg, 5);
  EXPECT_EQ(t.status, "backend_unavailable");
  EXPECT_EQ(mock.requests().size(), 3u);
}

TEST(RemotePolicy, BadArgumentsBecomeInvalidCall) {
  Env env;
  MockEndpoint mock;
  mock.say(kPhase1);
  mock.push({200,
             json{{"choices",
                   {{{"message",
                      {{"tool_calls",
                        {{{"id", "c1"}, {"function", {{"name", "StructuralPriorTool"}, {"arguments", "{oops"}}}}}}}}}}}}
                 .dump(),
             0});
  mock.call("StructuralPriorTool", kPriorArgs);
  mock.say(kDecision);
  mock.say(kFinal);
  RemotePolicy remote(mock.config());
  const auto t = run_trajectory(env.input, remote, env.cfg, 5);
  ASSERT_GE(t.observations.size(), 2u);
  EXPECT_EQ(t.observations[0].status, "error");
  EXPECT_EQ(t.observations[0].payload["error"], "invalid_arguments");
  EXPECT_TRUE(has_diag(t, violation::kInvalidToolCall));
}
