#include "ssearch/error.hpp"
#include "ssearch/harness.hpp"
#include "ssearch/search.hpp"
#include "ssearch/wire.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cmath>
#include <string>

using namespace ssearch;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::string server(const std::string& mode) {
  return std::string("stdio:") + FAKE_SERVER_PATH + " --mode " + mode;
}

std::shared_ptr<WireClient> client_for(const std::string& mode) {
  return std::make_shared<WireClient>(open_transport(server(mode), 5000));
}

ContextSet linear_context() {
  ContextSet c;
  for (int i = 0; i < 12; ++i) {
    const Vector z = vec({0.01 * i - 0.05, 0.003 * ((i * 5) % 12) - 0.01});
    c.append(z, 2.0 * z[0] - 0.5 * z[1] + 3.0);
  }
  return c;
}

int closed_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

}  // namespace

TEST_CASE("request encoding is byte-exact") {
  CHECK(wire::encode_ping(1) == R"({"op":"ping","id":1})");
  const std::vector<Vector> q{vec({0.5, -1.0})};
  CHECK(wire::encode_predict(2, q) == R"({"op":"predict","xs":[[0.5,-1.0]],"id":2})");
  const std::vector<Vector> xs{vec({0.1, 2.0}), vec({0.0, -0.25})};
  const std::vector<double> ys{1.5, 1e-05};
  CHECK(wire::encode_fit(3, xs, ys) == R"({"op":"fit","xs":[[0.1,2.0],[0.0,-0.25]],"ys":[1.5,1e-05],"id":3})");
}

TEST_CASE("encoded numbers round-trip exactly") {
  Rng rng(1);
  std::vector<Vector> xs;
  for (int i = 0; i < 50; ++i) xs.push_back(vec({rng.normal() * 1e-3, rng.normal() * 1e7}));
  const auto parsed = nlohmann::json::parse(wire::encode_predict(9, xs));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(parsed["xs"][i][0].get<double>() == xs[i][0]);
    CHECK(parsed["xs"][i][1].get<double>() == xs[i][1]);
  }
}

TEST_CASE("non-finite payloads are refused before sending") {
  const std::vector<Vector> bad{vec({1.0, std::nan("")})};
  CHECK_THROWS_AS(wire::encode_predict(1, bad), NonFiniteError);
  const std::vector<Vector> xs{vec({1.0})};
  const std::vector<double> ys{INFINITY};
  CHECK_THROWS_AS(wire::encode_fit(1, xs, ys), NonFiniteError);
}

TEST_CASE("client speaks to an echo server over stdio") {
  auto client = client_for("echo");
  client->ping();
  const std::vector<Vector> xs{vec({0, 1}), vec({1, 0})};
  const std::vector<double> ys{1, 2};
  client->fit(xs, ys);
  const auto yhat = client->predict(xs);
  CHECK(yhat == std::vector<double>{0.0, 0.0});
  CHECK(client->last_id() == 3);
}

TEST_CASE("remote ridge matches the built-in ridge") {
  const ContextSet c = linear_context();
  RemoteSurrogate remote(client_for("ridge"));
  RidgeSurrogate local(1e-6);
  const auto a = remote.fit(c, SubspaceBasis{});
  const auto b = local.fit(c, SubspaceBasis{});
  std::vector<Vector> q;
  for (int i = 0; i < 20; ++i) q.push_back(vec({0.004 * i - 0.03, 0.02 - 0.002 * i}));
  const auto pa = a->predict(q).values;
  const auto pb = b->predict(q).values;
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(std::abs(pa[i] - pb[i]) <= 1e-6);
}

TEST_CASE("server errors surface as protocol errors with diagnostics") {
  auto client = client_for("ridge");
  const std::vector<Vector> q{vec({0})};
  CHECK_THROWS_WITH_AS(client->predict(q), doctest::Contains("predict before fit"), ProtocolError);
}

TEST_CASE("garbage replies are rejected") {
  auto client = client_for("garbage");
  CHECK_THROWS_WITH_AS(client->ping(), doctest::Contains("malformed response"), ProtocolError);
}

TEST_CASE("unreachable peers are reported") {
  SUBCASE("missing executable") {
    WireClient client(open_transport("stdio:/nonexistent/surrogate-server", 2000));
    CHECK_THROWS_AS(client.ping(), ProtocolError);
  }
  SUBCASE("closed tcp port") {
    CHECK_THROWS_AS(open_transport("tcp:127.0.0.1:" + std::to_string(closed_port())), ProtocolError);
  }
  SUBCASE("bad transport spec") {
    CHECK_THROWS_AS(open_transport("carrier-pigeon:home"), ProtocolError);
    CHECK_THROWS_AS(open_transport("tcp:localhost"), ProtocolError);
  }
}

TEST_CASE("client works over tcp") {
  // The fake server prints its port on stdout, then accepts one connection.
  ChildProcessTransport launcher({FAKE_SERVER_PATH, "--mode", "ridge", "--port", "0"}, 5000);
  const int port = std::stoi(launcher.read_line());
  WireClient client(std::make_unique<TcpTransport>("127.0.0.1", static_cast<std::uint16_t>(port), 5000));
  client.ping();
  const std::vector<Vector> xs{vec({0}), vec({1}), vec({2})};
  const std::vector<double> ys{1, 3, 5};
  client.fit(xs, ys);
  const std::vector<Vector> q{vec({10})};
  CHECK(client.predict(q)[0] == doctest::Approx(21.0).epsilon(1e-6));
}

TEST_CASE("protocol_test passes against a conforming server") {
  for (const char* mode : {"ridge", "echo"}) {
    const bool ridge = std::string(mode) == "ridge";
    const auto checks = protocol_test(server(mode), ridge);
    CHECK(checks.size() == (ridge ? 9u : 8u));
    for (const auto& c : checks) {
      INFO(mode << " " << c.name << ": " << c.detail);
      CHECK(c.passed);
    }
  }
}

TEST_CASE("protocol_test reports a broken server") {
  const auto checks = protocol_test(server("garbage"), false);
  bool any_failed = false;
  for (const auto& c : checks) any_failed = any_failed || !c.passed;
  CHECK(any_failed);
}

TEST_CASE("a failing remote surrogate falls back to IDW for that iteration") {
  auto client = client_for("die-after-ping");
  client->ping();
  RemoteSurrogate remote(client);

  PlantedQuadratic objective = make_planted_quadratic(20, 3, {-1.0}, 5);
  Evaluator evaluate(objective, 1);
  GradientWindow window(4, 20);
  Rng rng(2);
  for (int i = 0; i < 4; ++i) {
    Vector g(20);
    for (Index j = 0; j < 20; ++j) g[j] = rng.normal();
    window.push(g);
  }
  SearchConfig cfg;
  cfg.rank = 3;
  cfg.initial_context = 4;
  cfg.inner_iterations = 2;
  cfg.candidates = 16;
  const auto result = run_round(Vector::Zero(20), window, evaluate, cfg, remote, rng);
  REQUIRE(result.trace.iterations.size() == 2);
  for (const auto& it : result.trace.iterations) {
    CHECK(it.fallback);
    CHECK(it.fallback_reason.find("die-after-ping") != std::string::npos);
  }
  CHECK(result.trace.rollout_count == 6);
}
