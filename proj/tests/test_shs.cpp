#include "aoi/closedform.hpp"
#include "aoi/shs.hpp"

#include <doctest.h>

#include <random>

using namespace aoi;
using aoi::shs::ShsChain;

namespace {

const std::string kFixtures = AOI_FIXTURES;

Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd m(rows.size(), rows.begin()->size());
  int i = 0;
  for (const auto& r : rows) {
    int j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

const Eigen::MatrixXd kFresh = mat({{1, 0}, {0, 0}});
const Eigen::MatrixXd kKeep = mat({{1, 0}, {0, 1}});
const Eigen::MatrixXd kDeliver = mat({{0, 0}, {1, 0}});

template <typename Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::InvalidParameter;
}

void check_edge(const shs::Transition& t, int from, int to, double rate, const Eigen::MatrixXd& reset) {
  CHECK(t.from == from);
  CHECK(t.to == to);
  CHECK(t.rate == doctest::Approx(rate));
  CHECK(t.reset == reset);
}

}  // namespace

TEST_CASE("policy I, WP chain with failures has the six table rows") {
  const auto c = shs::build_chain({Policy::I, Scheme::WP}, 1.0, 1.0, 0.5, 1.0);
  REQUIRE(c.transitions.size() == 6);
  CHECK(c.n_states == 3);
  CHECK(c.age_dim == 2);
  check_edge(c.transitions[0], 0, 1, 1.0, kFresh);
  check_edge(c.transitions[1], 1, 2, 1.0, kKeep);
  check_edge(c.transitions[2], 1, 1, 1.0, kFresh);
  check_edge(c.transitions[3], 2, 0, 0.5, kDeliver);
  check_edge(c.transitions[4], 2, 0, 0.5, kKeep);
  check_edge(c.transitions[5], 2, 2, 1.0, kFresh);
  CHECK(c.growth == mat({{1, 0}, {1, 1}, {1, 1}}));
}

TEST_CASE("p = 1 drops the failure edge") {
  CHECK(shs::build_chain({Policy::I, Scheme::WP}, 1.0, 1.0, 1.0, 1.0).transitions.size() == 5);
  CHECK(shs::build_chain({Policy::S, Scheme::WOP}, 1.0, 1.0, 1.0, 1.0).transitions.size() == 4);
}

TEST_CASE("failure edge destination depends on the policy") {
  const auto w = shs::build_chain({Policy::W, Scheme::WOP}, 1.0, 1.0, 0.5, 1.0);
  REQUIRE(w.transitions.size() == 5);
  check_edge(w.transitions[4], 2, 1, 0.5, kKeep);
  const auto s = shs::build_chain({Policy::S, Scheme::WOP}, 1.0, 1.0, 0.5, 1.0);
  check_edge(s.transitions[4], 2, 2, 0.5, kKeep);
  const auto i = shs::build_chain({Policy::I, Scheme::WOP}, 1.0, 1.0, 0.5, 1.0);
  check_edge(i.transitions[4], 2, 0, 0.5, kKeep);
}

TEST_CASE("non-positive rates are rejected") {
  CHECK(kind_of([] { shs::build_chain({Policy::I, Scheme::WP}, 0.0, 1.0, 0.5, 1.0); }) == ErrorKind::DegenerateRate);
  CHECK(kind_of([] { shs::build_chain({Policy::I, Scheme::WP}, 1.0, 1.0, 0.5, -1.0); }) == ErrorKind::DegenerateRate);
  CHECK(kind_of([] { shs::average_aoi({Policy::I, Scheme::WP}, 1.0, 1.0, 0.0, 1.0); }) == ErrorKind::DegenerateRate);
}

TEST_CASE("stationary distribution examples") {
  const auto sym = shs::stationary(shs::build_chain({Policy::I, Scheme::WP}, 1.0, 1.0, 1.0, 1.0));
  for (int q = 0; q < 3; ++q) CHECK(sym.pi(q) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  for (auto scheme : kSchemes) {
    const auto w = shs::stationary(shs::build_chain({Policy::W, scheme}, 1.0, 1.0, 0.5, 1.0));
    CHECK(w.idle() == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(w.waiting() == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(w.service() == doctest::Approx(0.4).epsilon(1e-14));
    const auto s = shs::stationary(shs::build_chain({Policy::S, scheme}, 1.0, 1.0, 0.5, 1.0));
    CHECK(s.idle() == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(s.waiting() == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(s.service() == doctest::Approx(0.5).epsilon(1e-14));
  }
}

TEST_CASE("age system examples") {
  for (auto [scheme, expected] : {std::pair{Scheme::WP, 2.75}, {Scheme::WOP, 3.5}}) {
    const auto c = shs::build_chain({Policy::I, scheme}, 1.0, 1.0, 1.0, 1.0);
    const auto sol = shs::solve_age_system(c, shs::stationary(c));
    CHECK(sol.avg_aoi == doctest::Approx(expected).epsilon(1e-13));
    CHECK(sol.v.col(0).sum() == sol.avg_aoi);
    CHECK(sol.v.minCoeff() >= 0.0);
  }
  CHECK(shs::average_aoi({Policy::S, Scheme::WP}, 1.0, 1.0, 1.0, 1.0) == doctest::Approx(2.75).epsilon(1e-13));
}

TEST_CASE("isolated states make the age system singular") {
  ShsChain c;
  c.n_states = 3;
  c.age_dim = 2;
  c.growth = mat({{1, 0}, {1, 1}, {1, 1}});
  c.transitions.push_back({0, 0, 1.0, kFresh});
  const StationaryDistribution pi{Eigen::Vector3d(1.0, 0.0, 0.0)};
  CHECK(kind_of([&] { shs::solve_age_system(c, pi); }) == ErrorKind::SingularAgeSystem);
  CHECK(kind_of([&] { shs::stationary(c); }) == ErrorKind::NotIrreducible);
}

TEST_CASE("one-way chain is not irreducible") {
  ShsChain c;
  c.n_states = 2;
  c.age_dim = 1;
  c.growth = mat({{1}, {1}});
  c.transitions.push_back({0, 1, 1.0, mat({{1}})});
  CHECK(kind_of([&] { shs::stationary(c); }) == ErrorKind::NotIrreducible);
}

TEST_CASE("structural checks") {
  auto c = shs::build_chain({Policy::I, Scheme::WP}, 1.0, 1.0, 0.5, 1.0);
  c.growth(1, 0) = 0.0;
  CHECK(kind_of([&] { c.check(); }) == ErrorKind::InvalidChain);

  c = shs::build_chain({Policy::I, Scheme::WP}, 1.0, 1.0, 0.5, 1.0);
  c.transitions[0].reset(0, 1) = 0.5;
  CHECK(kind_of([&] { c.check(); }) == ErrorKind::InvalidChain);

  c = shs::build_chain({Policy::I, Scheme::WP}, 1.0, 1.0, 0.5, 1.0);
  c.transitions[0].to = 7;
  CHECK(kind_of([&] { c.check(); }) == ErrorKind::InvalidChain);

  c = shs::build_chain({Policy::I, Scheme::WP}, 1.0, 1.0, 0.5, 1.0);
  c.transitions[0].rate = 0.0;
  CHECK(kind_of([&] { c.check(); }) == ErrorKind::DegenerateRate);
}

TEST_CASE("cross-check against the closed forms at the AoI-vs-p parameters") {
  const PolicyScheme ps{Policy::W, Scheme::WP};
  const double solved = shs::average_aoi(ps, 0.9, 1.0, 0.6, 2.0);
  const double formula = closedform::avg_aoi_total(ps, 0.9, 1.0, 2.0, 0.6);
  CHECK(std::abs(solved - formula) / formula < 1e-9);
}

TEST_CASE("random grid: stationary closed forms, nonnegative v, WP and WOP share pi") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> rate(0.1, 5.0);
  std::uniform_real_distribution<double> prob(0.05, 1.0);
  for (int i = 0; i < 300; ++i) {
    const double l = rate(gen), m = rate(gen), k = rate(gen), p = prob(gen);
    for (auto policy : kPolicies) {
      const auto wp = shs::build_chain({policy, Scheme::WP}, l, m, p, k);
      const auto wop = shs::build_chain({policy, Scheme::WOP}, l, m, p, k);
      const auto pi_wp = shs::stationary(wp);
      const auto pi_wop = shs::stationary(wop);
      const auto expected = closedform::stationary(policy, l, m, k, p);
      CHECK((pi_wp.pi - expected).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((pi_wp.pi - pi_wop.pi).cwiseAbs().maxCoeff() < 1e-12);
      for (const auto* c : {&wp, &wop}) {
        const auto sol = shs::solve_age_system(*c, shs::stationary(*c));
        CHECK(sol.v.minCoeff() >= 0.0);
        const double formula = closedform::avg_aoi_total(PolicyScheme{policy, c == &wp ? Scheme::WP : Scheme::WOP},
                                                         l, m, k, p);
        CHECK(std::abs(sol.avg_aoi - formula) / formula < 1e-9);
      }
    }
  }
}

TEST_CASE("hand-written fixture: preemptive LCFS single server") {
  // one discrete state, arrivals at rate 1 reset the packet age, deliveries at
  // rate 2 copy it to the receiver; known average AoI 1/lambda + 1/mu
  const auto c = shs::load_chain(kFixtures + "/lcfs_preemptive.json");
  CHECK(c.n_states == 1);
  CHECK(c.age_dim == 2);
  const auto sol = shs::solve_age_system(c, shs::stationary(c));
  CHECK(sol.pi.pi(0) == doctest::Approx(1.0));
  CHECK(sol.avg_aoi == doctest::Approx(1.0 + 0.5).epsilon(1e-13));
}

TEST_CASE("hand-written fixture: blocking single server") {
  // 1/lambda + 2/mu - 1/(lambda + mu) with lambda = 0.5, mu = 1.5
  const auto c = shs::load_chain(kFixtures + "/blocking_queue.json");
  const auto sol = shs::solve_age_system(c, shs::stationary(c));
  CHECK(sol.avg_aoi == doctest::Approx(2.0 + 2.0 / 1.5 - 0.5).epsilon(1e-13));
  CHECK(sol.v.minCoeff() >= 0.0);
}

TEST_CASE("fixture with a non-growing receiver age is rejected") {
  CHECK(kind_of([] { shs::load_chain(kFixtures + "/bad_growth.json"); }) == ErrorKind::InvalidChain);
  CHECK(kind_of([] { shs::load_chain(kFixtures + "/missing.json"); }) == ErrorKind::InvalidChain);
  CHECK(kind_of([] { shs::chain_from_json("{not json"); }) == ErrorKind::InvalidChain);
  CHECK(kind_of([] { shs::chain_from_json(R"({"states": 1, "growth": [[1]]})"); }) == ErrorKind::InvalidChain);
}

TEST_CASE("JSON round trip preserves the chain") {
  for (const auto& ps : kAllPolicySchemes) {
    const auto c = shs::build_chain(ps, 0.9, 1.3, 0.6, 2.0);
    const auto back = shs::chain_from_json(shs::chain_to_json(c));
    CHECK(back.n_states == c.n_states);
    CHECK(back.age_dim == c.age_dim);
    CHECK(back.growth == c.growth);
    REQUIRE(back.transitions.size() == c.transitions.size());
    for (std::size_t i = 0; i < c.transitions.size(); ++i) {
      CHECK(back.transitions[i].from == c.transitions[i].from);
      CHECK(back.transitions[i].to == c.transitions[i].to);
      CHECK(back.transitions[i].rate == c.transitions[i].rate);
      CHECK(back.transitions[i].reset == c.transitions[i].reset);
    }
  }
}
