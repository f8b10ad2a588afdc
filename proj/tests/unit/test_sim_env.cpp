#include <doctest.h>

#include <random>

#include "hadmc/action_codec.hpp"
#include "hadmc/episode.hpp"
#include "hadmc/errors.hpp"
#include "hadmc/sim_env.hpp"
#include "helpers.hpp"

using namespace hadmc;
using hadmc::testing::make_spec;

TEST_CASE("reset places both agents at the depot with a full battery") {
  const auto spec = generate_deployment(DeploymentType::A, 10, 4, {}, 3);
  const auto s = reset(spec);
  CHECK(s.drone.energy == 60.0);
  CHECK(s.drone.position == spec.depot());
  CHECK(s.charger.position == spec.depot());
  CHECK(s.drone_clock == 0.0);
  CHECK(s.charger.clock == 0.0);
  CHECK(s.next_poi == 0);
  CHECK(s.terminal == Terminal::running);
  CHECK(reset(spec) == s);

  Episode ep(spec);
  std::mt19937_64 rng(1);
  while (!ep.done()) ep.step(testing::random_action(ep.state(), spec, rng));
  ep.reset();
  CHECK(ep.state() == s);
}

TEST_CASE("reachable chargers") {
  const auto spec = generate_deployment(DeploymentType::R, 10, 4, {}, 8);
  auto s = reset(spec);
  CHECK(reachable_chargers(s, spec) == std::vector<int>{0, 1, 2, 3});

  auto world = make_spec({{300, 0}}, {{0, 0}, {100, 0}});
  s = reset(world);
  s.drone.energy = 0.0;
  CHECK(reachable_chargers(s, world) == std::vector<int>{0});
  s.drone.position = {50, 0};
  CHECK(reachable_chargers(s, world).empty());
}

TEST_CASE("observe stage arithmetic") {
  auto world = make_spec({{100, 0}}, {{0, 0}}, 4.0, 8.0);
  const auto s = reset(world);
  const auto t = apply_observe(s, world, 6.0, 0);
  CHECK(t.outcome.trace.flight_t == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(t.state.drone.energy == doctest::Approx(50.0).epsilon(1e-15));
  CHECK(t.state.drone_clock == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(t.state.next_poi == 1);
  CHECK(t.outcome.kase == StageCase::obs);
  CHECK(t.state.assigned_tau[0] == 6.0);

  SUBCASE("return leg after the last PoI") {
    auto home = t.state;
    home.drone.energy = 10.0;
    const auto r = apply_observe(home, world, 0.0, 3 % 1);
    CHECK(r.state.terminal == Terminal::completed);
    CHECK(r.state.drone.energy == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(r.outcome.kase == StageCase::end);
  }
  SUBCASE("depletion on the way fails") {
    auto low = s;
    low.drone.energy = 3.0;
    const auto r = apply_observe(low, world, 6.0, 0);
    CHECK(r.state.terminal == Terminal::failed);
    CHECK(r.outcome.kase == StageCase::fail);
    CHECK(r.state.drone.energy == 0.0);
  }
  CHECK_THROWS_AS(apply_observe(s, world, 3.0, 0), ContractViolation);
  auto done = t.state;
  done.terminal = Terminal::failed;
  CHECK_THROWS_AS(apply_observe(done, world, 6.0, 0), ContractViolation);
}

TEST_CASE("charge stage arithmetic") {
  auto world = make_spec({{100, 0}, {500, 500}}, {{0, 0}, {100, 100}});
  auto s = reset(world);
  s.drone.position = {100, 0};
  s.drone.energy = 50.0;
  s.charger.position = {100, 100};
  const auto t = apply_charge(s, world, 1, 2.3334);
  CHECK(t.state.drone.energy == doctest::Approx(60.0).epsilon(1e-12));
  CHECK(t.state.charge_records[1] == doctest::Approx(14.0 / 6.0).epsilon(1e-12));
  CHECK(t.outcome.elapsed == doctest::Approx(4.0 + 14.0 / 6.0).epsilon(1e-12));

  const auto pure = apply_charge(s, world, 1, 0.0);
  CHECK(pure.state.drone.energy == doctest::Approx(46.0).epsilon(1e-12));

  // charger 141.42 away at speed 10, drone 100 away at speed 25
  auto far = s;
  far.charger.position = {0, 0};
  far.drone.position = {0, 100};
  auto w2 = make_spec({{100, 0}}, {{0, 0}, {100, 100}});
  const auto rv = apply_charge(far, w2, 1, 0.0);
  CHECK(rv.outcome.trace.wait_t == doctest::Approx(std::sqrt(2.0) * 10.0 - 4.0).epsilon(1e-12));
  CHECK(rv.state.ledger.wait == doctest::Approx(std::sqrt(2.0) * 10.0 - 4.0).epsilon(1e-12));

  CHECK_THROWS_AS(apply_charge(s, world, 1, -1.0), ContractViolation);
  auto empty = s;
  empty.drone.energy = 1.0;
  CHECK_THROWS_AS(apply_charge(empty, world, 0, 1.0), ContractViolation);

  // a huge request is clamped at capacity
  CHECK(apply_charge(s, world, 1, 1e9).state.drone.energy <= 60.0);
}

TEST_CASE("utility, importance, makespan and objective") {
  CHECK(utility_nu(3, 4, 8) == 0.0);
  CHECK(utility_nu(6, 4, 8) == 0.75);
  CHECK(utility_nu(9, 4, 8) == 1.0);

  auto w = make_spec({{1, 0}, {2, 0}, {3, 0}}, {{0, 0}});
  w.pois[0].tau_max = 6;
  w.pois[1].tau_max = 7;
  w.pois[2].tau_max = 8;
  CHECK(importance_zeta(0, w) == doctest::Approx(6.0 / 21.0));
  CHECK(importance_zeta(2, w) == doctest::Approx(8.0 / 21.0));
  double sum = 0.0;
  for (std::size_t i = 0; i < 3; ++i) sum += importance_zeta(i, w);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  const auto even = generate_deployment(DeploymentType::A, 10, 4, {}, 1);
  auto equal = even;
  for (auto& p : equal.pois) p.tau_max = 7;
  CHECK(importance_zeta(4, equal) == doctest::Approx(0.1));

  auto two = make_spec({{100, 0}, {200, 0}}, {{0, 0}});
  auto s = reset(two);
  CHECK(utility_sum(s, two) == 0.0);
  CHECK(makespan(s) == 0.0);
  s = apply_observe(s, two, 6.0, 0).state;
  CHECK(utility_sum(s, two) == doctest::Approx(0.5));
  CHECK(makespan(s) == doctest::Approx(10.0));
  CHECK_THROWS_AS(objective(s, two), ContractViolation);
  s = apply_observe(s, two, 6.0, 0).state;
  CHECK(utility_sum(s, two) == doctest::Approx(1.0));
  s = apply_observe(s, two, 0.0, 0).state;
  REQUIRE(s.terminal == Terminal::completed);
  CHECK(objective(s, two) == doctest::Approx(1.0 / (4 + 6 + 4 + 6 + 8)));

  // doubled distances lower the objective
  auto wide = make_spec({{200, 0}, {400, 0}}, {{0, 0}});
  auto ws = reset(wide);
  for (double tau : {6.0, 6.0, 0.0}) ws = apply_observe(ws, wide, tau, 0).state;
  CHECK(objective(ws, wide) < objective(s, two));
}

TEST_CASE("state encoding") {
  auto spec = generate_deployment(DeploymentType::A, 10, 4, {}, 2);
  CHECK(state_dim(10, 4) == 73);
  auto s = reset(spec);
  auto v = encode_state(s, spec);
  REQUIRE(v.size() == 73);
  CHECK(v[5] == 1.0f);
  for (std::size_t i = 0; i < 10; ++i) CHECK(v[10 + 5 * i + 4] == 0.0f);
  s = apply_observe(s, spec, 6.0, 0).state;
  v = encode_state(s, spec);
  CHECK(v[14] == doctest::Approx(0.6f));
  CHECK(v.back() == doctest::Approx(0.1f));
}

TEST_CASE("random-trace invariants and replay determinism") {
  for (auto type : {DeploymentType::A, DeploymentType::R}) {
    for (int seed = 0; seed < 40; ++seed) {
      const auto spec = generate_deployment(type, 10, 4, {}, seed);
      std::mt19937_64 rng(static_cast<std::uint64_t>(seed) * 7 + 1);
      auto s = reset(spec);
      std::vector<JointAction> actions;
      double prev_clock = 0.0;
      TimeLedger prev{};
      std::size_t prev_i = 0;
      while (s.terminal == Terminal::running && s.stage_count < default_max_stages(spec.n())) {
        const auto a = testing::random_action(s, spec, rng);
        actions.push_back(a);
        s = apply_action(s, spec, a).state;
        CHECK(s.drone.energy >= 0.0);
        CHECK(s.drone.energy <= s.drone.capacity + 1e-9);
        CHECK(s.drone_clock >= prev_clock);
        CHECK(s.ledger.flight >= prev.flight);
        CHECK(s.ledger.observing >= prev.observing);
        CHECK(s.ledger.charging >= prev.charging);
        CHECK(s.ledger.wait >= prev.wait);
        CHECK(s.ledger.total() == doctest::Approx(s.drone_clock).epsilon(1e-12));
        CHECK(s.next_poi >= prev_i);
        CHECK(s.next_poi <= prev_i + 1);
        prev_clock = s.drone_clock;
        prev = s.ledger;
        prev_i = s.next_poi;
      }
      if (s.terminal == Terminal::completed) {
        for (std::size_t i = 0; i < spec.n(); ++i) {
          CHECK(s.assigned_tau[i] >= spec.pois[i].tau_min);
          CHECK(s.assigned_tau[i] <= spec.pois[i].tau_max);
        }
      }
      auto r = reset(spec);
      for (const auto& a : actions) r = apply_action(r, spec, a).state;
      CHECK(r == s);
    }
  }
}

TEST_CASE("episode stage cap fails a looping schedule") {
  auto world = make_spec({{100, 0}}, {{0, 0}});
  Episode ep(world);
  JointAction stay;
  stay.a = 0;
  stay.a_tilde = 0;
  stay.a_dis = 0;
  while (!ep.done()) ep.step(stay);
  CHECK(ep.state().terminal == Terminal::failed);
  CHECK(ep.state().stage_count == ep.max_stages());
  CHECK(ep.trace().back().reward == doctest::Approx(-20.0));
}
