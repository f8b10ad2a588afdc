#include <doctest.h>

#include <filesystem>

#include "hadmc/baselines.hpp"
#include "hadmc/errors.hpp"
#include "helpers.hpp"

using namespace hadmc;
using hadmc::testing::make_spec;

TEST_CASE("greedy on a single nearby PoI observes then returns") {
  auto w = make_spec({{100, 0}}, {{0, 0}}, 4.0, 8.0);
  const auto r = greedy_schedule(w);
  REQUIRE(r.completed);
  REQUIRE(r.trace.size() == 2);
  CHECK(r.trace[0].kase == StageCase::obs);
  CHECK(r.trace[0].observe_t == 8.0);
  CHECK(r.trace[1].kase == StageCase::end);
  CHECK(r.ledger.charging == 0.0);
}

TEST_CASE("greedy recharges on a ring larger than one battery") {
  // a 4-PoI loop of ~1800 length units against a 1500-unit battery
  auto w = make_spec({{100, 600}, {600, 600}, {600, 100}, {300, 100}}, {{100, 100}, {600, 550}, {600, 150}});
  const auto r = greedy_schedule(w);
  int charges = 0;
  for (const auto& e : r.trace) {
    charges += e.kase == StageCase::chg;
    CHECK(e.energy_after >= 0.0);
    CHECK(e.energy_after <= 60.0 + 1e-9);
  }
  CHECK(charges == 1);
  CHECK(r.completed);
  CHECK(r.trace[2].to.x == 600.0);
  CHECK(r.trace[2].to.y == 550.0);
}

TEST_CASE("greedy keeps no reserve and can strand itself") {
  // at (600,600) with 8 units left both chargers are 10 units away
  auto w = make_spec({{100, 600}, {600, 600}, {600, 100}, {300, 100}}, {{100, 100}, {600, 350}, {350, 600}});
  const auto r = greedy_schedule(w);
  CHECK_FALSE(r.completed);
  REQUIRE(r.trace.size() == 3);
  CHECK(r.trace[2].kase == StageCase::fail);
  CHECK(r.trace[2].reward == doctest::Approx(-40.0));
}

TEST_CASE("greedy is deterministic and never picks an unreachable charger") {
  for (int seed = 0; seed < 30; ++seed) {
    const auto spec = generate_deployment(seed % 2 ? DeploymentType::A : DeploymentType::R, 10, 4, {}, seed);
    const auto a = greedy_schedule(spec);
    const auto b = greedy_schedule(spec);
    CHECK(trace_to_csv(a.trace) == trace_to_csv(b.trace));

    GreedyController g;
    auto s = reset(spec);
    while (s.terminal == Terminal::running && s.stage_count < 40) {
      const auto act = g.decide(s, spec);
      if (act.a == 0) {
        const auto reach = reachable_chargers(s, spec);
        CHECK(std::find(reach.begin(), reach.end(), act.a_tilde) != reach.end());
      } else if (s.next_poi < spec.n()) {
        CHECK(act.tau == spec.pois[s.next_poi].tau_max);
      }
      s = apply_action(s, spec, act).state;
      CHECK(s.drone.energy >= 0.0);
    }
  }
}

TEST_CASE("direct bins and snapping") {
  CHECK(direct_bin(-1.0, 4) == 0);
  CHECK(direct_bin(1.0, 4) == 7);
  for (int b = 0; b < 8; ++b) {
    const double lo = -1.0 + b * 0.25;
    CHECK(direct_bin(lo + 1e-9, 4) == b);
    CHECK(direct_bin(lo + 0.25 - 1e-9, 4) == b);
  }
  CHECK(snap_to_feasible(3, {1, 5}) == 1);
  CHECK(snap_to_feasible(4, {1, 5}) == 5);
  CHECK(snap_to_feasible(2, {2}) == 2);
  CHECK_THROWS_AS(snap_to_feasible(2, {}), ContractViolation);
}

TEST_CASE("dqn action ids") {
  CHECK(dqn_action_id(6, 2) == 20);
  CHECK(dqn_split(20) == std::pair{6, 2});
  const auto joint = [] {
    auto w = make_spec({{100, 0}, {200, 0}}, {{0, 0}, {0, 100}, {100, 100}, {200, 100}}, 4.0, 8.0);
    return std::pair{w, reset(w)};
  }();
  const auto& [w, s] = joint;
  const auto ids = dqn_feasible_ids(s, w);
  CHECK(ids.size() == 24);
  const auto act = dqn_joint_action(6 * 3 + 2, s, w);
  CHECK(act.a == 1);
  CHECK(act.a_tilde == 2);
  CHECK(act.tau == 8.0);
  CHECK(dqn_joint_action(4 * 3 + 0, s, w).tau == 4.0);
  const auto chg = dqn_joint_action(1 * 3 + 1, s, w);
  CHECK(chg.a == 0);
  CHECK(chg.tau_tilde == 6.0);

  std::vector<float> q(24, 0.0f);
  q[5] = 3.0f;
  q[9] = 3.0f;
  CHECK(DqnController::best_id(q.data(), {9, 5, 1}) == 5);
  CHECK(DqnController::best_id(q.data(), {1, 2}) == 1);
}

TEST_CASE("dqn trains end to end and reloads") {
  ScenarioConfig sc;
  sc.n = 4;
  sc.m = 3;
  sc.train_count = 3;
  sc.eval_count = 2;
  sc.test_count = 2;
  ModelConfig model;
  model.kind = ModelKind::dqn_disc;
  model.hidden = {16, 16};
  TrainConfig t;
  t.n_mu = 200;
  t.b_mu = 16;
  t.policy_buffer = 100;
  t.warmup_steps = 20;
  t.eval_every = 100;
  t.eval_episodes = 2;
  t.log_every = 50;
  DqnTrainer a(sc, model, t);
  a.run_all();
  CHECK(a.report().rows.size() == 2);
  CHECK(a.epsilon(0) == 1.0);
  CHECK(a.epsilon(100) == doctest::Approx(0.05));
  CHECK(a.epsilon(50) == doctest::Approx(1.0 - 0.95 * 0.5));

  DqnTrainer b(sc, model, t);
  b.run_all();
  CHECK(a.qnet().same_parameters(b.qnet()));

  const auto dir = std::filesystem::temp_directory_path() / "hadmc_test_dqn";
  a.write_checkpoints(dir);
  const auto c = load_controller(dir);
  const auto spec = make_deployments(sc, DeploymentSet::test).front();
  CHECK(run_episode(*c, spec, {}).total_reward == run_episode(DqnController(a.qnet()), spec, {}).total_reward);
}

TEST_CASE("ablation configs") {
  const auto abl = ablation_configs();
  REQUIRE(abl.size() == 2);
  CHECK(abl[0].kind == ModelKind::hadmc_minus_aae);
  CHECK(abl[1].kind == ModelKind::hadmc_minus_ml);
  CHECK_FALSE(codec_config_for(abl[0], 4, 73, 4e-5).use_aae);
  CHECK_FALSE(codec_config_for(abl[1], 4, 73, 4e-5).mutual_learning);
  CHECK(codec_config_for(abl[1], 4, 73, 4e-5).use_aae);
}
