#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tdanet/embed/catalog.hpp"
#include "tdanet/sim/agent.hpp"
#include "tdanet/sim/camera.hpp"
#include "tdanet/sim/episode.hpp"
#include "tdanet/sim/generate.hpp"
#include "tdanet/sim/parents.hpp"
#include "tdanet/sim/paths.hpp"
#include "tdanet/sim/reward.hpp"
#include "tdanet/sim/scene.hpp"
#include "test_support.hpp"

using namespace tdanet;
using namespace tdanet::sim;

namespace {

Scene empty_scene(int w, int h) {
  Scene s;
  s.id = "toy";
  s.width = w;
  s.height = h;
  s.blocked.assign(static_cast<std::size_t>(w * h), 0);
  return s;
}

ObjectInstance child_at(const std::string& cls, double x, double y, double z = 0.8, double size = 0.15) {
  return {cls, x, y, z, size, false};
}

ObjectInstance parent_at(const std::string& cls, double x, double y, double z = 0.4, double size = 1.0) {
  return {cls, x, y, z, size, true};
}

// Independent grid dynamics used by the path oracle.
AgentPose oracle_move(const Scene& s, AgentPose p, int action) {
  static const int di[8] = {1, 1, 0, -1, -1, -1, 0, 1};
  static const int dj[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  switch (action) {
    case 0: {
      const int k = p.heading / 45;
      const int ni = p.i + di[k], nj = p.j + dj[k];
      if (ni >= 0 && nj >= 0 && ni < s.width && nj < s.height && s.blocked[static_cast<std::size_t>(nj * s.width + ni)] == 0) {
        p.i = ni;
        p.j = nj;
      }
      break;
    }
    case 1: p.heading = (p.heading + 315) % 360; break;
    case 2: p.heading = (p.heading + 45) % 360; break;
    case 3: p.pitch = std::min(30, p.pitch + 30); break;
    case 4: p.pitch = std::max(-30, p.pitch - 30); break;
  }
  return p;
}

struct PoseLess {
  bool operator()(const AgentPose& a, const AgentPose& b) const {
    return std::tie(a.i, a.j, a.heading, a.pitch) < std::tie(b.i, b.j, b.heading, b.pitch);
  }
};

// Enumerates every action sequence up to `depth`, collapsed to the set of
// poses reachable after exactly k actions. No visited pruning.
std::optional<int> brute_force_length(const Scene& s, const AgentPose& start, const std::string& target, int depth) {
  auto sees = [&](const AgentPose& p) {
    for (std::size_t k = 0; k < s.objects.size(); ++k) {
      if (s.objects[k].cls == target && is_visible(s, p, k, CameraConfig{})) return true;
    }
    return false;
  };
  std::set<AgentPose, PoseLess> layer{start};
  for (int k = 0; k <= depth; ++k) {
    for (const auto& p : layer) {
      if (sees(p)) return k;
    }
    std::set<AgentPose, PoseLess> next;
    for (const auto& p : layer)
      for (int a = 0; a < 5; ++a) next.insert(oracle_move(s, p, a));
    layer = std::move(next);
  }
  return std::nullopt;
}

// Shortest action script to a pose seeing the target, then Done.
std::vector<int> scripted_path(const Scene& s, const AgentPose& start, const std::string& target) {
  std::map<AgentPose, std::pair<AgentPose, int>, PoseLess> prev;
  std::vector<AgentPose> frontier{start};
  prev[start] = {start, -1};
  auto sees = [&](const AgentPose& p) { return class_visible(s, p, target, CameraConfig{}); };
  std::optional<AgentPose> goal;
  if (sees(start)) goal = start;
  while (!goal && !frontier.empty()) {
    std::vector<AgentPose> next;
    for (const auto& p : frontier) {
      for (int a = 0; a < 5 && !goal; ++a) {
        const AgentPose q = oracle_move(s, p, a);
        if (prev.count(q) != 0) continue;
        prev[q] = {p, a};
        if (sees(q)) goal = q;
        next.push_back(q);
      }
    }
    frontier = std::move(next);
  }
  std::vector<int> actions;
  if (!goal) return actions;
  for (AgentPose cur = *goal; !(cur == start); cur = prev[cur].first) actions.insert(actions.begin(), prev[cur].second);
  actions.push_back(static_cast<int>(Action::Done));
  return actions;
}

Policy scripted_policy(std::vector<int> actions) {
  auto idx = std::make_shared<std::size_t>(0);
  return [actions = std::move(actions), idx](std::span<const Detection>) {
    const int a = *idx < actions.size() ? actions[*idx] : static_cast<int>(Action::RotateLeft);
    ++*idx;
    return PolicyDecision{a, std::nullopt};
  };
}

std::vector<Scene> corpus(int n, std::uint64_t seed0 = 100) {
  std::vector<Scene> out;
  for (int k = 0; k < n; ++k) out.push_back(generate_scene(embed::default_catalog(), GenConfig{}, seed0 + k));
  return out;
}

}  // namespace

TEST(Dynamics, MoveAheadFollowsHeading) {
  const Scene s = empty_scene(5, 5);
  const StepResult r = step_dynamics(s, {2, 2, 0, 0}, Action::MoveAhead);
  EXPECT_EQ(r.pose, (AgentPose{3, 2, 0, 0}));
  EXPECT_FALSE(r.collided);
  EXPECT_EQ(step_dynamics(s, {2, 2, 45, 0}, Action::MoveAhead).pose, (AgentPose{3, 3, 45, 0}));
  EXPECT_EQ(step_dynamics(s, {2, 2, 270, 0}, Action::MoveAhead).pose, (AgentPose{2, 1, 270, 0}));
}

TEST(Dynamics, RotationsAndPitchClamp) {
  const Scene s = empty_scene(5, 5);
  AgentPose p{1, 1, 0, 0};
  for (int k = 0; k < 4; ++k) p = step_dynamics(s, p, Action::RotateLeft).pose;
  EXPECT_EQ(p, (AgentPose{1, 1, 180, 0}));
  EXPECT_EQ(step_dynamics(s, {1, 1, 0, 0}, Action::RotateRight).pose.heading, 45);
  const StepResult up = step_dynamics(s, {1, 1, 0, 30}, Action::LookUp);
  EXPECT_EQ(up.pose.pitch, 30);
  EXPECT_FALSE(up.collided);
  EXPECT_EQ(step_dynamics(s, {1, 1, 0, -30}, Action::LookDown).pose.pitch, -30);
  EXPECT_EQ(step_dynamics(s, {1, 1, 0, 0}, Action::LookDown).pose.pitch, -30);
}

TEST(Dynamics, BlockedAndOutOfBoundsCollide) {
  Scene s = empty_scene(3, 3);
  s.set_blocked(1, 0, true);
  const StepResult wall = step_dynamics(s, {0, 0, 0, 0}, Action::MoveAhead);
  EXPECT_TRUE(wall.collided);
  EXPECT_EQ(wall.pose, (AgentPose{0, 0, 0, 0}));
  EXPECT_TRUE(step_dynamics(s, {0, 0, 180, 0}, Action::MoveAhead).collided);
}

TEST(Dynamics, NeverEntersBlockedCells) {
  const auto scenes = corpus(30);
  std::mt19937_64 rng(4);
  for (const Scene& s : scenes) {
    const auto free = s.free_cells();
    for (int trial = 0; trial < 300; ++trial) {
      const Cell c = free[rng() % free.size()];
      AgentPose p{c.i, c.j, static_cast<int>(rng() % 8) * 45, static_cast<int>(rng() % 3) * 30 - 30};
      for (int k = 0; k < 20; ++k) {
        p = step_dynamics(s, p, action_from_index(static_cast<int>(rng() % 6))).pose;
        ASSERT_TRUE(s.is_free(p.i, p.j));
        ASSERT_NO_THROW(p.validate());
      }
    }
  }
}

TEST(Detect, OnAxisObjectIsCentred) {
  Scene s = empty_scene(12, 3);
  s.objects.push_back(child_at("cup", 0.125 + 2.0, 0.375, 1.5));
  const auto d = detect(s, {0, 1, 0, 0}, CameraConfig{});
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NEAR(d[0].x, 0.5, 1e-9);
  EXPECT_NEAR(d[0].y, 0.5, 1e-9);
}

TEST(Detect, RangeAndInverseSquareArea) {
  Scene s = empty_scene(30, 3);
  s.objects.push_back(child_at("cup", 0.125 + 1.0, 0.375, 1.5, 0.1));
  s.objects.push_back(child_at("mug", 0.125 + 2.0, 0.375, 1.5, 0.1));
  s.objects.push_back(child_at("bowl", 0.125 + 5.5, 0.375, 1.5, 0.1));
  const auto d = detect(s, {0, 1, 0, 0}, CameraConfig{});
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].cls, "cup");
  EXPECT_EQ(d[1].cls, "mug");
  EXPECT_NEAR(d[1].area / d[0].area, 0.25, 1e-12);
}

TEST(Detect, DeterministicAndSorted) {
  const auto scenes = corpus(10);
  for (const Scene& s : scenes) {
    for (const Cell& c : s.free_cells()) {
      const AgentPose p{c.i, c.j, 90, -30};
      const auto a = detect(s, p, CameraConfig{});
      const auto b = detect(s, p, CameraConfig{});
      ASSERT_EQ(a.size(), b.size());
      for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].cls, b[k].cls);
        EXPECT_EQ(a[k].x, b[k].x);
        EXPECT_NO_THROW(a[k].validate());
        if (k > 0) {
          EXPECT_LE(a[k - 1].depth, a[k].depth);
        }
      }
    }
  }
}

TEST(Detect, NoiseDropsAndJitters) {
  Scene s = empty_scene(20, 3);
  for (int k = 2; k < 9; ++k) s.objects.push_back(child_at("cup", 0.125 + 0.5 * k, 0.375, 1.0));
  CameraConfig cam;
  cam.drop_prob = 0.5;
  cam.jitter_sigma = 0.05;
  std::mt19937_64 rng(1);
  std::size_t total = 0;
  for (int t = 0; t < 200; ++t) {
    auto d = detect(s, {0, 1, 0, 0}, cam);
    apply_detection_noise(d, cam, rng);
    total += d.size();
    for (const auto& det : d) EXPECT_NO_THROW(det.validate());
  }
  EXPECT_NEAR(static_cast<double>(total) / (200.0 * 7.0), 0.5, 0.05);
}

TEST(Visibility, DistanceAndFrustum) {
  Scene s = empty_scene(12, 5);
  s.objects.push_back(child_at("cup", 0.125 + 1.0, 0.625, 1.2));
  s.objects.push_back(child_at("mug", 0.125 + 2.0, 0.625, 1.2));
  s.objects.push_back(child_at("bowl", 0.625 - 0.5, 0.625, 1.2));
  const AgentPose p{2, 2, 0, 0};
  // cup is 0.5 m ahead of (2,2); shift the agent back so it sits at 1.0 m.
  const AgentPose back{0, 2, 0, 0};
  EXPECT_TRUE(is_visible(s, back, 0, CameraConfig{}));
  EXPECT_FALSE(is_visible(s, back, 1, CameraConfig{}));
  EXPECT_TRUE(project(s, back, s.objects[1], CameraConfig{}).in_view);
  EXPECT_FALSE(is_visible(s, p, 2, CameraConfig{}));
  EXPECT_LE(ground_distance(s, p, s.objects[2]), 1.5);
}

TEST(Generate, SameSeedSameScene) {
  const auto cat = embed::default_catalog();
  const Scene a = generate_scene(cat, GenConfig{}, 42, "s");
  const Scene b = generate_scene(cat, GenConfig{}, 42, "s");
  EXPECT_EQ(scene_to_text(a), scene_to_text(b));
  EXPECT_NE(scene_to_text(a), scene_to_text(generate_scene(cat, GenConfig{}, 43, "s")));
}

TEST(Generate, ChildrenNearDesignatedParent) {
  const auto cat = embed::default_catalog();
  GenConfig cfg;
  cfg.cooccur_prob = 1.0;
  cfg.child_radius_m = 0.5;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Scene s = generate_scene(cat, cfg, seed);
    for (const auto& o : s.objects) {
      if (o.is_parent) continue;
      double best = 1e9;
      for (std::size_t k : s.instances_of(cat.at(o.cls).parent)) best = std::min(best, std::hypot(o.x - s.objects[k].x, o.y - s.objects[k].y));
      EXPECT_LE(best, 0.5 + 1e-9) << o.cls << " seed " << seed;
    }
  }
}

TEST(Generate, PropertySweep) {
  const auto cat = embed::default_catalog();
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Scene s;
    ASSERT_NO_THROW(s = generate_scene(cat, GenConfig{}, seed)) << seed;
    ASSERT_NO_THROW(s.validate());
    EXPECT_FALSE(s.free_cells().empty());
    for (const auto& o : s.objects) {
      EXPECT_EQ(o.is_parent, cat.at(o.cls).is_parent);
      if (!o.is_parent) {
        EXPECT_TRUE(s.has_class(cat.at(o.cls).parent)) << o.cls << " seed " << seed;
      }
    }
    if (seed % 50 == 0) {
      EXPECT_EQ(scene_from_text(scene_to_text(s)), s);
    }
  }
}

TEST(Generate, UnsatisfiableConfigErrors) {
  GenConfig cfg;
  cfg.min_width = cfg.max_width = 3;
  cfg.min_height = cfg.max_height = 3;
  cfg.min_parents = cfg.max_parents = 6;
  cfg.max_attempts = 50;
  EXPECT_THROW(generate_scene(embed::default_catalog(), cfg, 0), GenerationError);
  GenConfig bad;
  bad.cooccur_prob = 1.5;
  EXPECT_THROW(generate_scene(embed::default_catalog(), bad, 0), std::invalid_argument);
}

TEST(SceneFile, RoundTripThroughDisk) {
  const auto dir = tdanet::testing::temp_dir("scene_io");
  const Scene s = generate_scene(embed::default_catalog(), GenConfig{}, 9, "room-9");
  save_scene(s, dir / "room-9.json");
  EXPECT_EQ(load_scene(dir / "room-9.json"), s);
  const std::string text = scene_to_text(s);
  EXPECT_LT(text.find("\"version\""), text.find("\"grid\""));
  EXPECT_LT(text.find("\"grid\""), text.find("\"objects\""));
  EXPECT_THROW(scene_from_text("{\"version\": 99}"), std::exception);
}

TEST(ParentTable, SingleAndSymmetricParents) {
  const auto cat = embed::default_catalog();
  Scene a = empty_scene(8, 8);
  a.objects = {parent_at("table", 1.0, 1.0), child_at("cup", 1.3, 1.0)};
  const ParentProbTable one = parent_prob_table({a}, cat);
  EXPECT_EQ(one.prob("cup", "table"), 1.0);
  Scene b = empty_scene(8, 8);
  b.objects = {parent_at("table", 1.0, 1.0), parent_at("sofa", 1.0, 1.6), child_at("cup", 1.0, 1.3)};
  const ParentProbTable two = parent_prob_table({b}, cat);
  EXPECT_NEAR(two.prob("cup", "table"), 0.5, 1e-9);
  EXPECT_NEAR(two.prob("cup", "sofa"), 0.5, 1e-9);
}

TEST(ParentTable, ThreeSceneToyMatchesHandComputation) {
  const auto cat = embed::default_catalog();
  Scene a = empty_scene(20, 20), b = empty_scene(20, 20), c = empty_scene(20, 20);
  a.objects = {child_at("cup", 1, 1), parent_at("table", 1, 2), parent_at("sofa", 4, 1)};
  b.objects = {child_at("cup", 0.5, 0.5), parent_at("table", 0.5, 1.0)};
  c.objects = {child_at("cup", 2, 2), child_at("cup", 3, 3), parent_at("table", 2, 4), parent_at("sofa", 2, 2.2)};
  const ParentProbTable t = parent_prob_table({a, b, c}, cat);
  // table: min distances 1, 0.5, sqrt(2) over three scenes; sofa: 3, 0.2 over two.
  const double table_score = 1.0 / ((1.0 + 0.5 + std::sqrt(2.0)) / 3.0 + 0.05);
  const double sofa_score = 1.0 / ((3.0 + 0.2) / 2.0 + 0.05);
  EXPECT_NEAR(t.prob("cup", "table"), table_score / (table_score + sofa_score), 1e-12);
  EXPECT_NEAR(t.prob("cup", "sofa"), sofa_score / (table_score + sofa_score), 1e-12);
  EXPECT_EQ(t.prob("cup", "bed"), 0.0);
}

TEST(ParentTable, OrphanTargetErrorsWithName) {
  Scene a = empty_scene(8, 8);
  a.objects = {child_at("apple", 1, 1)};
  try {
    parent_prob_table({a}, embed::default_catalog());
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("apple"), std::string::npos);
  }
}

TEST(ParentTable, RowsSumToOneOnCorpus) {
  const ParentProbTable t = parent_prob_table(corpus(40), embed::default_catalog());
  for (const auto& [target, row] : t.rows()) {
    double total = 0.0;
    for (const auto& [p, pr] : row) total += pr;
    EXPECT_NEAR(total, 1.0, 1e-9) << target;
  }
}

namespace {

struct RewardFixture {
  Scene scene = empty_scene(5, 5);
  ParentProbTable parents;

  RewardFixture() {
    scene.objects = {parent_at("table", 0.625, 1.125), child_at("cup", 0.625, 0.875), parent_at("sofa", 1.125, 0.125),
                     parent_at("bed", 0.125, 0.625), parent_at("counter", 1.125, 1.125)};
    scene.set_blocked(2, 4, true);
    parents = ParentProbTable(std::map<std::string, ParentProbTable::Row>{{"cup", {{"table", 0.4}, {"sofa", 0.6}}}});
  }
};

// Table-driven re-statement of the step reward.
double oracle_reward(const Scene& s, const std::string& target, const std::set<std::size_t>& paid_before, int action,
                     const std::vector<std::size_t>& visible, const ParentProbTable& table) {
  struct Branch {
    bool fires;
    double value;
  };
  double parent_sum = 0.0;
  bool new_parent = false;
  for (std::size_t k : visible) {
    const auto& o = s.objects[k];
    const double pr = o.is_parent ? table.prob(target, o.cls) : 0.0;
    if (pr > 0.0 && paid_before.count(k) == 0) {
      parent_sum += 5.0 * pr * 0.1;
      new_parent = true;
    }
  }
  bool target_seen = false;
  for (std::size_t k : visible) target_seen = target_seen || s.objects[k].cls == target;
  const bool done = action == static_cast<int>(Action::Done);
  const Branch branches[] = {
      {new_parent, parent_sum},
      {done && target_seen, 5.0},
  };
  double total = 0.0;
  bool any = false;
  for (const auto& b : branches) {
    if (b.fires) {
      total += b.value;
      any = true;
    }
  }
  return any ? total : -0.01;
}

}  // namespace

TEST(Reward, Examples) {
  RewardFixture f;
  EpisodeState st;
  st.scene = &f.scene;
  st.target = "cup";
  const std::vector<std::size_t> cup_only = {1};
  EXPECT_DOUBLE_EQ(reward(st, Action::Done, cup_only, f.parents), 5.0);
  EXPECT_TRUE(st.done && st.success);

  EpisodeState st2;
  st2.scene = &f.scene;
  st2.target = "cup";
  const std::vector<std::size_t> table_vis = {0};
  EXPECT_NEAR(reward(st2, Action::MoveAhead, table_vis, f.parents), 0.2, 1e-12);
  EXPECT_DOUBLE_EQ(reward(st2, Action::MoveAhead, table_vis, f.parents), -0.01);
  EXPECT_DOUBLE_EQ(reward(st2, Action::Done, table_vis, f.parents), -0.01);
  EXPECT_TRUE(st2.done);
  EXPECT_FALSE(st2.success);
}

TEST(Reward, ExhaustiveSweepMatchesOracle) {
  RewardFixture f;
  const std::vector<std::size_t> parent_ids = {0, 2, 3, 4};
  std::size_t checked = 0;
  for (const Cell& c : f.scene.free_cells())
    for (int h = 0; h < 360; h += 45)
      for (int pitch = -30; pitch <= 30; pitch += 30)
        for (int a = 0; a < 6; ++a)
          for (unsigned mask = 0; mask < 16; ++mask) {
            std::set<std::size_t> paid;
            for (std::size_t b = 0; b < 4; ++b) {
              if (mask & (1u << b)) paid.insert(parent_ids[b]);
            }
            const AgentPose before{c.i, c.j, h, pitch};
            const AgentPose after = step_dynamics(f.scene, before, action_from_index(a)).pose;
            const auto visible = visible_instances(f.scene, after, CameraConfig{});
            EpisodeState st;
            st.scene = &f.scene;
            st.pose = after;
            st.target = "cup";
            st.rewarded_parents = paid;
            const double got = reward(st, action_from_index(a), visible, f.parents);
            const double want = oracle_reward(f.scene, "cup", paid, a, visible, f.parents);
            ASSERT_NEAR(got, want, 1e-12) << c.i << "," << c.j << " h" << h << " p" << pitch << " a" << a;
            ASSERT_EQ(st.done, a == 5);
            for (std::size_t k : paid) ASSERT_TRUE(st.rewarded_parents.count(k));
            ++checked;
          }
  EXPECT_GT(checked, 10000u);
}

TEST(Reward, ParentRewardBoundedPerInstance) {
  const auto scenes = corpus(20);
  const ParentProbTable table = parent_prob_table(scenes, embed::default_catalog());
  Environment env{CameraConfig{}, RewardConfig{}, &table};
  std::mt19937_64 rng(2);
  for (const Scene& s : scenes) {
    const auto targets = s.child_classes();
    for (const auto& target : targets) {
      double bound = 0.0;
      for (const auto& o : s.objects) {
        if (o.is_parent) bound += 5.0 * table.prob(target, o.cls) * 0.1;
      }
      const auto free = s.free_cells();
      const Cell c = free[rng() % free.size()];
      auto random_policy = [&](std::span<const Detection>) { return PolicyDecision{static_cast<int>(rng() % 5), std::nullopt}; };
      const EpisodeRun run = run_episode(s, {c.i, c.j, 0, 0}, target, random_policy, 200, env);
      double parent_total = 0.0;
      for (const auto& st : run.trajectory) {
        if (st.reward > 0.0) parent_total += st.reward;
      }
      EXPECT_LE(parent_total, bound + 1e-12) << s.id << " " << target;
    }
  }
}

TEST(Paths, AlreadyVisibleIsZero) {
  Scene s = empty_scene(5, 5);
  s.objects = {child_at("cup", 0.125 + 1.0, 0.625, 1.2)};
  EXPECT_EQ(optimal_path_length(s, {0, 2, 0, 0}, "cup"), 0);
}

TEST(Paths, HandTracedCorridor) {
  // Target 2.0 m straight ahead: two MoveAhead bring it to 1.5 m.
  Scene s = empty_scene(12, 3);
  s.objects = {child_at("cup", 0.125 + 2.0, 0.375, 1.2)};
  EXPECT_EQ(optimal_path_length(s, {0, 1, 0, 0}, "cup"), 2);
  // Facing away adds four rotations.
  EXPECT_EQ(optimal_path_length(s, {0, 1, 180, 0}, "cup"), 6);
}

TEST(Paths, WalledOffIsUnreachable) {
  Scene s = empty_scene(10, 5);
  for (int j = 0; j < 5; ++j) s.set_blocked(2, j, true);
  s.objects = {child_at("cup", 8.5 * 0.25, 2.5 * 0.25)};
  EXPECT_FALSE(optimal_path_length(s, {0, 2, 180, 0}, "cup").has_value());
  EXPECT_FALSE(optimal_path_length(s, {0, 2, 0, 0}, "spatula").has_value());
}

TEST(Paths, MatchesBruteForceOnSmallScenes) {
  const auto cat = embed::default_catalog();
  GenConfig cfg;
  cfg.min_width = 4;
  cfg.max_width = 6;
  cfg.min_height = 4;
  cfg.max_height = 6;
  cfg.min_parents = 1;
  cfg.max_parents = 2;
  cfg.min_children = 1;
  cfg.max_children = 3;
  cfg.parent_min_separation_m = 0.5;
  std::mt19937_64 rng(77);
  int compared = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Scene s = generate_scene(cat, cfg, seed);
    const auto free = s.free_cells();
    for (const auto& target : s.child_classes()) {
      for (int trial = 0; trial < 3; ++trial) {
        const Cell c = free[rng() % free.size()];
        const AgentPose start{c.i, c.j, static_cast<int>(rng() % 8) * 45, static_cast<int>(rng() % 3) * 30 - 30};
        const auto bfs = optimal_path_length(s, start, target);
        const auto brute = brute_force_length(s, start, target, 12);
        if (bfs && *bfs <= 12) {
          EXPECT_EQ(brute, bfs) << "seed " << seed << " " << target;
        } else {
          EXPECT_FALSE(brute.has_value()) << "seed " << seed << " " << target;
        }
        ++compared;
      }
    }
  }
  EXPECT_GT(compared, 50);
}

TEST(RunEpisode, ScriptedOptimalPathSucceeds) {
  const auto scenes = corpus(10);
  const ParentProbTable table = parent_prob_table(scenes, embed::default_catalog());
  const Environment env{CameraConfig{}, RewardConfig{}, &table};
  std::mt19937_64 rng(5);
  int runs = 0;
  for (const Scene& s : scenes) {
    const auto free = s.free_cells();
    for (const auto& target : s.child_classes()) {
      const Cell c = free[rng() % free.size()];
      const AgentPose start{c.i, c.j, 0, 0};
      const auto l = optimal_path_length(s, start, target);
      if (!l) continue;
      const auto script = scripted_path(s, start, target);
      ASSERT_EQ(static_cast<int>(script.size()), *l + 1);
      const EpisodeRun run = run_episode(s, start, target, scripted_policy(script), 100, env);
      EXPECT_TRUE(run.result.success);
      EXPECT_EQ(run.result.actions, *l + 1);
      EXPECT_EQ(run.trajectory.size(), static_cast<std::size_t>(*l + 1));
      ++runs;
    }
  }
  EXPECT_GT(runs, 10);
}

TEST(RunEpisode, ImmediateDoneFailsAndCapStops) {
  Scene s = empty_scene(12, 3);
  s.objects = {child_at("cup", 0.125 + 2.5, 0.375), parent_at("table", 0.125 + 2.5, 0.625)};
  const ParentProbTable table(std::map<std::string, ParentProbTable::Row>{{"cup", {{"table", 1.0}}}});
  const Environment env{CameraConfig{}, RewardConfig{}, &table};
  const EpisodeRun quit = run_episode(s, {0, 1, 0, 0}, "cup", scripted_policy({5}), 100, env);
  EXPECT_FALSE(quit.result.success);
  EXPECT_EQ(quit.result.actions, 1);
  const EpisodeRun spin = run_episode(s, {0, 1, 0, 0}, "cup", scripted_policy({}), 17, env);
  EXPECT_FALSE(spin.result.success);
  EXPECT_EQ(spin.result.actions, 17);
  EXPECT_THROW(run_episode(s, {0, 1, 0, 0}, "cup", scripted_policy({9}), 10, env), std::out_of_range);
  EXPECT_THROW(run_episode(s, {0, 1, 0, 0}, "cup", scripted_policy({}), 0, env), std::invalid_argument);
}

TEST(RunEpisode, RecordsTraveledDistance) {
  Scene s = empty_scene(12, 3);
  s.objects = {child_at("cup", 2.9, 0.375)};
  const ParentProbTable table(std::map<std::string, ParentProbTable::Row>{{"cup", {}}});
  const Environment env{CameraConfig{}, RewardConfig{}, &table};
  const EpisodeRun run = run_episode(s, {0, 1, 0, 0}, "cup", scripted_policy({0, 0, 0, 5}), 10, env);
  EXPECT_NEAR(run.result.traveled_m, 0.75, 1e-12);
  EXPECT_EQ(run.final_pose, (AgentPose{3, 1, 0, 0}));
}
