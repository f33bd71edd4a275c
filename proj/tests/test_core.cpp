#include <gtest/gtest.h>

#include "ctfrl/core.hpp"
#include "ctfrl/env/portscan.hpp"

namespace ctfrl {
namespace {

Trajectory with_rewards(std::initializer_list<double> rewards) {
  Trajectory t;
  t.action_count = 2;
  for (double r : rewards) t.transitions.push_back({StateKey{}, ActionId{0}, r, StateKey{}, false, false});
  return t;
}

TEST(EpisodeReturn, SumsRewardsUndiscounted) {
  EXPECT_EQ(episode_return(with_rewards({-1, 100})), 99.0);
  EXPECT_EQ(episode_return(with_rewards({-1, -1, -1, -1, -1})), -5.0);
}

TEST(EpisodeReturn, NineStepCaptureGivesNinetyTwo) {
  EXPECT_EQ(episode_return(with_rewards({-1, -1, -1, -1, -1, -1, -1, -1, 100})), 92.0);
}

TEST(EpisodeReturn, EmptyTrajectoryIsAnError) {
  EXPECT_THROW(
      {
        try {
          episode_return(Trajectory{});
        } catch (const Error& e) {
          EXPECT_STREQ(e.what(), "empty trajectory");
          throw;
        }
      },
      Error);
}

TEST(StateKey, OrdersLexicographicallyByBytes) {
  const auto a = StateKey::from_bytes({0x01});
  const auto b = StateKey::from_bytes({0x01, 0x00});
  const auto c = StateKey::from_bytes({0xFF});
  EXPECT_LT(a, b);
  EXPECT_LT(b, c);
  EXPECT_EQ(a, StateKey::from_bytes({0x01}));
}

TEST(EpisodicEnv, StepBeforeResetAndAfterDoneAreErrors) {
  PortScanEnv env({4, 0.0});
  EXPECT_THROW(env.step(PortScanEnv::scan()), Error);
  env.reset_with_flag(1, Rng(1));
  EXPECT_TRUE(env.step(PortScanEnv::exploit(1)).done);
  EXPECT_THROW(env.step(PortScanEnv::scan()), Error);
}

TEST(EpisodicEnv, TruncationIsReportedSeparatelyFromCapture) {
  PortScanEnv env({4, 0.0, 3});
  env.reset_with_flag(0, Rng(1));
  EXPECT_FALSE(env.step(PortScanEnv::exploit(1)).done);
  EXPECT_FALSE(env.step(PortScanEnv::exploit(1)).done);
  const auto out = env.step(PortScanEnv::exploit(1));
  EXPECT_TRUE(out.done);
  EXPECT_TRUE(out.truncated);
  EXPECT_FALSE(out.captured());
  EXPECT_EQ(out.reward, kStepReward);
}

TEST(EpisodicEnv, CaptureOnTheCapStepIsACapture) {
  PortScanEnv env({4, 0.0, 2});
  env.reset_with_flag(2, Rng(1));
  env.step(PortScanEnv::scan());
  const auto out = env.step(PortScanEnv::exploit(2));
  EXPECT_TRUE(out.captured());
  EXPECT_EQ(out.reward, kCaptureReward);
}

}  // namespace
}  // namespace ctfrl
