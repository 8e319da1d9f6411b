// Smallest useful training loop: the scheduled condition on the chain task,
// printing per-episode stats. Mirrors what `idex run` automates.

#include <cstdio>

#include "idex/agent.hpp"
#include "idex/env.hpp"

int main() {
  auto env = idex::make_environment("chain", 0.0);
  idex::AgentConfig config;
  config.mode = idex::BonusMode::Scheduled;
  idex::Agent agent(env->spec(), config, /*seed=*/1);

  for (int episode = 1; episode <= 40; ++episode) {
    const idex::EpisodeStats st = agent.train_episode(*env);
    std::printf("episode %3d  return %6.2f  zeta %.3f  r_d %.4f  r_b %.4f\n",
                episode, st.task_return, st.zeta_mean, st.dfs_bonus_mean,
                st.bfs_bonus_mean);
  }

  const auto eval = agent.evaluate(*env, 20);
  std::printf("deterministic eval over 20 episodes: %.2f (SD %.2f)\n",
              eval.mean, eval.sd);
  return 0;
}
