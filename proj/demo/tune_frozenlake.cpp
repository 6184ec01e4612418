// Tunes alpha/gamma for deterministic 4x4 FrozenLake with a small FOX
// budget and prints the result next to a budget-matched random search.

#include <iostream>

#include "qfox/qfox.hpp"

int main() {
  qfox::TaskConfig task;  // 4x4 SFFF/FHFH/FFFH/HFFG, non-slippery
  qfox::Protocol protocol;
  protocol.population = 10;
  protocol.max_iter = 20;
  protocol.n_runs = 3;

  for (auto alg : {qfox::Algorithm::Fox, qfox::Algorithm::Random}) {
    qfox::OptimizerConfig opt;
    opt.algorithm = alg;
    const auto r = qfox::tune(opt, task, protocol, /*master_seed=*/7);
    std::cout << qfox::display_name(alg) << ": alpha=" << r.best_hp.alpha << " gamma=" << r.best_hp.gamma
              << " fitness=" << r.best_fitness << " last-quarter reward=" << r.mean_last_quarter_reward
              << " greedy reward=" << r.greedy_reward << '\n';
  }
}
