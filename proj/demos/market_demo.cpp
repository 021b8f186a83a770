// Classifies a duopoly and an asymmetric market, then lets two UCB agents
// play 100 auctions and prints how often they ended up colluding.

#include <iostream>

#include "mpmg/experiment.hpp"

int main() {
  using namespace mpmg;

  for (const auto& betas : {PowerProfile::Homogeneous(2), PowerProfile({0.8, 0.2})}) {
    const auto g = ClassifyGame(betas, 1.3, 1.0);
    std::cout << "betas";
    for (double b : betas.values()) std::cout << ' ' << b;
    std::cout << " -> " << GameKindName(g.kind);
    if (g.witness) std::cout << " (agent " << g.witness->agent << " breaks " << g.witness->violated << ")";
    std::cout << "\n";
  }

  ExperimentSpec spec;
  spec.agent = AgentKind::kUcb;
  spec.replications = 10;
  const GridResult grid = RunCells({spec}, 2);
  const auto& s = grid.cells.front().outcomes;
  std::cout << spec.CellId() << " last episode: AllFP " << s.all_fp.back() << ", AllCP " << s.all_cp.back()
            << ", Other " << s.other.back() << "\n";
  return grid.ok() ? 0 : 1;
}
