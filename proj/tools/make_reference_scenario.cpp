// Regenerates scenarios/reference.json from the seeded builder.
#include <iostream>

#include "laesim/scenario_gen.hpp"

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : "scenarios/reference.json";
  const auto cfg = laesim::world::build_reference_scenario();
  laesim::world::write_scenario(cfg, path);
  std::cout << "wrote " << path << " digest=" << laesim::world::scenario_digest(cfg)
            << " buildings=" << cfg.buildings->size() << '\n';
  return 0;
}
