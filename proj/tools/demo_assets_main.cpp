#include <CLI11.hpp>

#include <iostream>

#include "demo_assets.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a small synthetic background, signature database and example configs"};
  std::string out;
  int width = 640, height = 512;
  std::uint64_t seed = 1;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--width", width, "Background width");
  app.add_option("--height", height, "Background height");
  app.add_option("--seed", seed, "Seed");
  CLI11_PARSE(app, argc, argv);
  try {
    const auto layout = irscene::demo::write_demo_assets(out, width, height, seed);
    std::cout << "scenario:   " << layout.scenario.string() << "\n"
              << "expand-db:  " << layout.expansion.string() << "\n"
              << "trajectory: " << layout.trajectory.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
