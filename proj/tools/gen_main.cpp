// Writes the synthetic evaluation suite (clouds + run configs).

#include "tsk/assets.hpp"
#include "tsk/errors.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic tool/container suite"};
  std::string out_dir;
  std::string dsl_dir = "assets";
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--dsl", dsl_dir, "directory holding tasks/ and phases/");
  CLI11_PARSE(app, argc, argv);

  try {
    tsk::assets::write_demo_suite(out_dir, dsl_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::printf("suite written under %s\n", out_dir.c_str());
  return 0;
}
