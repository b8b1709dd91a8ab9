// Command-line driver.  Subcommands are wired up in nonlocal/cli.hpp once the
// corresponding modules land; this stub only reports usage.

#include <cstdio>

int main(int argc, char** argv) {
  (void)argc;
  (void)argv;
  std::fprintf(stderr, "nlsurf: no subcommands available yet\n");
  return 2;
}
