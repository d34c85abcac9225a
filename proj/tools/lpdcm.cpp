#include <lpdcm/cli.hpp>

int main(int argc, char** argv) { return lpdcm::cli::run(argc, argv); }
