#include <agvsched/cli.hpp>

int main(int argc, char** argv) { return agvsched::cli::run(argc, argv); }
