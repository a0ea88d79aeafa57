#include "advtext/cli_app.hpp"

int main(int argc, char** argv) { return advtext::cli::run(argc, argv); }
