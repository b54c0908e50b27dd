#include <hflab/cli_app.hpp>

int main(int argc, char** argv) { return hflab::cli::cli_main(argc, argv); }
