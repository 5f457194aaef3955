#include "negmn/config.hpp"

int main(int argc, char** argv) { return negmn::config::cli_main(argc, argv); }
