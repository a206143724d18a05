#include "cli.hpp"
namespace bcp { int cli_main(int, char**) { return 0; } }
