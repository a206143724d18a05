#pragma once
namespace bcp { int cli_main(int argc, char** argv); }
