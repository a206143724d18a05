#include "cli.hpp"
int main(int argc,char**argv){return bcp::cli_main(argc,argv);}
