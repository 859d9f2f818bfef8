#include "hhons/cli.hpp"

int main(int argc, char** argv)
{
  return hhons::run_cli(argc, argv);
}
