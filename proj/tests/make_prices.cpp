//! Writes the synthetic two-asset price file used by the CLI smoke test.
//! Usage: make_prices <out.csv> [days] [intervals] [seed]

#include "synthetic_prices.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>

int main(int argc, char** argv)
{
  if (argc < 2) {
    std::cerr << "usage: make_prices <out.csv> [days] [intervals] [seed]\n";
    return 1;
  }
  const int days = argc > 2 ? std::atoi(argv[2]) : 250;
  const int intervals = argc > 3 ? std::atoi(argv[3]) : 192;
  const auto seed = argc > 4 ? std::strtoull(argv[4], nullptr, 10) : 7ULL;
  std::ofstream os(argv[1]);
  if (!os) {
    std::cerr << "cannot write " << argv[1] << '\n';
    return 1;
  }
  wkde::testing::write_synthetic_prices(os, days, intervals, seed);
  return 0;
}
