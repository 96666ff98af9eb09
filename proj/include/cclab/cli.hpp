#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cclab {

inline constexpr const char* kToolVersion = "0.1.0";

// exit codes: 0 ok, 2 configuration error, 3 invariant failure
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInvariant = 3;

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "2*3*cos" -> amplitude 6 and the trig name; throws ParseError
struct PotentialSpec {
  double amplitude = 1;
  std::string fn;  // "cos", "sin", or empty for a constant
};
PotentialSpec parse_potential(const std::string& s);

}  // namespace cclab
