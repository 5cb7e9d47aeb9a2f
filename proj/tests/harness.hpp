// Minimal invariant-test harness: one printed pass/fail line per check,
// nonzero exit when anything failed.
#pragma once

#include <cstdio>
#include <sstream>
#include <string>

namespace harness {

inline int g_checks = 0;
inline int g_failures = 0;

inline void record(const std::string& name, bool ok, const std::string& detail = "") {
  ++g_checks;
  if (!ok) ++g_failures;
  std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.empty() ? "" : "  ",
              detail.c_str());
  std::fflush(stdout);
}

// "(val=1.23e-14, thr=1e-12)" style annotation for quantitative checks
inline std::string qoi(double value, double threshold) {
  std::ostringstream ss;
  ss.precision(3);
  ss << std::scientific << "(val=" << value << ", thr=" << threshold << ")";
  return ss.str();
}

inline int finish(const char* title) {
  std::printf("%s: %d/%d checks passed\n", title, g_checks - g_failures, g_checks);
  return g_failures == 0 ? 0 : 1;
}

} // namespace harness
