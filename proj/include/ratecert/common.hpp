#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace ratecert {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Deterministic RNG. Doubles are derived from raw mt19937_64 output so that
// streams do not depend on the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Log-uniform over [a, b], a > 0.
  double log_uniform(double a, double b) {
    return std::exp(uniform(std::log(a), std::log(b)));
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u = 0.0;
    while (u <= 0.0) u = uniform01();
    const double v = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u));
    spare_ = r * std::sin(2.0 * M_PI * v);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * v);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

struct SamplePlan {
  std::uint64_t seed = 12345;
  int count = 10000;
  double tol = 1e-9;
};

struct Violation {
  std::string what;
  double excess = 0.0;
};

struct ViolationReport {
  long count_checked = 0;
  double max_excess = 0.0;  // largest observed slack past the tolerance
  std::vector<Violation> samples;  // capped

  void record(const std::string& what, double excess) {
    if (excess > max_excess) max_excess = excess;
    if (samples.size() < 100) samples.push_back({what, excess});
  }
  bool clean() const { return samples.empty(); }
};

int default_thread_count();

// Runs fn(i) for i in [0, n). Results must be written to preassigned slots so
// the outcome does not depend on scheduling.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace ratecert
