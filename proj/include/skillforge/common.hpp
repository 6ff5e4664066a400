#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace skillforge {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SKILLFORGE_DEFINE_ERROR(NAME)            \
  class NAME : public Error {                    \
   public:                                       \
    using Error::Error;                          \
  }

SKILLFORGE_DEFINE_ERROR(ZeroVectorError);
SKILLFORGE_DEFINE_ERROR(DimensionMismatchError);
SKILLFORGE_DEFINE_ERROR(DegenerateEmbeddingError);
SKILLFORGE_DEFINE_ERROR(NonPsdCovarianceError);
SKILLFORGE_DEFINE_ERROR(NonFiniteActivationError);
SKILLFORGE_DEFINE_ERROR(NonFiniteGradientError);
SKILLFORGE_DEFINE_ERROR(ShapeMismatchError);
SKILLFORGE_DEFINE_ERROR(ParseError);
SKILLFORGE_DEFINE_ERROR(ValidationError);
SKILLFORGE_DEFINE_ERROR(UnknownRecipeError);
SKILLFORGE_DEFINE_ERROR(InvalidStateError);
SKILLFORGE_DEFINE_ERROR(IndexOutOfRangeError);
SKILLFORGE_DEFINE_ERROR(LengthMismatchError);
SKILLFORGE_DEFINE_ERROR(UnknownMotionError);
SKILLFORGE_DEFINE_ERROR(UnknownStyleError);
SKILLFORGE_DEFINE_ERROR(ConfigError);
SKILLFORGE_DEFINE_ERROR(IoError);

#undef SKILLFORGE_DEFINE_ERROR

// ---------------------------------------------------------------------------
// Deterministic random streams
//
// std::mt19937_64 is fully specified by the standard; the distribution
// transforms below are hand-rolled so that sampled sequences are identical
// across platforms and standard libraries.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1).
  double uniform_pos() {
    double u = uniform();
    while (u == 0.0) u = uniform();
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] inclusive, via rejection (unbiased).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Standard normal via Marsaglia polar method (second value cached).
  double normal();

  /// Gamma(shape, 1) via Marsaglia-Tsang; any shape > 0.
  double gamma(double shape);

  double beta(double a, double b);

  Eigen::VectorXd gaussian_vector(int n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent stream seed from a root seed and a stage label.
/// splitmix64 finalizer over root XOR fnv1a(label) XOR index.
std::uint64_t seed_stream(std::uint64_t root, std::string_view label,
                          std::uint64_t index = 0);

std::uint64_t fnv1a64(std::string_view bytes);

// ---------------------------------------------------------------------------
// Logging (stderr; level from SKILLFORGE_LOG in {error, info, debug})
// ---------------------------------------------------------------------------

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level();
void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

// ---------------------------------------------------------------------------
// Small utilities
// ---------------------------------------------------------------------------

/// Shortest decimal that round-trips would under-specify the file format;
/// serialization uses 17 significant digits throughout.
std::string format_g17(double v);

/// Runs fn(i) for i in [0, n); splits the range across `workers` threads.
/// Callers must make fn(i) write only to slot i-owned data.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// FNV-1a hash of a file's raw bytes, as fixed-width hex (manifests).
std::string file_hash_hex(const std::string& path);

std::string version_string();

}  // namespace skillforge
