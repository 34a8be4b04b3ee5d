#ifndef COOLKWS_ERROR_HPP
#define COOLKWS_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace coolkws {

enum class Errc {
  config,
  corpus_not_found,
  sample_rate,
  format,
  unknown_keyword,
  capacity,
  shape,
  invalid_sample,
  range,
  incompatible_checkpoint,
  corruption,
  stale_trace,
  non_finite,
  invalid_noise,
  undefined_gain,
  incompatible_logs,
  io,
};

std::string_view errc_name(Errc code) noexcept;

// Usage and configuration problems versus problems with the data on disk.
// The CLI maps these onto exit codes 2 and 3.
bool is_config_error(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace coolkws

#endif  // COOLKWS_ERROR_HPP
