#include "coolkws/error.hpp"

namespace coolkws {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::config: return "config error";
    case Errc::corpus_not_found: return "corpus not found";
    case Errc::sample_rate: return "unsupported sample rate";
    case Errc::format: return "format error";
    case Errc::unknown_keyword: return "unknown keyword";
    case Errc::capacity: return "capacity error";
    case Errc::shape: return "shape error";
    case Errc::invalid_sample: return "invalid sample";
    case Errc::range: return "range error";
    case Errc::incompatible_checkpoint: return "incompatible checkpoint";
    case Errc::corruption: return "corrupted checkpoint";
    case Errc::stale_trace: return "stale trace";
    case Errc::non_finite: return "non-finite value";
    case Errc::invalid_noise: return "invalid noise";
    case Errc::undefined_gain: return "undefined gain";
    case Errc::incompatible_logs: return "incompatible logs";
    case Errc::io: return "i/o error";
  }
  return "error";
}

bool is_config_error(Errc code) noexcept {
  switch (code) {
    case Errc::config:
    case Errc::corpus_not_found:
    case Errc::unknown_keyword:
    case Errc::range:
    case Errc::shape:
      return true;
    default:
      return false;
  }
}

}  // namespace coolkws
