#include "pairbox/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <string_view>

namespace pairbox {

std::size_t threads_from_env() {
  const char* raw = std::getenv("PAIRBOX_THREADS");
  if (raw == nullptr) return 1;
  const std::string_view text(raw);
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value == 0) return 1;
  return value;
}

}  // namespace pairbox
