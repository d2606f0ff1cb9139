#include "paa/common.hpp"

#include <charconv>
#include <system_error>
#include <thread>
#include <vector>

namespace paa {

int resolve_threads(int requested) {
  if (requested < 0) throw std::invalid_argument("thread count must be >= 0");
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
  if (count == 0) return;
  std::size_t workers = static_cast<std::size_t>(resolve_threads(threads));
  if (workers > count) workers = count;
  if (workers <= 1) {
    fn(0, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::size_t chunk = count / workers;
  std::size_t extra = count % workers;
  std::size_t begin = 0;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t len = chunk + (w < extra ? 1 : 0);
    std::size_t end = begin + len;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    begin = end;
  }
  for (auto& t : pool) t.join();
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_double_fixed(double v, int precision) {
  char buf[512];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed,
                           precision);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token, const std::string& where) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  while (first != last && (*first == ' ' || *first == '\r')) ++first;
  while (last != first && (*(last - 1) == ' ' || *(last - 1) == '\r')) --last;
  double value = 0.0;
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last || first == last) {
    throw ParseError("could not parse number '" + token + "' in " + where);
  }
  return value;
}

}  // namespace paa
