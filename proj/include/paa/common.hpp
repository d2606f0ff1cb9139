#pragma once
// Shared plumbing: error types, deterministic parallel loops, number formatting.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace paa {

// Malformed input (tables, trees, config files). The CLI maps this to its
// parse-error exit code; precondition violations use std::invalid_argument.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Resolves a thread-count request: 0 means hardware concurrency, negative is
// rejected, and the result is always >= 1.
int resolve_threads(int requested);

// Chunked parallel loop over [0, count). fn(begin, end) receives contiguous
// ranges; callers must write results to disjoint per-index slots so the
// outcome is bitwise independent of the thread count.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t, std::size_t)>& fn);

// Locale-independent formatting. format_double emits the shortest string that
// round-trips the value exactly; the fixed variant pins the decimal count.
std::string format_double(double v);
std::string format_double_fixed(double v, int precision);

// Strict locale-independent parse of a full token; throws ParseError.
double parse_double(const std::string& token, const std::string& where);

}  // namespace paa
