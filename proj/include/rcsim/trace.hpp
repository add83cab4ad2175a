#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcsim/geometry.hpp"
#include "rcsim/rng.hpp"

namespace rcsim {

enum class TraceKind { uniform_random, looping_working_set, pointer_chase, file };

const char* to_string(TraceKind k);

struct TraceSource {
  TraceKind kind = TraceKind::uniform_random;
  std::uint64_t span_lines = 1ull << 30;
  std::uint64_t working_set = 0; // lines, for looping / pointer-chase
  std::uint64_t stride = 1;      // lines, for looping
  std::uint64_t length = 0;      // accesses
  std::string path;              // for kind == file

  void validate() const; // throws std::invalid_argument
};

// Synthesizes the access sequence. File sources are read via load_trace_file.
std::vector<Address> gen_trace(const TraceSource& src, RngStream& rng,
                               std::uint32_t offset_bits);

// Text format: one access per line, "R <hex-address>" or "W <hex-address>",
// '#' starts a comment. Reads and writes real trace dumps directly.
std::vector<Address> load_trace_file(const std::string& path);
void write_trace_file(const std::string& path, const std::vector<Address>& trace);

} // namespace rcsim
