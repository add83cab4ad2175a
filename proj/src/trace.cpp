#include "rcsim/trace.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rcsim {

const char* to_string(TraceKind k) {
  switch (k) {
  case TraceKind::uniform_random: return "uniform-random";
  case TraceKind::looping_working_set: return "looping-working-set";
  case TraceKind::pointer_chase: return "pointer-chase";
  case TraceKind::file: return "file";
  }
  return "?";
}

void TraceSource::validate() const {
  if (kind == TraceKind::file) {
    if (path.empty())
      throw std::invalid_argument("trace.path required for file traces");
    return;
  }
  if (length == 0)
    throw std::invalid_argument("trace.length must be positive");
  if (kind != TraceKind::uniform_random) {
    if (working_set == 0)
      throw std::invalid_argument("trace.working_set must be positive");
    if (working_set * std::max<std::uint64_t>(stride, 1) > span_lines)
      throw std::invalid_argument("trace.span_lines smaller than the working set");
  }
}

std::vector<Address> gen_trace(const TraceSource& src, RngStream& rng,
                               std::uint32_t offset_bits) {
  src.validate();
  std::vector<Address> out;
  out.reserve(src.length);
  const std::uint64_t stride = std::max<std::uint64_t>(src.stride, 1);
  const Address base = rng.uniform(src.span_lines) << offset_bits;

  switch (src.kind) {
  case TraceKind::uniform_random:
    for (std::uint64_t i = 0; i < src.length; ++i)
      out.push_back(rng.uniform(src.span_lines) << offset_bits);
    break;
  case TraceKind::looping_working_set:
    for (std::uint64_t i = 0; i < src.length; ++i)
      out.push_back(((i % src.working_set) * stride) << offset_bits);
    break;
  case TraceKind::pointer_chase: {
    // A fixed random permutation cycle over the working set.
    std::vector<std::uint64_t> perm(src.working_set);
    for (std::uint64_t i = 0; i < src.working_set; ++i)
      perm[i] = i;
    for (std::uint64_t i = src.working_set - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.uniform(i + 1)]);
    for (std::uint64_t i = 0; i < src.length; ++i)
      out.push_back((base + (perm[i % src.working_set] << offset_bits)) &
                    ~((Address(1) << offset_bits) - 1));
    break;
  }
  case TraceKind::file:
    return load_trace_file(src.path);
  }
  return out;
}

std::vector<Address> load_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("trace file not readable: " + path);
  std::vector<Address> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos)
      line.erase(hash);
    std::istringstream ls(line);
    std::string op, hex;
    if (!(ls >> op))
      continue; // blank
    if (op != "R" && op != "W")
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected R or W");
    if (!(ls >> hex))
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": missing address");
    out.push_back(std::stoull(hex, nullptr, 16));
  }
  return out;
}

void write_trace_file(const std::string& path, const std::vector<Address>& trace) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("trace file not writable: " + path);
  char buf[32];
  for (const Address a : trace) {
    std::snprintf(buf, sizeof buf, "R %llx\n", (unsigned long long)a);
    out << buf;
  }
}

} // namespace rcsim
