#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace mcspace {

/// One verification record: a named check, a digest of its inputs, the
/// numerical residual, and whether the check is asserted (counts toward the
/// exit status) or diagnostic only.
struct CheckRecord {
  std::string name;
  std::string inputs_digest;
  double residual = 0.0;
  bool pass = true;
  bool asserted = true;
  std::string note;
};

/// FNV-1a 64-bit digest, printed as 16 hex digits. Stable across platforms.
inline std::string digest(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Round-trip text form of a double (deterministic for a fixed binary).
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline void write_report_text(std::ostream& out, std::span<const CheckRecord> records) {
  for (const auto& r : records) {
    out << (r.pass ? "PASS" : "FAIL") << (r.asserted ? "    " : " (diagnostic)")
        << " name=" << r.name << " inputs=" << r.inputs_digest
        << " residual=" << format_double(r.residual);
    if (!r.note.empty()) out << " note=" << r.note;
    out << "\n";
  }
}

inline void write_report_csv(std::ostream& out, std::span<const CheckRecord> records) {
  out << "name,inputs,residual,asserted,status,note\n";
  for (const auto& r : records) {
    out << r.name << ',' << r.inputs_digest << ',' << format_double(r.residual) << ','
        << (r.asserted ? 1 : 0) << ',' << (r.pass ? "PASS" : "FAIL") << ',' << r.note << "\n";
  }
}

inline bool all_asserted_pass(std::span<const CheckRecord> records) {
  for (const auto& r : records)
    if (r.asserted && !r.pass) return false;
  return true;
}

}  // namespace mcspace
