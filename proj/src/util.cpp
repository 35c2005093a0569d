#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>

#include "duraflow/error.hpp"
#include "duraflow/hash.hpp"
#include "duraflow/rng.hpp"

namespace duraflow {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingHeader: return "MissingHeader";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::AllMissingColumn: return "AllMissingColumn";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::SingleClassTraining: return "SingleClassTraining";
    case ErrorCode::EmptyBranch: return "EmptyBranch";
    case ErrorCode::ZeroActual: return "ZeroActual";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MissingCovers: return "MissingCovers";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Format: return "Format";
  }
  return "Unknown";
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string Fnv1a::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(state_));
  return buf;
}

std::string fnv1a_hex(std::string_view bytes) {
  Fnv1a h;
  h.update(bytes);
  return h.hex();
}

std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  Fnv1a h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

}  // namespace duraflow
