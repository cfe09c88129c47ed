#pragma once

// Field files: a key=value text header plus a raw little-endian payload.
//
//   ndim=2
//   dims=64 64
//   spacing=0.015625 0.015625
//   dtype=float64            (uint16 for label fields)
//   components=2             (vector fields only; payload is component-major)
//   data=source.raw          (relative to the header's directory)

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "grid.hpp"
#include "keyvalue.hpp"

namespace pdelddmm {

namespace detail {

template <class T>
T to_little_endian(T x)
{
  if constexpr (std::endian::native == std::endian::little)
    return x;
  unsigned char b[sizeof(T)];
  std::memcpy(b, &x, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
    std::swap(b[i], b[sizeof(T) - 1 - i]);
  std::memcpy(&x, b, sizeof(T));
  return x;
}

struct Header {
  Grid grid;
  std::string dtype;
  int components = 1;
  std::string kind;
  std::filesystem::path data;
};

inline std::filesystem::path raw_path_for(const std::filesystem::path& header)
{
  auto p = header;
  p.replace_extension(".raw");
  return p;
}

inline void write_header(const std::filesystem::path& header_path, const Grid& g, const std::string& dtype,
                         int components, const std::string& kind)
{
  std::ofstream out(header_path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + header_path.string());
  out << "ndim=" << g.ndim() << '\n';
  out << "dims=";
  for (int a = 0; a < g.ndim(); ++a)
    out << (a ? " " : "") << g.dim(a);
  out << "\nspacing=";
  for (int a = 0; a < g.ndim(); ++a)
    out << (a ? " " : "") << format_double(g.spacing(a));
  out << "\ndtype=" << dtype << '\n';
  if (components > 1)
    out << "components=" << components << '\n';
  if (!kind.empty())
    out << "kind=" << kind << '\n';
  out << "data=" << raw_path_for(header_path).filename().string() << '\n';
  if (!out)
    throw IoError("write failed for " + header_path.string());
}

inline Header read_header(const std::filesystem::path& header_path)
{
  if (!std::filesystem::exists(header_path))
    throw IoError("missing file " + header_path.string());
  const auto kv = read_key_values(header_path.string());
  auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end())
      throw IoError(header_path.string() + ": missing key '" + key + "'");
    return it->second;
  };
  Header h;
  try {
    const auto ndim = parse_integer(need("ndim"));
    const auto dims_s = split_ws(need("dims"));
    const auto spacing_s = split_ws(need("spacing"));
    if (static_cast<long long>(dims_s.size()) != ndim || static_cast<long long>(spacing_s.size()) != ndim)
      throw IoError(header_path.string() + ": dims/spacing count does not match ndim");
    std::vector<std::size_t> dims;
    std::vector<double> spacing;
    for (const auto& s : dims_s) {
      const auto v = parse_integer(s);
      if (v <= 0)
        throw IoError(header_path.string() + ": non-positive dim");
      dims.push_back(static_cast<std::size_t>(v));
    }
    for (const auto& s : spacing_s)
      spacing.push_back(parse_double(s));
    h.grid = Grid(dims, spacing);
    h.dtype = need("dtype");
    if (auto it = kv.find("components"); it != kv.end())
      h.components = static_cast<int>(parse_integer(it->second));
    if (auto it = kv.find("kind"); it != kv.end())
      h.kind = it->second;
  } catch (const std::invalid_argument& e) {
    throw IoError(header_path.string() + ": " + e.what());
  }
  h.data = header_path.parent_path() / need("data");
  return h;
}

template <class T>
std::vector<T> read_raw(const Header& h, std::size_t count)
{
  if (!std::filesystem::exists(h.data))
    throw IoError("missing raw file " + h.data.string());
  const auto bytes = std::filesystem::file_size(h.data);
  if (bytes != count * sizeof(T))
    throw IoError("size mismatch: " + h.data.string() + " has " + std::to_string(bytes) + " bytes, header implies " +
                  std::to_string(count * sizeof(T)));
  std::ifstream in(h.data, std::ios::binary);
  std::vector<T> out(count);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(bytes));
  if (!in)
    throw IoError("read failed for " + h.data.string());
  for (auto& x : out)
    x = to_little_endian(x);
  return out;
}

template <class T>
void write_raw(const std::filesystem::path& path, const std::vector<T>& values)
{
  std::vector<T> le(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    le[i] = to_little_endian(values[i]);
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(le.data()), static_cast<std::streamsize>(le.size() * sizeof(T)));
  if (!out)
    throw IoError("write failed for " + path.string());
}

inline void require_finite(std::span<const double> v, const std::string& what)
{
  for (double x : v)
    if (!std::isfinite(x))
      throw IoError(what + ": non-finite value");
}

} // namespace detail

inline void save_field(const ScalarField& field, const std::filesystem::path& header_path)
{
  detail::require_finite(field.values, header_path.string());
  detail::write_header(header_path, field.grid, "float64", 1, "");
  detail::write_raw(detail::raw_path_for(header_path), field.values);
}

inline ScalarField load_field(const std::filesystem::path& header_path)
{
  const auto h = detail::read_header(header_path);
  if (h.dtype != "float64")
    throw IoError(header_path.string() + ": expected dtype=float64, got " + h.dtype);
  if (h.components != 1)
    throw IoError(header_path.string() + ": expected a scalar field");
  auto values = detail::read_raw<double>(h, h.grid.size());
  detail::require_finite(values, header_path.string());
  return ScalarField(h.grid, std::move(values));
}

inline void save_vector_field(const VectorField& field, const std::filesystem::path& header_path,
                              const std::string& kind = "")
{
  detail::require_finite(field.data, header_path.string());
  detail::write_header(header_path, field.grid, "float64", field.ndim(), kind);
  detail::write_raw(detail::raw_path_for(header_path), field.data);
}

inline VectorField load_vector_field(const std::filesystem::path& header_path, std::string* kind = nullptr)
{
  const auto h = detail::read_header(header_path);
  if (h.dtype != "float64")
    throw IoError(header_path.string() + ": expected dtype=float64, got " + h.dtype);
  if (h.components != h.grid.ndim())
    throw IoError(header_path.string() + ": expected " + std::to_string(h.grid.ndim()) + " components");
  VectorField f(h.grid);
  f.data = detail::read_raw<double>(h, f.data.size());
  detail::require_finite(f.data, header_path.string());
  if (kind)
    *kind = h.kind;
  return f;
}

inline void save_labels(const LabelField& field, const std::filesystem::path& header_path)
{
  std::vector<std::uint16_t> v(field.labels.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (field.labels[i] > std::numeric_limits<std::uint16_t>::max())
      throw IoError(header_path.string() + ": label exceeds uint16 range");
    v[i] = static_cast<std::uint16_t>(field.labels[i]);
  }
  detail::write_header(header_path, field.grid, "uint16", 1, "");
  detail::write_raw(detail::raw_path_for(header_path), v);
}

inline LabelField load_labels(const std::filesystem::path& header_path)
{
  const auto h = detail::read_header(header_path);
  if (h.dtype != "uint16")
    throw IoError(header_path.string() + ": expected dtype=uint16, got " + h.dtype);
  const auto v = detail::read_raw<std::uint16_t>(h, h.grid.size());
  return LabelField(h.grid, std::vector<unsigned>(v.begin(), v.end()));
}

/// dtype recorded in a header, without reading the payload.
inline std::string header_dtype(const std::filesystem::path& header_path)
{
  return detail::read_header(header_path).dtype;
}

} // namespace pdelddmm
