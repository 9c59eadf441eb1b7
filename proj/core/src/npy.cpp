#include "sparq/npy.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace sparq::npy {
namespace {

static_assert(std::endian::native == std::endian::little,
              "npy I/O assumes a little-endian host");

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error("npy: " + what); }

DType parse_descr(const std::string& descr) {
  if (descr.size() < 2) fail("bad descr '" + descr + "'");
  const char order = descr.front();
  const std::string code = (order == '<' || order == '|' || order == '=' || order == '>')
                               ? descr.substr(1)
                               : descr;
  if (code == "u1") return DType::U8;
  if (code == "i1") return DType::I8;
  if (order == '>') fail("big-endian dtype '" + descr + "' is not supported");
  if (code == "i4") return DType::I32;
  if (code == "f4") return DType::F32;
  fail("unsupported dtype '" + descr + "' (expected u1, i1, i4 or f4)");
}

const char* descr_of(DType d) {
  switch (d) {
    case DType::U8:
      return "|u1";
    case DType::I8:
      return "|i1";
    case DType::I32:
      return "<i4";
    case DType::F32:
      return "<f4";
  }
  return "";
}

Shape parse_shape(const std::string& text) {
  Shape shape;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = item.find_last_not_of(" \tL");
    const std::string digits = item.substr(first, last - first + 1);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
      fail("bad shape entry '" + item + "'");
    }
    shape.push_back(std::stoull(digits));
  }
  return shape;
}

template <typename T>
std::vector<T> copy_payload(std::span<const std::byte> payload, std::size_t count) {
  if (payload.size() < count * sizeof(T)) fail("truncated data section");
  std::vector<T> out(count);
  if (count) std::memcpy(out.data(), payload.data(), count * sizeof(T));
  return out;
}

}  // namespace

const char* dtype_name(DType d) noexcept {
  switch (d) {
    case DType::U8:
      return "u1";
    case DType::I8:
      return "i1";
    case DType::I32:
      return "i4";
    case DType::F32:
      return "f4";
  }
  return "?";
}

Array decode(std::span<const std::byte> bytes) {
  if (bytes.size() < kMagicLen + 4 || std::memcmp(bytes.data(), kMagic, kMagicLen) != 0) {
    fail("missing \\x93NUMPY magic");
  }
  const auto major = static_cast<unsigned>(bytes[6]);
  std::size_t header_len = 0;
  std::size_t offset = 0;
  if (major == 1) {
    header_len = static_cast<std::size_t>(bytes[8]) | (static_cast<std::size_t>(bytes[9]) << 8);
    offset = 10;
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) fail("truncated header");
    for (int i = 0; i < 4; ++i) header_len |= static_cast<std::size_t>(bytes[8 + i]) << (8 * i);
    offset = 12;
  } else {
    fail("unsupported format version " + std::to_string(major));
  }
  if (bytes.size() < offset + header_len) fail("truncated header");
  const std::string header(reinterpret_cast<const char*>(bytes.data() + offset), header_len);

  static const std::regex descr_re(R"('descr'\s*:\s*'([^']*)')");
  static const std::regex order_re(R"('fortran_order'\s*:\s*(True|False))");
  static const std::regex shape_re(R"('shape'\s*:\s*\(([^)]*)\))");
  std::smatch m;
  if (!std::regex_search(header, m, descr_re)) fail("header lacks 'descr'");
  const DType dtype = parse_descr(m[1]);
  if (!std::regex_search(header, m, order_re)) fail("header lacks 'fortran_order'");
  if (m[1] == "True") fail("Fortran-ordered arrays are not supported");
  if (!std::regex_search(header, m, shape_re)) fail("header lacks 'shape'");
  Array out;
  out.shape = parse_shape(m[1]);

  const auto payload = bytes.subspan(offset + header_len);
  const std::size_t count = element_count(out.shape);
  switch (dtype) {
    case DType::U8:
      out.data = copy_payload<std::uint8_t>(payload, count);
      break;
    case DType::I8:
      out.data = copy_payload<std::int8_t>(payload, count);
      break;
    case DType::I32:
      out.data = copy_payload<std::int32_t>(payload, count);
      break;
    case DType::F32:
      out.data = copy_payload<float>(payload, count);
      break;
  }
  return out;
}

Array read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("npy: cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode(std::as_bytes(std::span(raw)));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::vector<std::byte> encode(const Array& array) {
  std::ostringstream dict;
  dict << "{'descr': '" << descr_of(array.dtype()) << "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < array.shape.size(); ++i) {
    if (i) dict << ", ";
    dict << array.shape[i];
  }
  if (array.shape.size() == 1) dict << ',';
  dict << "), }";
  std::string header = dict.str();
  // Magic, version and length take 10 bytes; pad so data starts 64-aligned.
  const std::size_t total = 10 + header.size() + 1;
  header.append((64 - total % 64) % 64, ' ');
  header.push_back('\n');
  if (header.size() > 0xFFFF) fail("header too long for format 1.0");

  std::vector<std::byte> out;
  const auto put = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const std::byte*>(p);
    out.insert(out.end(), b, b + n);
  };
  put(kMagic, kMagicLen);
  const unsigned char version[2] = {1, 0};
  put(version, 2);
  const unsigned char len[2] = {static_cast<unsigned char>(header.size() & 0xFF),
                                static_cast<unsigned char>(header.size() >> 8)};
  put(len, 2);
  put(header.data(), header.size());
  std::visit(
      [&](const auto& v) {
        if (v.size() != element_count(array.shape)) fail("data size does not match shape");
        put(v.data(), v.size() * sizeof(v[0]));
      },
      array.data);
  return out;
}

void write(const std::filesystem::path& path, const Array& array) {
  const auto bytes = encode(array);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("npy: cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("npy: write failed for " + path.string());
}

}  // namespace sparq::npy
