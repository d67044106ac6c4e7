#include "bergman/io.hpp"
#include "bergman/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace bergman {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_complex(cplx z) {
  return "(" + format_double(z.real()) + "," + format_double(z.imag()) + ")";
}

std::string sequence_to_csv(const std::vector<int>& n, const std::vector<cplx>& values, bool complex_values) {
  std::string out = complex_values ? "n,re,im\n" : "n,value\n";
  for (std::size_t i = 0; i < n.size(); ++i) {
    out += std::to_string(n[i]) + "," + format_double(values[i].real());
    if (complex_values) out += "," + format_double(values[i].imag());
    out += "\n";
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path.string());
  f << text;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

} // namespace bergman
