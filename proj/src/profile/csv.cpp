#include "batchsym/profile/csv.h"

#include <charconv>
#include <cstdlib>

namespace batchsym {

IngestError::IngestError(const std::string& source, size_t line,
                         const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
      line_(line) {}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitFields(const std::string& line, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(Trim(line.substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

CsvReader::CsvReader(std::istream& in, std::string source,
                     std::vector<std::string> expected_header)
    : in_(in), source_(std::move(source)), width_(0) {
  std::vector<std::string> header;
  if (!Next(&header)) Fail("missing header");
  width_ = expected_header.size();
  if (header != expected_header) {
    std::string want;
    for (const auto& h : expected_header) want += (want.empty() ? "" : ",") + h;
    Fail("unexpected header, want '" + want + "'");
  }
}

bool CsvReader::Next(std::vector<std::string>* fields) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    *fields = SplitFields(t);
    if (width_ != 0 && fields->size() != width_) {
      Fail("expected " + std::to_string(width_) + " fields, got " +
           std::to_string(fields->size()));
    }
    return true;
  }
  return false;
}

void CsvReader::Fail(const std::string& what) const {
  throw IngestError(source_, line_, what);
}

double CsvReader::ParseDouble(const std::string& field,
                              const char* column) const {
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size()) {
    Fail(std::string("column '") + column + "': not a number: '" + field + "'");
  }
  return v;
}

long long CsvReader::ParseInt(const std::string& field,
                              const char* column) const {
  long long v = 0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (field.empty() || ec != std::errc() || ptr != last) {
    Fail(std::string("column '") + column + "': not an integer: '" + field +
         "'");
  }
  return v;
}

}  // namespace batchsym
