#pragma once

#include <cstddef>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace batchsym {

// Malformed input file. Carries the 1-based line number when known.
class IngestError : public std::runtime_error {
 public:
  IngestError(const std::string& source, size_t line, const std::string& what);
  size_t line() const { return line_; }

 private:
  size_t line_;
};

// Minimal comma-separated reader: no quoting, fields are trimmed, blank
// lines and lines starting with '#' are skipped. The first data line must
// match `expected_header` exactly.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::string source,
            std::vector<std::string> expected_header);

  // Returns false at end of input.
  bool Next(std::vector<std::string>* fields);
  size_t line() const { return line_; }
  const std::string& source() const { return source_; }

  [[noreturn]] void Fail(const std::string& what) const;
  double ParseDouble(const std::string& field, const char* column) const;
  long long ParseInt(const std::string& field, const char* column) const;

 private:
  std::istream& in_;
  std::string source_;
  size_t line_ = 0;
  size_t width_;
};

std::vector<std::string> SplitFields(const std::string& line, char sep = ',');
std::string Trim(const std::string& s);

}  // namespace batchsym
