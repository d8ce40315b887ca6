#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairdex {

/// Invalid input or failed validation. The CLI maps this family to exit code 2;
/// anything else escaping the library is treated as an internal error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed line in one of the text formats. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& message);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Strict-mode category resolution failed for one or more documents.
class UnmappedDocumentsError : public Error {
 public:
  explicit UnmappedDocumentsError(std::vector<std::string> doc_ids);

  const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }

 private:
  std::vector<std::string> doc_ids_;
};

/// Non-fatal findings collected while parsing or evaluating. One instance per
/// worker; merged in a fixed order so reports stay deterministic.
struct Diagnostics {
  std::vector<std::string> warnings;
  std::size_t unknown_category_lookups = 0;
  std::vector<std::string> unknown_docs;  // sorted, unique after merge()

  void warn(std::string message) { warnings.push_back(std::move(message)); }
  void merge(const Diagnostics& other);
};

}  // namespace fairdex
