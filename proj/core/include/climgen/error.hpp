#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace climgen {

/// Raised for invalid data, failed preconditions and unfittable models.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ingestion failure tied to a 1-based data row.
class RowError : public Error {
 public:
  RowError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

}  // namespace climgen
