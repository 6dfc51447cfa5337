#pragma once

#include <stdexcept>
#include <string>

namespace minitod {

// Malformed or inconsistent input data (files, corpora, ontologies). The CLI
// maps this to exit code 2; all other exceptions map to 3.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace minitod
