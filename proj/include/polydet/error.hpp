#pragma once

#include <stdexcept>
#include <string>

namespace polydet {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A file is missing, unreadable, or cannot be written.
struct FileError : Error {
  explicit FileError(const std::string& what) : Error(what) {}
};

/// A configuration document is malformed or violates an invariant.
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what) {}
};

/// Input data (datasets, detection files, model files) is inconsistent.
struct DataError : Error {
  explicit DataError(const std::string& what) : Error(what) {}
};

}  // namespace polydet
