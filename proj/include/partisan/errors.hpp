#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace partisan {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed files, schema violations, unresolvable config.
// The CLI maps this family to exit code 1; everything else is exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A JSONL record failed to parse or validate. `line()` is 1-based; 0 means
// the error is not tied to a single line.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : ValidationError(format(path, line, what)), path_(path), line_(line) {}

  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& path, std::size_t line,
                            const std::string& what) {
    std::string out = path.empty() ? std::string("<stream>") : path;
    if (line > 0) out += ":" + std::to_string(line);
    return out + ": " + what;
  }

  std::string path_;
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace partisan
