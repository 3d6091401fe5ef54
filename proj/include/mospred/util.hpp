#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace mospred {

// Raised for faults in user-supplied input (bad files, bad flags, bad data).
// The CLI maps these to exit code 1; everything else is an internal error (2).
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parse fault carrying the 1-based line number of the offending row.
class ParseError : public UserError {
 public:
  ParseError(const std::string& msg, std::size_t line)
      : UserError(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t seed = 0xcbf29ce484222325ull);

std::string to_hex(std::uint64_t value);

// Hash of a file's raw bytes; throws UserError if unreadable.
std::uint64_t hash_file(const std::filesystem::path& path);
std::string content_hash_hex(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// Fixed-point "%.4f"-style formatting used in reports and tables.
std::string format_fixed(double value, int decimals);

std::vector<std::string> split_string(const std::string& line, char delim);

// CSV field quoting for values containing the delimiter or quotes.
std::string csv_escape(const std::string& field);

}  // namespace mospred
