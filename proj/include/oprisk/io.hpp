#ifndef OPRISK_IO_HPP
#define OPRISK_IO_HPP

#include <string>

namespace oprisk {

// Shortest decimal form that round-trips a double exactly (printf %.17g).
std::string fmt_g17(double x);

// Whole-file read; throws std::runtime_error naming the path on failure.
std::string read_text_file(const std::string& path);

// Write via temp file + rename so readers never observe a partial file.
void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace oprisk

#endif
