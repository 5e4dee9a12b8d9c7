// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace driftbench {

/// Streaming JSON emitter with full-precision floats.
///
/// Doubles are printed with "%.17g", which round-trips every finite binary64
/// value through strtod. Non-finite values are rejected. Output layout is a
/// pure function of the call sequence, so emitted files are byte-stable.
class JsonWriter {
 public:
  explicit JsonWriter(int indent = 2) : indent_(indent) {}

  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(std::string_view k);

  JsonWriter& value(double v);
  JsonWriter& value(std::int64_t v);
  JsonWriter& value(std::uint64_t v);
  JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
  JsonWriter& value(bool v);
  JsonWriter& value(std::string_view v);
  JsonWriter& value(const char* v) { return value(std::string_view(v)); }
  JsonWriter& null();

  /// Number arrays are written on a single line.
  JsonWriter& array(std::span<const double> values);
  JsonWriter& array(std::span<const std::int64_t> values);

  const std::string& str() const { return out_; }

 private:
  void before_value();
  void newline();
  void write_string(std::string_view v);

  struct Frame {
    bool is_object;
    bool empty = true;
  };
  std::string out_;
  std::vector<Frame> stack_;
  bool after_key_ = false;
  int indent_;
};

/// "%.17g" formatting of one double.
std::string format_double(double v);

/// Writes `content` to `path`, creating parent directories.
void write_text_file(const std::string& path, std::string_view content);
std::string read_text_file(const std::string& path);

}  // namespace driftbench
