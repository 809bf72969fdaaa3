// Copyright 2026 The posctl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace posctl {

/// Shortest round-trip decimal form, independent of the global locale.
std::string format_double(double v);

/// Comma-separated rows with a '\n' terminator and no quoting.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void row(const std::vector<std::string>& fields);
  void begin_row() { first_ = true; }
  void field(const std::string& v);
  void field(double v) { field(format_double(v)); }
  void field(int v) { field(std::to_string(v)); }
  void field(long v) { field(std::to_string(v)); }
  void end_row() { os_ << '\n'; }

 private:
  std::ostream& os_;
  bool first_ = true;
};

}  // namespace posctl
