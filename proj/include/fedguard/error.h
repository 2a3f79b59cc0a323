/*
 * Copyright 2026 The Fedguard Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FEDGUARD_ERROR_H_
#define FEDGUARD_ERROR_H_

#include <stdexcept>
#include <string>
#include <utility>

namespace fedguard {

// Every failure surfaced by the library carries a short machine-readable code
// (e.g. "zero_width", "f_mismatch") next to the human-readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace fedguard

#endif  // FEDGUARD_ERROR_H_
