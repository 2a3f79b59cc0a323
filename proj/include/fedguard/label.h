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

#ifndef FEDGUARD_LABEL_H_
#define FEDGUARD_LABEL_H_

#include <cstdint>

namespace fedguard {

enum class Label : std::uint8_t { kBenign = 0, kMalware = 1, kUnlabeled = 2 };

const char* LabelName(Label label);
// Swaps benign and malware; unlabeled stays unlabeled.
Label FlipLabel(Label label);

// Benign iff P(benign) >= P(malware); ties go to benign.
inline Label DecideLabel(double p_benign, double p_malware) {
  return p_benign >= p_malware ? Label::kBenign : Label::kMalware;
}

}  // namespace fedguard

#endif  // FEDGUARD_LABEL_H_
