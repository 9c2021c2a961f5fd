// Copyright 2026 The Authors.
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

#ifndef CONSEL_TEXT_H_
#define CONSEL_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace consel {

// Trims outer whitespace and collapses inner runs to one space.
std::string NormalizeWhitespace(std::string_view text);

// Whitespace tokens after trimming; case preserved.
std::vector<std::string> Tokenize(std::string_view text);

// UTF-8 to Unicode scalar values. Throws invalid-utf8.
std::u32string DecodeUtf8(std::string_view text);

// ASCII lowercase, ASCII punctuation removed, whitespace collapsed.
std::string NormalizeForScoring(std::string_view text);

}  // namespace consel

#endif  // CONSEL_TEXT_H_
