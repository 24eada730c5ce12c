/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <string_view>
#include <vector>

namespace recycle::assets {

// Compiled-in copies of the files under assets/. Contents are the raw file
// bytes, trailing newline included.
struct Asset {
    std::string_view name;
    std::string_view content;
};

const std::vector<Asset>& prompt_assets();
std::string_view operation_keywords();

}  // namespace recycle::assets
