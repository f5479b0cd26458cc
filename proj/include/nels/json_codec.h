// Copyright (c) 2026 The NELS Authors. All Rights Reserved.
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

#include <json.hpp>

#include "nels/content_index.h"
#include "nels/crawler.h"

namespace nels {

// Absent optional attributes are written as null so that every record
// carries all twelve keys.
nlohmann::json to_json(const MediaRecord& r);
MediaRecord media_record_from_json(const nlohmann::json& j);

nlohmann::json to_json(const IndexEntry& e);
IndexEntry index_entry_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FeedbackEvent& e);
FeedbackEvent feedback_from_json(const nlohmann::json& j);

}  // namespace nels
