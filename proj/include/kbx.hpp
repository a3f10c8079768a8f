// Copyright 2026 The kbx Authors.
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

#include "kbx/aho_corasick.hpp"
#include "kbx/dataset_marker.hpp"
#include "kbx/entity_switcher.hpp"
#include "kbx/error.hpp"
#include "kbx/fact_injector.hpp"
#include "kbx/knowledge_store.hpp"
#include "kbx/masking_collator.hpp"
#include "kbx/passage_pairer.hpp"
#include "kbx/pipeline.hpp"
