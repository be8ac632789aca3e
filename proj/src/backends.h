// Copyright 2026 The Keycap Authors.
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

#ifndef KEYCAP_SRC_BACKENDS_H_
#define KEYCAP_SRC_BACKENDS_H_

#include <memory>

#include "keycap/captioner.h"

namespace keycap::internal {

std::unique_ptr<CaptionBackend> make_exec_backend(const CaptionerConfig& config);
std::unique_ptr<CaptionBackend> make_http_backend(const CaptionerConfig& config);

}  // namespace keycap::internal

#endif  // KEYCAP_SRC_BACKENDS_H_
