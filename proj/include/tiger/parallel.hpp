// Copyright 2026 The tiger-retrieval Authors
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

#include <cstddef>
#include <functional>

namespace tiger {

// Worker count from TIGER_THREADS; 0 (the default, also used for unparsable
// values) means run inline on the calling thread.
std::size_t configured_threads();

// Calls fn(i) for i in [0, n). With threads > 1 the range is split into
// contiguous chunks; fn must write only to slots owned by its index. The first
// exception thrown by any chunk is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t threads = configured_threads());

}  // namespace tiger
