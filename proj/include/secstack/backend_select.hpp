// Copyright 2026 The secstack Authors
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

// Maps a backend name to an implementation. This is the only place that
// knows the concrete backends.

#ifndef SECSTACK_BACKEND_SELECT_HPP
#define SECSTACK_BACKEND_SELECT_HPP

#include "secstack/dtls_backend.hpp"

namespace secstack::dtls {

/// Throws Errc::UnknownBackend.
std::shared_ptr<const Backend> backend_select(BackendId id);
/// Accepts "minidtls", "nullsec", or a config line "backend=<name>".
std::shared_ptr<const Backend> backend_select(std::string_view name);

}  // namespace secstack::dtls

#endif  // SECSTACK_BACKEND_SELECT_HPP
