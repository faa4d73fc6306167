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

#include "secstack/backend_select.hpp"

#include "secstack/backends/minidtls.hpp"
#include "secstack/backends/nullsec.hpp"

namespace secstack::dtls {

std::shared_ptr<const Backend> backend_select(BackendId id) {
  static const auto mini = std::make_shared<const minidtls::MiniDtlsBackend>();
  static const auto null = std::make_shared<const nullsec::NullSecBackend>();
  switch (id) {
    case BackendId::MiniDtls: return mini;
    case BackendId::NullSec: return null;
  }
  throw Error(Errc::UnknownBackend, "unknown backend id");
}

std::shared_ptr<const Backend> backend_select(std::string_view name) {
  constexpr std::string_view prefix = "backend=";
  if (name.substr(0, prefix.size()) == prefix) name.remove_prefix(prefix.size());
  return backend_select(parse_backend_id(name));
}

}  // namespace secstack::dtls
