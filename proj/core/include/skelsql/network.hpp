#pragma once

#include <cstdint>

namespace skelsql {

/// Count of outbound HTTP requests attempted by any client in this process.
/// Tests snapshot it to prove that offline backends never touch the network.
std::uint64_t network_request_count() noexcept;

namespace detail {
void note_network_request() noexcept;
}  // namespace detail

}  // namespace skelsql
