#include "skelsql/network.hpp"

#include <atomic>

namespace skelsql {
namespace {
std::atomic<std::uint64_t> g_requests{0};
}  // namespace

std::uint64_t network_request_count() noexcept { return g_requests.load(std::memory_order_relaxed); }

namespace detail {
void note_network_request() noexcept { g_requests.fetch_add(1, std::memory_order_relaxed); }
}  // namespace detail

}  // namespace skelsql
