#include "ergoid/seeding.hpp"

namespace ergoid {

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t cell_index, std::uint64_t trial_index) noexcept {
    return mix64(mix64(mix64(master) ^ cell_index) ^ trial_index);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace ergoid
