#include "protochange/random.hpp"

#include <cmath>
#include <numbers>

namespace protochange {

double Rng::normal()
{
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view stage) noexcept
{
    // FNV-1a over the stage name, mixed into the root with splitmix64.
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : stage) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    std::uint64_t z = root ^ h;
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace protochange
