#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace eisgrpo {

using Rng = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Key for a named random substream. Every stream in the library is derived
/// from the top-level seed plus a stream name plus integer coordinates, so a
/// draw never depends on which worker thread happens to make it.
class StreamKey {
public:
    StreamKey(std::uint64_t seed, std::string_view name)
        : state_(detail::splitmix64(seed ^ detail::splitmix64(detail::fnv1a(name)))) {}

    [[nodiscard]] StreamKey with(std::uint64_t coord) const {
        StreamKey k = *this;
        k.state_ = detail::splitmix64(k.state_ ^ detail::splitmix64(coord + 0x632be59bd9b4e019ULL));
        return k;
    }

    [[nodiscard]] StreamKey with(std::initializer_list<std::uint64_t> coords) const {
        StreamKey k = *this;
        for (auto c : coords) k = k.with(c);
        return k;
    }

    [[nodiscard]] StreamKey with(std::string_view tag) const { return with(detail::fnv1a(tag)); }

    [[nodiscard]] std::uint64_t value() const { return state_; }

    [[nodiscard]] Rng make() const {
        std::seed_seq seq{static_cast<std::uint32_t>(state_), static_cast<std::uint32_t>(state_ >> 32)};
        return Rng(seq);
    }

private:
    std::uint64_t state_;
};

inline Rng make_stream(std::uint64_t seed, std::string_view name, std::initializer_list<std::uint64_t> coords = {}) {
    return StreamKey(seed, name).with(coords).make();
}

}  // namespace eisgrpo
