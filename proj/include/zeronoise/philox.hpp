/*
   Copyright 2026 The zeronoise Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace zeronoise {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless:
/// every output block is a pure function of (counter, key).
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key)
    {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;
};

/// Random streams addressed by (seed, stream, step, lane). Path i of a Monte
/// Carlo run reads stream i, so results never depend on execution order.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}
    {
    }

    /// Two uniforms in the open interval (0, 1), 53 bits each.
    std::array<double, 2> uniform_pair(std::uint64_t stream, std::uint32_t step, std::uint32_t lane) const
    {
        const auto r = Philox4x32::generate(
            {lane, step, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)}, key_);
        const std::uint64_t a = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
        const std::uint64_t b = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
        return {to_open_unit(a), to_open_unit(b)};
    }

    /// Two independent standard normals (Box-Muller).
    std::array<double, 2> normal_pair(std::uint64_t stream, std::uint32_t step, std::uint32_t lane) const
    {
        const auto u = uniform_pair(stream, step, lane);
        const double radius = std::sqrt(-2.0 * std::log(u[0]));
        const double angle = 2.0 * std::numbers::pi * u[1];
        return {radius * std::cos(angle), radius * std::sin(angle)};
    }

    /// Fills `out` with standard normals for (stream, step).
    template <class Span>
    void normals(std::uint64_t stream, std::uint32_t step, Span&& out) const
    {
        const std::size_t count = out.size();
        for (std::size_t j = 0; j < count; j += 2) {
            const auto z = normal_pair(stream, step, static_cast<std::uint32_t>(j / 2));
            out[j] = z[0];
            if (j + 1 < count) {
                out[j + 1] = z[1];
            }
        }
    }

private:
    static double to_open_unit(std::uint64_t bits)
    {
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    Philox4x32::Key key_;
};

} // namespace zeronoise
