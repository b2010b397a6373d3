// SPDX-License-Identifier: Apache-2.0
//
// subchain: sub-chain beam codebook design for quantized mmWave phased arrays
// Copyright (C) 2026 The subchain authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cstdint>
#include <initializer_list>

namespace subchain
{
    // SplitMix64 (Steele, Lea, Flood 2014). Used both as the random stream for solver restarts and,
    // through its finalizer, as the fixed seed-splitting hash. Its output is fully specified, so
    // seeded results do not depend on the standard library in use.
    class SplitMix64
    {
    public:
        explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

        std::uint64_t next()
        {
            std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
            return mix(z);
        }

        // Uniform in [0, 1) with 53 random bits.
        double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

        // Uniform in [0, 2^bits), bits in [1, 63].
        std::uint64_t next_bits(unsigned bits) { return next() >> (64U - bits); }

        static std::uint64_t mix(std::uint64_t z)
        {
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
            return z ^ (z >> 31);
        }

    private:
        std::uint64_t state_;
    };

    // sub_seed = mix(... mix(mix(master) ^ k1 + golden) ^ k2 + golden ...)
    inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys)
    {
        std::uint64_t h = SplitMix64::mix(master + 0x9E3779B97F4A7C15ULL);
        for (std::uint64_t k : keys)
            h = SplitMix64::mix((h ^ k) + 0x9E3779B97F4A7C15ULL);
        return h;
    }

    inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k1) { return derive_seed(master, {k1}); }
    inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k1, std::uint64_t k2) { return derive_seed(master, {k1, k2}); }
} // namespace subchain
