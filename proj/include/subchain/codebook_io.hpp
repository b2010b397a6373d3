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

#include "subchain/beam.hpp"
#include "subchain/errors.hpp"

#include <json.hpp>

#include <cstddef>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace subchain
{
    using json = nlohmann::ordered_json;

    // { method, L, L_A, K, phase_bits, seed, beams: [[null | p, ...] x 2L] x K }, p in [0, 2^b).
    inline json codebook_to_json(const Codebook &cb)
    {
        json beams = json::array();
        for (const auto &b : cb.beams())
        {
            json row = json::array();
            for (const auto &p : b.phase_indices())
                row.push_back(p ? json(*p) : json(nullptr));
            beams.push_back(std::move(row));
        }
        return json{{"method", cb.method_tag()}, {"L", cb.n_pol_elements()}, {"L_A", cb.l_active()}, {"K", cb.size()},
                    {"phase_bits", cb.phase_bits()}, {"seed", cb.seed()}, {"beams", std::move(beams)}};
    }

    inline Codebook codebook_from_json(const json &j)
    {
        try
        {
            if (!j.is_object())
                throw data_error("codebook json: top level must be an object");
            for (const char *key : {"method", "L", "L_A", "K", "phase_bits", "beams"})
                if (!j.contains(key))
                    throw data_error(std::string("codebook json: missing field '") + key + "'");
            const auto L = j.at("L").get<std::size_t>();
            const auto la = j.at("L_A").get<std::size_t>();
            const auto K = j.at("K").get<std::size_t>();
            const int bits = j.at("phase_bits").get<int>();
            const auto &beams = j.at("beams");
            if (!beams.is_array() || beams.size() != K)
                throw data_error("codebook json: 'beams' must hold K = " + std::to_string(K) + " entries");
            if (bits < 1 || bits > max_phase_bits)
                throw data_error("codebook json: phase_bits out of range");
            std::vector<BeamWeights> out;
            for (std::size_t k = 0; k < beams.size(); ++k)
            {
                const auto &row = beams[k];
                if (!row.is_array() || row.size() != 2 * L)
                    throw data_error("codebook json: beam " + std::to_string(k) + " must have 2L = " + std::to_string(2 * L) + " entries");
                std::vector<std::optional<std::size_t>> idx(row.size());
                for (std::size_t l = 0; l < row.size(); ++l)
                {
                    if (row[l].is_null())
                        continue;
                    if (!row[l].is_number_unsigned() && !(row[l].is_number_integer() && row[l].get<long long>() >= 0))
                        throw data_error("codebook json: beam " + std::to_string(k) + " entry " + std::to_string(l) + " is not null or a phase index");
                    idx[l] = row[l].get<std::size_t>();
                }
                try
                {
                    out.push_back(BeamWeights::from_phase_indices(idx, bits));
                }
                catch (const std::invalid_argument &e)
                {
                    throw data_error("codebook json: beam " + std::to_string(k) + ": " + e.what());
                }
            }
            const std::uint64_t seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : 0;
            return Codebook(std::move(out), L, la, bits, j.at("method").get<std::string>(), seed);
        }
        catch (const json::exception &e)
        {
            throw data_error(std::string("codebook json: ") + e.what());
        }
        catch (const std::invalid_argument &e)
        {
            throw data_error(std::string("codebook json: ") + e.what());
        }
    }

    // "[p p - p | p - p p]" with '-' for an inactive port, H-pol half first.
    inline std::string beam_cell(const BeamWeights &b)
    {
        std::ostringstream os;
        const auto idx = b.phase_indices();
        os << '[';
        for (std::size_t l = 0; l < idx.size(); ++l)
        {
            if (l == b.n_pol_elements())
                os << " |";
            if (l > 0)
                os << ' ';
            if (idx[l])
                os << *idx[l];
            else
                os << '-';
        }
        os << ']';
        return os.str();
    }

    // Table layout: one row per beam index (1-based), one column per activation level, descending.
    inline void write_family_csv(std::ostream &os, const CodebookFamily &fam)
    {
        const auto levels = fam.levels();
        os << "beam_index";
        for (std::size_t la : levels)
            os << ',' << la << "-Ant";
        os << '\n';
        for (std::size_t k = 0; k < fam.beam_count(); ++k)
        {
            os << (k + 1);
            for (std::size_t la : levels)
                os << ',' << beam_cell(fam.at(la)[k]);
            os << '\n';
        }
    }
} // namespace subchain
