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

#include "subchain/codebook_io.hpp"
#include "subchain/efield.hpp"
#include "subchain/errors.hpp"
#include "subchain/sphere_grid.hpp"

#include <json.hpp>

#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace subchain
{
    enum class EFieldFormat
    {
        csv,
        json
    };

    inline constexpr const char *efield_csv_header = "antenna_index,direction_index,e_theta_re,e_theta_im,e_phi_re,e_phi_im";

    // One row per (antenna, direction), antenna-major. Antenna and direction indices are 0-based;
    // antennas [0, L) are H-pol, [L, 2L) V-pol. The grid goes to a companion grid CSV.
    inline void write_efield_csv(std::ostream &os, const EFieldSet &ef)
    {
        using detail::format_double;
        os << efield_csv_header << '\n';
        for (std::size_t l = 0; l < ef.n_antennas(); ++l)
            for (std::size_t n = 0; n < ef.n_points(); ++n)
            {
                const cplx t = ef.e_theta(n, l), p = ef.e_phi(n, l);
                os << l << ',' << n << ',' << format_double(t.real()) << ',' << format_double(t.imag()) << ',' << format_double(p.real()) << ','
                   << format_double(p.imag()) << '\n';
            }
    }

    inline EFieldSet read_efield_csv(std::istream &is, const DirectionGrid &grid)
    {
        std::string line;
        if (!std::getline(is, line))
            throw data_error("efield csv: missing header");
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line != efield_csv_header)
            throw data_error(std::string("efield csv: expected header '") + efield_csv_header + "'");

        struct Row
        {
            std::size_t l, n;
            cplx t, p;
        };
        std::vector<Row> rows;
        std::size_t max_l = 0, line_no = 1;
        while (std::getline(is, line))
        {
            ++line_no;
            if (line.empty() || line == "\r")
                continue;
            const auto f = detail::split_csv(line);
            if (f.size() != 6)
                throw data_error("efield csv: line " + std::to_string(line_no) + " has " + std::to_string(f.size()) + " fields, expected 6");
            Row r{detail::parse_index(f[0]), detail::parse_index(f[1]), {}, {}};
            const double v[4] = {detail::parse_double(f[2]), detail::parse_double(f[3]), detail::parse_double(f[4]), detail::parse_double(f[5])};
            for (double x : v)
                if (!std::isfinite(x))
                    throw data_error("efield csv: non-finite entry at antenna " + std::to_string(r.l) + ", direction " + std::to_string(r.n));
            if (r.n >= grid.size())
                throw data_error("efield csv: direction index " + std::to_string(r.n) + " outside the grid of " + std::to_string(grid.size()) +
                                 " directions");
            r.t = {v[0], v[1]};
            r.p = {v[2], v[3]};
            max_l = std::max(max_l, r.l);
            rows.push_back(r);
        }
        if (rows.empty())
            throw data_error("efield csv: no data rows");
        const std::size_t na = max_l + 1;
        if (na % 2 != 0)
            throw data_error("efield csv: antenna count " + std::to_string(na) + " is odd, expected 2L");
        if (rows.size() != na * grid.size())
            throw data_error("efield csv: expected " + std::to_string(na * grid.size()) + " rows (2L x N_p), got " + std::to_string(rows.size()));

        std::vector<cplx> data(na * grid.size() * 2);
        std::vector<char> seen(na * grid.size(), 0);
        for (const auto &r : rows)
        {
            const std::size_t slot = r.n * na + r.l;
            if (seen[slot])
                throw data_error("efield csv: duplicate entry for antenna " + std::to_string(r.l) + ", direction " + std::to_string(r.n));
            seen[slot] = 1;
            data[slot * 2] = r.t;
            data[slot * 2 + 1] = r.p;
        }
        return EFieldSet(grid, ArrayLayout(na / 2), std::move(data));
    }

    // Self-contained JSON bundle: metadata, layout, grid and responses.
    // responses[n][l] = [e_theta_re, e_theta_im, e_phi_re, e_phi_im].
    inline json efield_to_json(const EFieldSet &ef, std::optional<int> phase_bits = std::nullopt)
    {
        json theta = json::array(), phi = json::array();
        for (const auto &d : ef.grid().points())
        {
            theta.push_back(d.theta);
            phi.push_back(d.phi);
        }
        json pos = json::array();
        for (const auto &p : ef.layout().positions)
            pos.push_back({p[0], p[1], p[2]});
        json resp = json::array();
        for (std::size_t n = 0; n < ef.n_points(); ++n)
        {
            json dir = json::array();
            for (std::size_t l = 0; l < ef.n_antennas(); ++l)
            {
                const cplx t = ef.e_theta(n, l), p = ef.e_phi(n, l);
                dir.push_back({t.real(), t.imag(), p.real(), p.imag()});
            }
            resp.push_back(std::move(dir));
        }
        json j{{"format", "subchain-efield"}, {"version", 1}, {"n_pol_elements", ef.n_pol_elements()}};
        if (phase_bits)
            j["phase_bits"] = *phase_bits;
        j["n_points"] = ef.n_points();
        j["grid"] = {{"variant", ef.grid().variant()}, {"theta_rad", std::move(theta)}, {"phi_rad", std::move(phi)}};
        j["layout"] = {{"positions", std::move(pos)}};
        j["responses"] = std::move(resp);
        return j;
    }

    inline EFieldSet efield_from_json(const json &j)
    {
        try
        {
            if (!j.is_object() || j.value("format", "") != "subchain-efield")
                throw data_error("efield json: 'format' must be 'subchain-efield'");
            for (const char *key : {"n_pol_elements", "n_points", "grid", "responses"})
                if (!j.contains(key))
                    throw data_error(std::string("efield json: missing field '") + key + "'");
            if (j.contains("phase_bits") && !j.at("phase_bits").is_number_integer())
                throw data_error("efield json: 'phase_bits' must be an integer");
            const auto L = j.at("n_pol_elements").get<std::size_t>();
            const auto np = j.at("n_points").get<std::size_t>();
            const auto &g = j.at("grid");
            const auto &th = g.at("theta_rad");
            const auto &ph = g.at("phi_rad");
            if (th.size() != np || ph.size() != np)
                throw data_error("efield json: grid lists " + std::to_string(th.size()) + " directions, header n_points = " + std::to_string(np));
            std::vector<Direction> pts(np);
            for (std::size_t n = 0; n < np; ++n)
                pts[n] = {th[n].get<double>(), ph[n].get<double>()};
            DirectionGrid grid;
            try
            {
                grid = DirectionGrid(std::move(pts), g.value("variant", "custom"));
            }
            catch (const std::invalid_argument &e)
            {
                throw data_error(std::string("efield json: ") + e.what());
            }

            std::vector<Vec3> positions;
            if (j.contains("layout") && j.at("layout").contains("positions"))
                for (const auto &p : j.at("layout").at("positions"))
                {
                    if (!p.is_array() || p.size() != 3)
                        throw data_error("efield json: element positions must be 3-vectors");
                    positions.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
                }

            const auto &resp = j.at("responses");
            if (!resp.is_array() || resp.size() != np)
                throw data_error("efield json: 'responses' lists " + std::to_string(resp.size()) + " directions, header n_points = " + std::to_string(np));
            const std::size_t na = 2 * L;
            std::vector<cplx> data(np * na * 2);
            for (std::size_t n = 0; n < np; ++n)
            {
                if (!resp[n].is_array() || resp[n].size() != na)
                    throw data_error("efield json: direction " + std::to_string(n) + " must list 2L = " + std::to_string(na) + " antennas");
                for (std::size_t l = 0; l < na; ++l)
                {
                    const auto &e = resp[n][l];
                    if (!e.is_array() || e.size() != 4)
                        throw data_error("efield json: antenna " + std::to_string(l) + ", direction " + std::to_string(n) + " must hold 4 numbers");
                    double v[4];
                    for (std::size_t c = 0; c < 4; ++c)
                    {
                        if (!e[c].is_number())
                            throw data_error("efield json: non-finite entry at antenna " + std::to_string(l) + ", direction " + std::to_string(n));
                        v[c] = e[c].get<double>();
                        if (!std::isfinite(v[c]))
                            throw data_error("efield json: non-finite entry at antenna " + std::to_string(l) + ", direction " + std::to_string(n));
                    }
                    data[(n * na + l) * 2] = {v[0], v[1]};
                    data[(n * na + l) * 2 + 1] = {v[2], v[3]};
                }
            }
            ArrayLayout layout;
            try
            {
                layout = ArrayLayout(L, std::move(positions));
            }
            catch (const std::invalid_argument &e)
            {
                throw data_error(std::string("efield json: ") + e.what());
            }
            return EFieldSet(std::move(grid), std::move(layout), std::move(data));
        }
        catch (const json::exception &e)
        {
            throw data_error(std::string("efield json: ") + e.what());
        }
    }

    inline std::string read_text_file(const std::string &path)
    {
        std::ifstream f(path, std::ios::binary);
        if (!f)
            throw data_error("cannot open '" + path + "'");
        std::ostringstream ss;
        ss << f.rdbuf();
        return ss.str();
    }

    inline json read_json_file(const std::string &path)
    {
        const std::string text = read_text_file(path);
        try
        {
            return json::parse(text);
        }
        catch (const json::exception &e)
        {
            throw data_error("'" + path + "' is not valid JSON: " + e.what());
        }
    }

    inline DirectionGrid load_grid_csv(const std::string &path)
    {
        std::ifstream f(path);
        if (!f)
            throw data_error("cannot open grid file '" + path + "'");
        return read_grid_csv(f);
    }

    // grid_path is required for CSV (companion grid file) and ignored for JSON.
    inline EFieldSet load_efield(const std::string &path, EFieldFormat format, const std::string &grid_path = "")
    {
        if (format == EFieldFormat::json)
            return efield_from_json(read_json_file(path));
        if (grid_path.empty())
            throw data_error("efield csv '" + path + "' needs a companion grid csv");
        const DirectionGrid grid = load_grid_csv(grid_path);
        std::ifstream f(path);
        if (!f)
            throw data_error("cannot open efield file '" + path + "'");
        return read_efield_csv(f, grid);
    }

    inline void save_efield(const EFieldSet &ef, const std::string &path, EFieldFormat format, const std::string &grid_path = "")
    {
        if (format == EFieldFormat::json)
        {
            std::ofstream f(path, std::ios::binary);
            if (!f)
                throw data_error("cannot write '" + path + "'");
            f << efield_to_json(ef).dump() << '\n';
            return;
        }
        std::ofstream f(path, std::ios::binary);
        if (!f)
            throw data_error("cannot write '" + path + "'");
        write_efield_csv(f, ef);
        if (!grid_path.empty())
        {
            std::ofstream g(grid_path, std::ios::binary);
            if (!g)
                throw data_error("cannot write '" + grid_path + "'");
            write_grid_csv(g, ef.grid());
        }
    }
} // namespace subchain
