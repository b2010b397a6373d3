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

#include "subchain/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace subchain
{
    using Vec3 = std::array<double, 3>;

    // Direction on the unit sphere in radians: theta in [0, pi], phi in [0, 2 pi).
    struct Direction
    {
        double theta = 0.0;
        double phi = 0.0;

        friend bool operator==(const Direction &, const Direction &) = default;
    };

    inline bool is_valid(const Direction &d)
    {
        return std::isfinite(d.theta) && std::isfinite(d.phi) && d.theta >= 0.0 && d.theta <= std::numbers::pi &&
               d.phi >= 0.0 && d.phi < 2.0 * std::numbers::pi;
    }

    inline Vec3 cartesian(const Direction &d)
    {
        const double st = std::sin(d.theta);
        return {st * std::cos(d.phi), st * std::sin(d.phi), std::cos(d.theta)};
    }

    inline double dot(const Vec3 &a, const Vec3 &b)
    {
        return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    }

    // Great-circle distance in radians.
    inline double geodesic_distance(const Direction &a, const Direction &b)
    {
        const Vec3 u = cartesian(a), v = cartesian(b);
        const Vec3 c = {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
        return std::atan2(std::sqrt(dot(c, c)), dot(u, v));
    }

    inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
    inline double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

    // Ordered set of sample directions. Every sphere average in this library weights
    // the points equally (1 / size()).
    class DirectionGrid
    {
    public:
        DirectionGrid() = default;

        explicit DirectionGrid(std::vector<Direction> points, std::string variant = "custom")
            : points_(std::move(points)), variant_(std::move(variant))
        {
            if (points_.empty())
                throw std::invalid_argument("DirectionGrid: grid must contain at least one direction");
            for (std::size_t i = 0; i < points_.size(); ++i)
                if (!is_valid(points_[i]))
                    throw std::invalid_argument("DirectionGrid: direction " + std::to_string(i) +
                                                " outside theta in [0, pi], phi in [0, 2 pi)");

            std::vector<std::size_t> order(points_.size());
            for (std::size_t i = 0; i < order.size(); ++i)
                order[i] = i;
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b)
                      { return std::pair(points_[a].theta, points_[a].phi) < std::pair(points_[b].theta, points_[b].phi); });
            for (std::size_t i = 1; i < order.size(); ++i)
                if (points_[order[i]] == points_[order[i - 1]])
                    throw std::invalid_argument("DirectionGrid: directions " + std::to_string(order[i - 1]) + " and " +
                                                std::to_string(order[i]) + " are identical");
        }

        std::size_t size() const { return points_.size(); }
        const Direction &operator[](std::size_t i) const { return points_[i]; }
        std::span<const Direction> points() const { return points_; }
        const std::string &variant() const { return variant_; }
        double weight() const { return 1.0 / static_cast<double>(points_.size()); }

        bool same_points(const DirectionGrid &other) const { return points_ == other.points_; }

    private:
        std::vector<Direction> points_;
        std::string variant_ = "custom";
    };

    inline constexpr const char *fibonacci_variant = "fibonacci-offset: z_i = 1 - (2i+1)/N, phi_i = 2 pi frac(i (sqrt5-1)/2)";

    // Spherical Fibonacci spiral with half-step offset in z, so no sample lands on a pole.
    inline DirectionGrid fibonacci_grid(std::size_t n_points)
    {
        if (n_points == 0)
            throw std::invalid_argument("fibonacci_grid: n_points must be at least 1");

        const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
        const double two_pi = 2.0 * std::numbers::pi;
        const double n = static_cast<double>(n_points);

        std::vector<Direction> pts(n_points);
        for (std::size_t i = 0; i < n_points; ++i)
        {
            const double fi = static_cast<double>(i);
            const double z = 1.0 - (2.0 * fi + 1.0) / n;
            double phi = two_pi * std::fmod(fi * golden, 1.0);
            if (phi >= two_pi)
                phi = 0.0;
            pts[i] = {std::acos(std::clamp(z, -1.0, 1.0)), phi};
        }
        return DirectionGrid(std::move(pts), fibonacci_variant);
    }

    namespace detail
    {
        // Shortest representation that parses back to the same double.
        inline std::string format_double(double v)
        {
            std::array<char, 64> buf{};
            auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
            return std::string(buf.data(), res.ptr);
        }

        inline double parse_double(std::string_view s)
        {
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
                s.remove_prefix(1);
            while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
                s.remove_suffix(1);
            if (s.empty())
                throw data_error("empty numeric field");
            double v = 0.0;
            auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (res.ec != std::errc() || res.ptr != s.data() + s.size())
                throw data_error("cannot parse number '" + std::string(s) + "'");
            return v;
        }

        inline std::vector<std::string_view> split_csv(std::string_view line)
        {
            std::vector<std::string_view> out;
            std::size_t start = 0;
            while (true)
            {
                const std::size_t pos = line.find(',', start);
                if (pos == std::string_view::npos)
                {
                    out.push_back(line.substr(start));
                    break;
                }
                out.push_back(line.substr(start, pos - start));
                start = pos + 1;
            }
            if (!out.empty() && !out.back().empty() && out.back().back() == '\r')
                out.back().remove_suffix(1);
            return out;
        }

        inline std::size_t parse_index(std::string_view s)
        {
            std::size_t v = 0;
            while (!s.empty() && s.front() == ' ')
                s.remove_prefix(1);
            while (!s.empty() && (s.back() == ' ' || s.back() == '\r'))
                s.remove_suffix(1);
            auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
                throw data_error("cannot parse index '" + std::string(s) + "'");
            return v;
        }
    } // namespace detail

    // CSV with header `index,theta_rad,phi_rad`.
    inline void write_grid_csv(std::ostream &os, const DirectionGrid &grid)
    {
        os << "index,theta_rad,phi_rad\n";
        for (std::size_t i = 0; i < grid.size(); ++i)
            os << i << ',' << detail::format_double(grid[i].theta) << ',' << detail::format_double(grid[i].phi) << '\n';
    }

    inline DirectionGrid read_grid_csv(std::istream &is, std::string variant = "custom")
    {
        std::string line;
        if (!std::getline(is, line))
            throw data_error("grid csv: missing header");
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line != "index,theta_rad,phi_rad")
            throw data_error("grid csv: expected header 'index,theta_rad,phi_rad', got '" + line + "'");

        std::vector<Direction> pts;
        std::size_t row = 0;
        while (std::getline(is, line))
        {
            if (line.empty() || line == "\r")
                continue;
            const auto f = detail::split_csv(line);
            if (f.size() != 3)
                throw data_error("grid csv: row " + std::to_string(row) + " has " + std::to_string(f.size()) + " fields, expected 3");
            if (detail::parse_index(f[0]) != row)
                throw data_error("grid csv: row " + std::to_string(row) + " has out-of-sequence index");
            pts.push_back({detail::parse_double(f[1]), detail::parse_double(f[2])});
            ++row;
        }
        try
        {
            return DirectionGrid(std::move(pts), std::move(variant));
        }
        catch (const std::invalid_argument &e)
        {
            throw data_error(std::string("grid csv: ") + e.what());
        }
    }
} // namespace subchain
