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

// subchain command line: design, metrics, compare, synth-efield, validate.

#include "subchain/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace subchain;

namespace
{
    std::vector<std::size_t> parse_levels(const std::string &s)
    {
        std::vector<std::size_t> out;
        for (auto f : detail::split_csv(s))
        {
            try
            {
                out.push_back(detail::parse_index(f));
            }
            catch (const std::exception &)
            {
                throw config_error("--levels: '" + std::string(f) + "' is not a level");
            }
        }
        return out;
    }

    struct DesignArgs
    {
        std::string config, out, levels, method;
        std::optional<std::uint64_t> seed;
        std::optional<std::size_t> threads;
        bool traces = false;
    };

    PipelineConfig resolve(const DesignArgs &a)
    {
        PipelineConfig c = a.config.empty() ? PipelineConfig::default_phone() : load_config(a.config);
        if (a.seed)
            c.design.seed = *a.seed;
        if (a.threads)
            c.design.threads = *a.threads;
        if (!a.method.empty())
            c.method = a.method;
        if (!a.levels.empty())
            c.levels = parse_levels(a.levels);
        if (a.traces)
            c.emit.traces = true;
        if (!a.out.empty())
            c.output_dir = a.out;
        if (c.output_dir.empty())
            throw config_error("no output directory: pass --out or set output_dir in the config");
        c.validate();
        return c;
    }

    void print_summary(const RunResult &r)
    {
        const auto &m = r.metrics;
        std::cout << "method " << r.config.method << ", " << r.arrays.size() << " array(s), " << m.n_beams << " beams, " << r.arrays.front().n_points()
                  << " directions\n";
        for (std::size_t i = 1; i < m.levels.size(); ++i)
            std::cout << "  p(" << m.levels.front() << "," << m.levels[i] << ") = " << detail::format_double(m.matching.rate[0][i])
                      << "  repaired " << detail::format_double(m.matching.repaired[0][i]) << "  median " << detail::format_double(m.cdf.at(m.levels[i]).median())
                      << " dBi\n";
    }

    // Runs fn; on failure prints the message, records error.json in err_dir (if any) and returns the exit code.
    template <class F>
    int guarded(const fs::path &err_dir, F &&fn)
    {
        try
        {
            fn();
            return 0;
        }
        catch (...)
        {
            const auto e = std::current_exception();
            std::string kind, message;
            const int code = exit_code_for(e, &kind, &message);
            std::cerr << "subchain: " << kind << ": " << message << "\n";
            if (!err_dir.empty())
            {
                try
                {
                    record_failure(err_dir, e);
                }
                catch (...)
                {
                }
            }
            return code;
        }
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Sub-chain beam codebook design for quantized mmWave phased arrays"};
    app.set_version_flag("--version", version_string);
    app.require_subcommand(1);

    DesignArgs da;
    auto *design = app.add_subcommand("design", "Design codebook families and write a run directory");
    design->add_option("--config", da.config, "Pipeline config JSON or a run manifest.json");
    design->add_option("--out", da.out, "Output directory (overrides output_dir)");
    design->add_option("--seed", da.seed, "Master seed (overrides design.seed)");
    design->add_option("--levels", da.levels, "Comma-separated activation levels, descending, starting at L");
    design->add_option("--method", da.method, "sim-max, sc-max or bc-sc-max");
    design->add_option("--threads", da.threads, "Worker threads for activation search (0 = all cores)");
    design->add_flag("--traces", da.traces, "Also write traces.jsonl");

    std::string m_run, m_out;
    auto *metrics = app.add_subcommand("metrics", "Recompute metrics of a finished run from its codebooks");
    metrics->add_option("--run", m_run, "Run directory")->required();
    metrics->add_option("--out", m_out, "Output directory (default: the run directory)");

    std::vector<std::string> c_runs;
    std::string c_out;
    auto *compare = app.add_subcommand("compare", "Juxtapose matching rates and CDFs of several runs");
    compare->add_option("runs", c_runs, "Run directories; deltas are against the first")->required()->expected(1, -1);
    compare->add_option("--out", c_out, "Output directory")->required();

    std::string s_config, s_out, s_format = "csv";
    std::optional<std::size_t> s_points;
    auto *synth = app.add_subcommand("synth-efield", "Write the synthetic E-field of a config to files");
    synth->add_option("--config", s_config, "Pipeline config JSON (default: the built-in two-array phone)");
    synth->add_option("--out", s_out, "Output directory")->required();
    synth->add_option("--format", s_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    synth->add_option("--n-points", s_points, "Number of grid directions");

    std::string v_codebook, v_efield, v_grid, v_run, v_config;
    auto *validate = app.add_subcommand("validate", "Check codebook, E-field, config or run files");
    validate->add_option("--codebook", v_codebook, "Codebook JSON");
    validate->add_option("--efield", v_efield, "E-field CSV or JSON");
    validate->add_option("--grid", v_grid, "Grid CSV for a CSV E-field");
    validate->add_option("--run", v_run, "Run directory");
    validate->add_option("--config", v_config, "Pipeline config JSON");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (*design)
    {
        fs::path out = da.out;
        return guarded(out,
                       [&]
                       {
                           const PipelineConfig cfg = resolve(da);
                           out = cfg.output_dir;
                           const RunResult r = run_design_pipeline(cfg, out);
                           print_summary(r);
                           std::cout << "wrote " << out.string() << "\n";
                       });
    }
    if (*metrics)
    {
        const fs::path out = m_out.empty() ? fs::path(m_run) : fs::path(m_out);
        return guarded(out,
                       [&]
                       {
                           const auto bundle = run_metrics(m_run);
                           write_artifacts(render_metrics(bundle), out);
                           std::cout << "wrote metrics to " << out.string() << "\n";
                       });
    }
    if (*compare)
    {
        return guarded(c_out,
                       [&]
                       {
                           std::vector<fs::path> dirs(c_runs.begin(), c_runs.end());
                           write_artifacts(run_compare(dirs), c_out);
                           std::cout << "wrote comparison of " << dirs.size() << " runs to " << c_out << "\n";
                       });
    }
    if (*synth)
    {
        return guarded(s_out,
                       [&]
                       {
                           PipelineConfig cfg = s_config.empty() ? PipelineConfig::default_phone() : load_config(s_config);
                           if (cfg.efield.kind != EFieldSource::Kind::synthetic)
                               throw config_error("synth-efield needs a synthetic E-field source");
                           if (s_points)
                               cfg.efield.n_points = *s_points;
                           cfg.validate();
                           const auto arrays = build_arrays(cfg.efield);
                           const auto fmt = detail::format_from_string(s_format);
                           ArtifactSet files;
                           json src{{"source", "file"}, {"format", s_format}};
                           if (fmt == EFieldFormat::csv)
                           {
                               std::ostringstream g;
                               write_grid_csv(g, arrays.front().grid());
                               files.emplace_back("grid.csv", g.str());
                               src["grid"] = "grid.csv";
                           }
                           json names = json::array();
                           for (std::size_t a = 0; a < arrays.size(); ++a)
                           {
                               const std::string name = "efield_array" + std::to_string(a) + "." + s_format;
                               std::ostringstream os;
                               if (fmt == EFieldFormat::csv)
                                   write_efield_csv(os, arrays[a]);
                               else
                                   os << efield_to_json(arrays[a], cfg.design.phase_bits).dump() << "\n";
                               files.emplace_back(name, os.str());
                               names.push_back(name);
                           }
                           src["arrays"] = names;
                           json snippet = config_to_json(cfg);
                           snippet["efield"] = src;
                           files.emplace_back("config.json", snippet.dump(2) + "\n");
                           write_artifacts(files, s_out);
                           std::cout << "wrote " << arrays.size() << " array(s) on " << arrays.front().n_points() << " directions to " << s_out << "\n";
                       });
    }
    if (*validate)
    {
        return guarded({},
                       [&]
                       {
                           if (v_codebook.empty() && v_efield.empty() && v_run.empty() && v_config.empty())
                               throw config_error("validate: nothing to check");
                           if (!v_config.empty())
                           {
                               (void)load_config(v_config);
                               std::cout << v_config << ": ok\n";
                           }
                           if (!v_codebook.empty())
                           {
                               const auto cb = codebook_from_json(read_json_file(v_codebook));
                               std::cout << v_codebook << ": ok (" << cb.method_tag() << ", K = " << cb.size() << ", L_A = " << cb.l_active() << ")\n";
                           }
                           if (!v_efield.empty())
                           {
                               const auto fmt = fs::path(v_efield).extension() == ".json" ? EFieldFormat::json : EFieldFormat::csv;
                               const auto ef = load_efield(v_efield, fmt, v_grid);
                               std::cout << v_efield << ": ok (L = " << ef.n_pol_elements() << ", " << ef.n_points() << " directions)\n";
                           }
                           if (!v_run.empty())
                           {
                               const json m = load_manifest(v_run);
                               (void)config_from_json(m);
                               for (const auto &a : m.at("artifacts"))
                               {
                                   const fs::path p = fs::path(v_run) / a.get<std::string>();
                                   if (!fs::exists(p))
                                       throw data_error("run artifact missing: " + p.string());
                               }
                               (void)load_run_families(v_run, m);
                               std::cout << v_run << ": ok (" << m.at("artifacts").size() << " artifacts)\n";
                           }
                       });
    }
    return 4;
}
