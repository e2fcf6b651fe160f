// minsuff - checks likelihood-ratio minimality criteria for dominated models
// on finite parameter grids and sample corpora, exactly on finite models.
//
// Exit codes: 0 verified / demo reproduced, 1 refuted (witness in report),
// 2 inconclusive, 3 input or spec error.

#include <CLI11.hpp>
#include <chrono>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "minsuff/criteria.hpp"
#include "minsuff/finite.hpp"
#include "minsuff/model.hpp"
#include "minsuff/ratio.hpp"
#include "minsuff/report.hpp"
#include "minsuff/versions.hpp"

namespace {

using minsuff::Corpus;
using minsuff::Model;
using minsuff::ParamGrid;
using minsuff::Partition;
using minsuff::Statistic;
using minsuff::Vec;
using nlohmann::json;

struct Outcome {
    int exit_code = 0;
    json result;
    json findings = json::array();
};

struct Inputs {
    json digests = json::object();

    json load(const std::string& role, const std::string& path) {
        std::string bytes = minsuff::report::read_file(path);
        digests[role] = {{"path", path}, {"fnv1a64", minsuff::report::fnv1a64_hex(bytes)}};
        try {
            return json::parse(bytes);
        } catch (const json::parse_error& e) {
            throw minsuff::SpecError("malformed JSON in \"" + path + "\": " + e.what());
        }
    }
};

int status_exit(minsuff::criteria::Status s) {
    switch (s) {
        case minsuff::criteria::Status::verified_on_probe: return 0;
        case minsuff::criteria::Status::refuted: return 1;
        case minsuff::criteria::Status::inconclusive: return 2;
    }
    return 3;
}

Outcome verdict_outcome(const minsuff::criteria::Verdict& v) {
    Outcome out;
    out.exit_code = status_exit(v.status);
    out.result = v.to_json();
    out.findings = out.result["findings"];
    return out;
}

Vec parse_csv_vector(const std::string& text) {
    Vec out;
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            vals.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw minsuff::SpecError("malformed number \"" + item + "\" in vector");
        }
    }
    if (vals.empty()) throw minsuff::SpecError("empty vector argument");
    out.resize(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) out[static_cast<Eigen::Index>(i)] = vals[i];
    return out;
}

json partition_json(const Partition& p) {
    json j;
    j["corpus"] = p.corpus_label;
    j["blocks"] = p.blocks;
    if (p.tolerance_ambiguity) j["tolerance_ambiguity"] = true;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"likelihood-ratio minimal-sufficiency checks on finite probes"};
    app.fallthrough();

    std::string report_path;
    bool text_output = false;
    bool json_output = false;
    app.add_option("--report", report_path, "also write the report JSON to this path");
    app.add_flag("--text", text_output, "human-readable output");
    app.add_flag("--json", json_output, "JSON output (default)");

    double tol = 1e-9;
    app.add_option("--tol", tol, "log-spread tolerance for proportionality tests");

    Inputs inputs;
    std::function<Outcome()> action;

    // ---- eval ------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a model density or an expression");
    {
        auto opts = std::make_shared<std::map<std::string, std::string>>();
        auto dims = std::make_shared<std::pair<int, int>>(1, 1);
        eval_cmd->add_option("--model", (*opts)["model"], "model spec JSON");
        eval_cmd->add_option("--expr", (*opts)["expr"], "raw expression text");
        eval_cmd->add_option("--sample-dim", dims->first, "sample dimension for --expr");
        eval_cmd->add_option("--param-dim", dims->second, "parameter dimension for --expr");
        eval_cmd->add_option("--x", (*opts)["x"], "sample point, comma-separated")->required();
        eval_cmd->add_option("--theta", (*opts)["theta"], "parameter point, comma-separated")
            ->required();
        eval_cmd->callback([&, opts, dims] {
            action = [&, opts, dims]() -> Outcome {
                Vec x = parse_csv_vector((*opts)["x"]);
                Vec theta = parse_csv_vector((*opts)["theta"]);
                Outcome out;
                if (!(*opts)["model"].empty()) {
                    Model m = minsuff::load_model(inputs.load("model", (*opts)["model"]));
                    double lv = minsuff::log_density(m, theta, x);
                    out.result["log_density"] = lv;
                    out.result["density"] = std::exp(lv);
                } else if (!(*opts)["expr"].empty()) {
                    minsuff::expr::Expr e =
                        minsuff::expr::parse((*opts)["expr"], dims->first, dims->second);
                    auto lin = minsuff::expr::eval(e, x, theta);
                    out.result["value"] = lin.value;
                    out.result["nan_seen"] = lin.nan_seen;
                    try {
                        out.result["log_value"] = minsuff::expr::eval_log(e, x, theta).log_value;
                    } catch (const minsuff::NegativeDensityError&) {
                        out.result["log_value"] = nullptr;
                    }
                } else {
                    throw minsuff::SpecError("eval needs --model or --expr");
                }
                return out;
            };
        });
    }

    // ---- partition ---------------------------------------------------------
    auto* part_cmd = app.add_subcommand("partition", "ratio / statistic partitions of a corpus");
    {
        auto opts = std::make_shared<std::map<std::string, std::string>>();
        part_cmd->add_option("--model", (*opts)["model"], "model spec JSON");
        part_cmd->add_option("--grid", (*opts)["grid"], "parameter grid JSON");
        part_cmd->add_option("--corpus", (*opts)["corpus"], "corpus JSON");
        part_cmd->add_option("--statistic", (*opts)["statistic"], "statistic spec JSON");
        part_cmd->add_option("--finite", (*opts)["finite"], "finite model JSON (exact path)");
        part_cmd->callback([&, opts] {
            action = [&, opts]() -> Outcome {
                Outcome out;
                if (!(*opts)["finite"].empty()) {
                    minsuff::finite::FiniteModel fm =
                        minsuff::finite::load_finite_model(inputs.load("finite", (*opts)["finite"]));
                    Partition p = minsuff::finite::minimal_partition(fm);
                    json blocks = json::array();
                    for (const auto& blk : p.blocks) {
                        json b = json::array();
                        for (int i : blk) b.push_back(fm.points[static_cast<std::size_t>(i)]);
                        blocks.push_back(b);
                    }
                    out.result["minimal_partition"] = blocks;
                    out.result["sufficient"] =
                        minsuff::finite::is_sufficient_partition(fm, p).sufficient;
                    out.result["exact"] = true;
                    return out;
                }
                if ((*opts)["model"].empty() || (*opts)["grid"].empty() ||
                    (*opts)["corpus"].empty())
                    throw minsuff::SpecError(
                        "partition needs --finite, or --model with --grid and --corpus");
                Model m = minsuff::load_model(inputs.load("model", (*opts)["model"]));
                ParamGrid g = minsuff::load_grid(inputs.load("grid", (*opts)["grid"]));
                Corpus c = minsuff::load_corpus(inputs.load("corpus", (*opts)["corpus"]));
                Partition rp = minsuff::ratio_partition(m, g, c, tol);
                out.result["ratio_partition"] = partition_json(rp);
                if (!(*opts)["statistic"].empty()) {
                    Statistic s = minsuff::load_statistic(
                        inputs.load("statistic", (*opts)["statistic"]), m.sample_dim, m.param_dim);
                    Partition sp = minsuff::statistic_partition(s, c);
                    out.result["statistic_partition"] = partition_json(sp);
                    out.result["statistic_refines_ratio"] = minsuff::refines(sp, rp);
                    out.result["ratio_refines_statistic"] = minsuff::refines(rp, sp);
                }
                return out;
            };
        });
    }

    // ---- check -------------------------------------------------------------
    auto* check_cmd = app.add_subcommand("check", "run a minimality criterion check");
    check_cmd->require_subcommand(1);

    struct CheckOpts {
        std::map<std::string, std::string> files;
        bool certified = false;
        int neighbors = 3;
        double radius = 0.5;
        double approx_tol = 0.25;
        double mono_slack = 1e-6;
        double pivot_tol = 0.0;
    };
    auto copts = std::make_shared<CheckOpts>();

    auto add_model_stat = [&](CLI::App* cmd, bool need_stat = true) {
        cmd->add_option("--model", copts->files["model"], "model spec JSON")->required();
        if (need_stat)
            cmd->add_option("--statistic", copts->files["statistic"], "statistic spec JSON")
                ->required();
        cmd->add_option("--corpus", copts->files["corpus"], "corpus JSON")->required();
    };

    auto* m31 = check_cmd->add_subcommand(
        "m31", "ratio implication over a countable grid (needs sufficiency evidence)");
    add_model_stat(m31);
    m31->add_option("--theta0", copts->files["theta0"], "countable stand-in grid JSON")->required();
    m31->add_flag("--certified-sufficient", copts->certified,
                  "caller certifies the statistic is sufficient");
    m31->add_option("--factorization", copts->files["factorization"],
                    "validate sufficiency from this g/h split JSON");
    m31->callback([&, copts] {
        action = [&, copts]() -> Outcome {
            Model m = minsuff::load_model(inputs.load("model", copts->files["model"]));
            Statistic s = minsuff::load_statistic(
                inputs.load("statistic", copts->files["statistic"]), m.sample_dim, m.param_dim);
            ParamGrid theta0 = minsuff::load_grid(inputs.load("theta0", copts->files["theta0"]));
            Corpus c = minsuff::load_corpus(inputs.load("corpus", copts->files["corpus"]));
            std::optional<minsuff::criteria::SufficiencyEvidence> evidence;
            if (!copts->files["factorization"].empty()) {
                auto f = minsuff::criteria::load_factorization(
                    inputs.load("factorization", copts->files["factorization"]), m, s);
                evidence = minsuff::criteria::SufficiencyEvidence::validated(std::move(f));
            } else if (copts->certified) {
                evidence = minsuff::criteria::SufficiencyEvidence::certified();
            }
            return verdict_outcome(
                minsuff::criteria::check_ratio_implication(m, s, theta0, c, tol, evidence));
        };
    });

    auto* m32 = check_cmd->add_subcommand(
        "m32", "approximation + biconditional test over a dense countable grid");
    add_model_stat(m32);
    m32->add_option("--theta0", copts->files["theta0"], "countable stand-in grid JSON")->required();
    m32->add_option("--probe", copts->files["probe"], "probe parameter grid JSON")->required();
    m32->add_option("--neighbors", copts->neighbors, "nearest theta0 points per probe theta");
    m32->add_option("--radius", copts->radius, "sparsity guard on nearest-neighbor distance");
    m32->add_option("--approx-tol", copts->approx_tol, "closeness bound for the last neighbor");
    m32->add_option("--mono-slack", copts->mono_slack, "slack in the monotone-approach test");
    m32->callback([&, copts] {
        action = [&, copts]() -> Outcome {
            Model m = minsuff::load_model(inputs.load("model", copts->files["model"]));
            Statistic s = minsuff::load_statistic(
                inputs.load("statistic", copts->files["statistic"]), m.sample_dim, m.param_dim);
            ParamGrid theta0 = minsuff::load_grid(inputs.load("theta0", copts->files["theta0"]));
            ParamGrid probe = minsuff::load_grid(inputs.load("probe", copts->files["probe"]));
            Corpus c = minsuff::load_corpus(inputs.load("corpus", copts->files["corpus"]));
            minsuff::criteria::SatoOptions opt;
            opt.tol = tol;
            opt.neighbor_count = copts->neighbors;
            opt.radius = copts->radius;
            opt.approx_tol = copts->approx_tol;
            opt.mono_slack = copts->mono_slack;
            return verdict_outcome(minsuff::criteria::check_sato(m, s, theta0, probe, c, opt));
        };
    });

    auto* m33 = check_cmd->add_subcommand(
        "m33", "exponential-family affine-independence rank certificate");
    m33->add_option("--expfam", copts->files["expfam"], "exponential family spec JSON")->required();
    m33->add_option("--probe", copts->files["probe"], "probe parameter grid JSON")->required();
    m33->add_option("--pivot-tol", copts->pivot_tol,
                    "pivot threshold (default 1e-10 * largest column norm)");
    m33->callback([&, copts] {
        action = [&, copts]() -> Outcome {
            auto ef = minsuff::criteria::load_expfam(inputs.load("expfam", copts->files["expfam"]));
            ParamGrid probe = minsuff::load_grid(inputs.load("probe", copts->files["probe"]));
            return verdict_outcome(minsuff::criteria::check_expfam_rank(ef, probe, copts->pivot_tol));
        };
    });

    auto* factcheck = check_cmd->add_subcommand(
        "factorization", "validate a g/h split against the density on grid x corpus");
    add_model_stat(factcheck);
    factcheck->add_option("--grid", copts->files["grid"], "parameter grid JSON")->required();
    factcheck->add_option("--factorization", copts->files["factorization"], "g/h split JSON")
        ->required();
    factcheck->callback([&, copts] {
        action = [&, copts]() -> Outcome {
            Model m = minsuff::load_model(inputs.load("model", copts->files["model"]));
            Statistic s = minsuff::load_statistic(
                inputs.load("statistic", copts->files["statistic"]), m.sample_dim, m.param_dim);
            ParamGrid g = minsuff::load_grid(inputs.load("grid", copts->files["grid"]));
            Corpus c = minsuff::load_corpus(inputs.load("corpus", copts->files["corpus"]));
            auto f = minsuff::criteria::load_factorization(
                inputs.load("factorization", copts->files["factorization"]), m, s);
            return verdict_outcome(minsuff::criteria::check_factorization(m, s, f, g, c, tol));
        };
    });

    // ---- demo ----------------------------------------------------------------
    auto* demo_cmd = app.add_subcommand("demo", "self-contained reproductions");
    demo_cmd->require_subcommand(1);

    auto* pfz = demo_cmd->add_subcommand("pfanzagl",
                                         "finite counterexample to the separation criterion");
    auto scaled = std::make_shared<bool>(false);
    pfz->add_flag("--scaled", *scaled, "also report the x4-scaled density variant");
    pfz->callback([&, scaled] {
        action = [scaled]() -> Outcome {
            minsuff::finite::DemoResult d = minsuff::finite::pfanzagl_demo(*scaled);
            Outcome out;
            out.exit_code = d.ok ? 0 : 1;
            out.result = d.report;
            return out;
        };
    });

    auto* vers = demo_cmd->add_subcommand(
        "versions", "density-version perturbation collapses pointwise proportionality");
    {
        auto vopt = std::make_shared<std::pair<int, std::map<std::string, std::string>>>(
            2, std::map<std::string, std::string>{});
        vers->add_option("--n", vopt->first, "sample dimension (default 2)");
        vers->add_option("--corpus", vopt->second["corpus"], "corpus JSON (default built in)");
        vers->add_option("--theta0", vopt->second["theta0"],
                         "disjoint grid JSON (default {-1, 1/3, 2})");
        vers->callback([&, vopt] {
            action = [&, vopt]() -> Outcome {
                Corpus corpus;
                if (!vopt->second["corpus"].empty()) {
                    corpus = minsuff::load_corpus(inputs.load("corpus", vopt->second["corpus"]));
                } else {
                    corpus.label = "versions-default";
                    corpus.points = {Vec(2), Vec(2), Vec(2)};
                    corpus.points[0] << 1, -1;
                    corpus.points[1] << 0, 0;
                    corpus.points[2] << 2, -2;
                }
                ParamGrid theta0;
                if (!vopt->second["theta0"].empty()) {
                    theta0 = minsuff::load_grid(inputs.load("theta0", vopt->second["theta0"]));
                } else {
                    theta0.label = "theta0-disjoint";
                    theta0.points = {Vec(1), Vec(1), Vec(1)};
                    theta0.points[0] << -1;
                    theta0.points[1] << 1.0 / 3.0;
                    theta0.points[2] << 2;
                }
                minsuff::versions::DemoResult d =
                    minsuff::versions::version_demo(vopt->first, corpus, theta0, tol);
                Outcome out;
                out.exit_code = d.ok ? 0 : 1;
                out.result = d.report;
                return out;
            };
        });
    }

    // ---- tv --------------------------------------------------------------------
    auto* tv_cmd = app.add_subcommand("tv", "exact total variation distance on a finite model");
    {
        auto topt = std::make_shared<std::map<std::string, std::string>>();
        tv_cmd->add_option("--finite", (*topt)["finite"], "finite model JSON")->required();
        tv_cmd->add_option("--a", (*topt)["a"], "first probe parameter label")->required();
        tv_cmd->add_option("--b", (*topt)["b"], "second probe parameter label")->required();
        tv_cmd->callback([&, topt] {
            action = [&, topt]() -> Outcome {
                minsuff::finite::FiniteModel fm =
                    minsuff::finite::load_finite_model(inputs.load("finite", (*topt)["finite"]));
                Outcome out;
                out.result["theta_a"] = (*topt)["a"];
                out.result["theta_b"] = (*topt)["b"];
                out.result["tv"] =
                    minsuff::finite::rational_str(minsuff::finite::tv_distance(fm, (*topt)["a"], (*topt)["b"]));
                out.result["exact"] = true;
                return out;
            };
        });
    }

    app.require_subcommand(1);

    std::string command;
    for (int i = 0; i < argc; ++i) {
        if (i) command += ' ';
        command += argv[i];
    }

    CLI11_PARSE(app, argc, argv);

    auto started = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
        outcome = action();
    } catch (const minsuff::SpecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const minsuff::expr::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const minsuff::NegativeDensityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - started)
                       .count();

    json rep = minsuff::report::make_report(command, inputs.digests, outcome.result,
                                            outcome.findings, elapsed);
    std::string body = text_output && !json_output ? minsuff::report::render_text(rep)
                                                   : rep.dump(2) + "\n";
    std::cout << body;
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) {
            std::cerr << "error: cannot write report to \"" << report_path << "\"\n";
            return 3;
        }
        out << rep.dump(2) << "\n";
    }
    return outcome.exit_code;
}
