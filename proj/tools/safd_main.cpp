// safd: dimension theory of diagonal self-affine measures from the command
// line. Subcommands: dim | sep | estimate | disint | experiment.
// Exit codes: 0 compute/pass, 1 verdict fail, 2 usage or validation error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "safd/safd.hpp"

namespace {

using namespace safd;

WeightedModel load_model_file(const std::string& path, bool force_exact) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError(std::string("model file is not valid JSON: ") + e.what());
    }
    return model_from_json(j, force_exact);
}

struct OutputOpts {
    bool as_json = false;
    bool as_csv = false;
    std::string out_path;
    std::string svg_path;
};

void add_output_flags(CLI::App* cmd, OutputOpts& o) {
    cmd->add_flag("--json", o.as_json, "emit the full JSON report");
    cmd->add_flag("--csv", o.as_csv, "emit tables as CSV");
    cmd->add_option("--out", o.out_path, "write output to a file instead of stdout");
    cmd->add_option("--svg", o.svg_path, "write a scatter plot of the sampled cloud");
}

int emit(const Report& rep, const OutputOpts& o) {
    std::string payload;
    if (o.as_csv)
        payload = rep.to_csv();
    else if (o.as_json)
        payload = rep.to_json_string();
    else {
        payload = rep.doc().at("experiment").get<std::string>() + "\n";
        for (const auto& v : rep.doc().at("verdicts")) {
            payload += "  [" + v.at("status").get<std::string>() + "] " +
                       v.at("name").get<std::string>() + "  value=" + v.at("value").dump() +
                       " tol=" + v.at("tolerance").dump() + "\n";
        }
        for (const auto& t : rep.doc().at("tables"))
            payload += "  table " + t.at("name").get<std::string>() + ": " +
                       std::to_string(t.at("rows").size()) + " rows\n";
    }
    if (!o.out_path.empty())
        write_text_file(o.out_path, payload);
    else
        std::fputs(payload.c_str(), stdout);
    return rep.any_fail() ? 1 : 0;
}

Report dim_report(const WeightedModel& model) {
    Report rep("dim", 0);
    rep.config()["model"] = model_to_json(model);
    std::vector<std::vector<json>> chi_rows;
    for (int j = 0; j < model.d(); ++j)
        chi_rows.push_back({model.user_coord[j] + 1, model.chi[j]});
    rep.add_table("lyapunov_exponents", {"user_coordinate", "chi"}, chi_rows);

    double H = model.entropy_bits();
    double dimL = lyapunov_dimension(model);
    double dimL_root = lyapunov_dim_root(model);
    AffinityResult A = affinity_dimension(model.ifs);
    std::vector<std::vector<json>> dims;
    dims.push_back({"H_p_bits", H});
    dims.push_back({"dim_L", dimL});
    dims.push_back({"dim_L_root_equation", dimL_root});
    dims.push_back({"min_d_dim_L", std::min(static_cast<double>(model.d()), dimL)});
    dims.push_back({"dim_A", A.s});
    dims.push_back({"dim_A_residual", A.residual});
    rep.add_table("dimensions", {"quantity", "value"}, dims);

    rep.add_verdict("root_equation_agrees",
                    std::fabs(dimL - dimL_root) <= 1e-9 ? VerdictStatus::Pass : VerdictStatus::Fail,
                    std::fabs(dimL - dimL_root), 1e-9);

    std::vector<std::vector<json>> sig;
    for (const auto& s : A.maximizers) {
        std::string perm;
        for (int v : s) perm += std::to_string(v + 1);
        sig.push_back({perm});
    }
    rep.add_table("affinity_maximizers", {"sigma"}, sig);

    if (model.d() == 2 && A.s > 0.0 && A.s < 2.0) {
        auto vecs = full_dimension_vectors(model.ifs);
        std::vector<std::vector<json>> rows;
        for (const auto& v : vecs) {
            json pv = json::array();
            for (double x : v.p) pv.push_back(x);
            rows.push_back({std::to_string(v.sigma[0] + 1) + std::to_string(v.sigma[1] + 1), pv,
                            v.sum, v.dim_L, v.chi_s1, v.chi_s2, v.chi_distinct});
        }
        rep.add_table("full_dimension_vectors",
                      {"sigma", "p_sigma", "sum", "dim_L", "chi_sigma1", "chi_sigma2", "chi_distinct"},
                      rows);
    }
    for (const auto& w : model.warnings)
        rep.add_verdict("warning", VerdictStatus::Observation, 0.0, 0.0, w);
    return rep;
}

Report sep_report(const WeightedModel& model, int coord_user, int max_n, uint64_t budget) {
    if (coord_user < 1 || coord_user > model.d())
        throw PreconditionViolated("--coord must name a coordinate in 1..d");
    int internal = -1;
    for (int j = 0; j < model.d(); ++j)
        if (model.user_coord[j] == coord_user - 1) internal = j;
    auto psi = model.coordinate_system(internal);
    auto srep = separation_report(psi, max_n, budget);

    Report rep("sep", 0);
    rep.config()["coord"] = coord_user;
    rep.config()["max_n"] = max_n;
    rep.config()["exact_mode"] = (model.ifs.mode == NumMode::Exact);
    std::vector<std::vector<json>> rows;
    for (const auto& lv : srep.levels) {
        json witness = "";
        if (lv.overlap_witness)
            witness = lv.overlap_witness->first.str(model.alphabet()) + "|" +
                      lv.overlap_witness->second.str(model.alphabet());
        rows.push_back({lv.n, lv.delta.infinite ? json("inf") : json(lv.delta.as_double()),
                        lv.s.infinite ? json("inf") : json(lv.s.as_double()), witness});
    }
    rep.add_table("separation", {"n", "delta_n", "s_n", "overlap_witness"}, rows);
    rep.config()["c_hat_min"] = srep.c_hat_min ? json(*srep.c_hat_min) : json();
    rep.config()["c_hat_lsq"] = srep.c_hat_lsq ? json(*srep.c_hat_lsq) : json();
    rep.config()["note"] = srep.note;
    rep.add_verdict("no_exact_overlaps",
                    srep.no_exact_overlaps ? VerdictStatus::Pass : VerdictStatus::Fail,
                    srep.no_exact_overlaps ? 1.0 : 0.0, 1.0,
                    model.ifs.mode == NumMode::Exact ? "exact enumeration"
                                                     : "float mode: tiny gaps are indeterminate");
    rep.add_verdict("diophantine_evidence",
                    srep.diophantine_evidence ? VerdictStatus::Pass : VerdictStatus::Fail,
                    srep.diophantine_evidence ? 1.0 : 0.0, 1.0);
    if (srep.estimators_disagree)
        rep.add_verdict("rate_estimators_disagree", VerdictStatus::Observation, 0.0, 0.10,
                        "min and least-squares estimates of c differ by more than 10%");
    return rep;
}

Report estimate_report(const WeightedModel& model, size_t samples, int depth, int lo, int hi,
                       uint64_t seed, int threads, const std::string& svg_path) {
    Report rep("estimate", seed);
    if (lo <= 0) {
        auto band = default_level_band(samples, model.d());
        lo = band.first;
        hi = band.second;
    }
    rep.config()["samples"] = samples;
    rep.config()["levels"] = {lo, hi};
    rep.config()["model"] = model_to_json(model);

    SampleConfig sc;
    sc.n_points = samples;
    sc.depth = depth > 0 ? depth : auto_depth(model, hi);
    sc.seed = seed;
    sc.threads = threads;
    sc.target_level = hi;
    rep.config()["depth"] = sc.depth;
    auto cloud = sample_mu(model, sc);
    auto band = entropy_band(cloud, lo, hi);

    std::vector<std::vector<json>> rows;
    for (size_t i = 0; i < band.levels.size(); ++i)
        rows.push_back({band.levels[i], band.H[i], static_cast<uint64_t>(band.occupied[i])});
    rep.add_table("entropy_profile", {"level", "H_bits", "occupied"}, rows);

    double theory = std::min(static_cast<double>(model.d()), lyapunov_dimension(model));
    std::vector<std::vector<json>> sum;
    sum.push_back({"entropy_dimension_estimate", band.slope});
    sum.push_back({"min_d_dim_L", theory});
    rep.add_table("summary", {"quantity", "value"}, sum);
    if (band.bias_caveat)
        rep.add_verdict("plug_in_bias_caveat", VerdictStatus::Observation,
                        static_cast<double>(band.occupied.back()), samples / 10.0,
                        "occupied cells exceed samples/10; entropies biased low");
    if (!svg_path.empty()) write_text_file(svg_path, svg_scatter(cloud));
    return rep;
}

Report disint_report(const WeightedModel& model, int N, int n, Granularity g, size_t samples,
                     uint64_t seed, uint64_t budget, int threads) {
    Report rep("disint", seed);
    rep.config()["N"] = N;
    rep.config()["n"] = n;
    rep.config()["granularity"] = g == Granularity::ByWord ? "word" : "linear";
    rep.config()["samples"] = samples;
    rep.config()["model"] = model_to_json(model);

    auto gamma = build_gamma(model, N, g, budget);
    std::vector<std::vector<json>> classes;
    for (size_t c = 0; c < gamma.size(); ++c) {
        const auto& cls = gamma.classes[c];
        classes.push_back({static_cast<uint64_t>(c), cls.linpart_str(), cls.mass, cls.word_count});
    }
    rep.add_table("gamma_classes", {"class", "linear_part", "mass", "words"}, classes);
    rep.config()["H_beta_gamma_bits"] = gamma.entropy_bits();

    std::vector<std::vector<json>> hrows;
    double h_last = model.entropy_bits();
    // Exact-mode enumeration costs ~100x float per word; cap the table's
    // enumeration well below the raw word budget so the CLI stays at desk
    // scale. The closed form still covers overlap-free systems beyond it.
    uint64_t hrw_budget = std::min<uint64_t>(budget, 300000);
    for (int k = 1; k <= n; ++k) {
        try {
            auto r = h_rw_finite(model, gamma, k, hrw_budget);
            hrows.push_back({k, r.value, r.exact_enum ? "enumeration" : "closed-form"});
            h_last = r.value;
        } catch (const BudgetExceeded&) {
            hrows.push_back({k, json(), "over-budget"});
        }
    }
    rep.add_table("h_rw_finite", {"n", "bits_per_symbol", "method"}, hrows);

    double dim_pred = std::min(static_cast<double>(model.d()),
                               f_phi(LyapunovProfile::from_model(model), h_last));
    auto kap = kappa_estimate(model, dim_pred, h_last);
    std::vector<std::vector<json>> krows;
    krows.push_back({"h_rw", h_last});
    krows.push_back({"dim_A_prediction_min_d_f", dim_pred});
    krows.push_back({"kappa", kap.kappa});
    krows.push_back({"f_phi_of_h_rw", kap.f_of_hrw});
    rep.add_table("kappa_report", {"quantity", "value"}, krows);

    ConvolutionConfig cc;
    cc.N = N;
    cc.n = std::min(3, std::max(1, n));
    cc.samples = samples;
    cc.seed = seed;
    cc.threads = threads;
    auto conv = run_convolution_check(model, cc);
    for (const auto& t : conv.doc().at("tables"))
        rep.add_table("convolution_" + t.at("name").get<std::string>(),
                      t.at("columns").get<std::vector<std::string>>(),
                      t.at("rows").get<std::vector<std::vector<json>>>());
    for (const auto& v : conv.doc().at("verdicts"))
        rep.add_verdict("convolution_" + v.at("name").get<std::string>(),
                        v.at("status") == "pass"          ? VerdictStatus::Pass
                        : v.at("status") == "observation" ? VerdictStatus::Observation
                                                          : VerdictStatus::Fail,
                        v.at("value").is_number() ? v.at("value").get<double>() : 0.0,
                        v.at("tolerance").is_number() ? v.at("tolerance").get<double>() : 0.0);
    return rep;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dimension theory of diagonal self-affine measures"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    std::string model_path;
    bool force_exact = false;
    uint64_t seed = 7;
    uint64_t budget = safd::kDefaultEnumBudget;
    int threads = 1;
    app.add_flag("--exact", force_exact, "force exact-rational arithmetic for model parameters");
    app.add_option("--seed", seed, "random seed (all randomness derives from it)");
    app.add_option("--budget", budget, "enumeration budget (composed maps / atoms)");
    app.add_option("--threads", threads, "worker threads (results are thread-count independent)");

    OutputOpts out_dim, out_sep, out_est, out_dis, out_exp;

    auto* cmd_dim = app.add_subcommand("dim", "closed-form dimension quantities");
    cmd_dim->add_option("model", model_path, "model JSON file")->required();
    add_output_flags(cmd_dim, out_dim);

    auto* cmd_sep = app.add_subcommand("sep", "separation diagnostics of a coordinate system");
    cmd_sep->add_option("model", model_path, "model JSON file")->required();
    int coord = 1, max_n = 8;
    cmd_sep->add_option("--coord", coord, "user coordinate (1-based)");
    cmd_sep->add_option("--max-n", max_n, "deepest level to enumerate");
    add_output_flags(cmd_sep, out_sep);

    auto* cmd_est = app.add_subcommand("estimate", "empirical entropy-dimension estimate");
    cmd_est->add_option("model", model_path, "model JSON file")->required();
    size_t samples = 1000000;
    int depth = 0;
    std::string levels = "";
    cmd_est->add_option("--samples", samples, "number of sampled points");
    cmd_est->add_option("--depth", depth, "coding depth in symbols (0 = auto)");
    cmd_est->add_option("--levels", levels, "dyadic level band a:b");
    add_output_flags(cmd_est, out_est);

    auto* cmd_dis = app.add_subcommand("disint", "disintegration by linear parts");
    cmd_dis->add_option("model", model_path, "model JSON file")->required();
    int N = 2, nblocks = 4;
    std::string granularity = "linear";
    size_t dis_samples = 100000;
    cmd_dis->add_option("--N", N, "block length");
    cmd_dis->add_option("--n", nblocks, "number of blocks for h_rw and the convolution check");
    cmd_dis->add_option("--granularity", granularity, "linear|word");
    cmd_dis->add_option("--samples", dis_samples, "samples for the convolution check");
    add_output_flags(cmd_dis, out_dis);

    auto* cmd_exp = app.add_subcommand("experiment", "canned experiments");
    std::string exp_name;
    cmd_exp->add_option("name", exp_name,
                        "counterexample|main-theorem|full-dim|typical-sweep|entropy-increase|superexp")
        ->required();
    std::string exp_model;
    size_t exp_samples = 1000000;
    std::string lambda_str = "3/4";
    int exp_n = 4, exp_N = 2, exp_M = 2, trials = 50;
    double tolerance = 0.1;
    cmd_exp->add_option("--model", exp_model, "model JSON file (where applicable)");
    cmd_exp->add_option("--samples", exp_samples, "sample count");
    cmd_exp->add_option("--lambda", lambda_str, "rational contraction for the counterexample");
    cmd_exp->add_option("--n", exp_n, "block count / word length parameter");
    cmd_exp->add_option("--N", exp_N, "block length for disintegration experiments");
    cmd_exp->add_option("--M", exp_M, "scale acceleration for superexp");
    cmd_exp->add_option("--trials", trials, "trials for the typical sweep");
    cmd_exp->add_option("--tolerance", tolerance, "dimension tolerance");
    add_output_flags(cmd_exp, out_exp);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e); // prints the message or help text
        return code == 0 ? 0 : 2;
    }

    try {
        using namespace safd;
        if (cmd_dim->parsed()) {
            return emit(dim_report(load_model_file(model_path, force_exact)), out_dim);
        }
        if (cmd_sep->parsed()) {
            auto model = load_model_file(model_path, force_exact);
            return emit(sep_report(model, coord, max_n, budget), out_sep);
        }
        if (cmd_est->parsed()) {
            auto model = load_model_file(model_path, force_exact);
            int lo = 0, hi = 0;
            if (!levels.empty()) {
                if (std::sscanf(levels.c_str(), "%d:%d", &lo, &hi) != 2)
                    throw ParseError("--levels wants a:b");
            }
            return emit(estimate_report(model, samples, depth, lo, hi, seed, threads,
                                        out_est.svg_path),
                        out_est);
        }
        if (cmd_dis->parsed()) {
            auto model = load_model_file(model_path, force_exact);
            Granularity g = granularity == "word" ? Granularity::ByWord : Granularity::ByLinearPart;
            return emit(disint_report(model, N, nblocks, g, dis_samples, seed, budget, threads),
                        out_dis);
        }
        if (cmd_exp->parsed()) {
            Report rep("", 0);
            if (exp_name == "counterexample") {
                CounterexampleConfig cfg;
                cfg.lambda = parse_rational(lambda_str);
                cfg.n = exp_n;
                cfg.samples = exp_samples;
                cfg.seed = seed;
                cfg.threads = threads;
                rep = run_counterexample(cfg);
            } else if (exp_name == "main-theorem") {
                if (exp_model.empty()) throw ParseError("main-theorem needs --model");
                MainTheoremConfig cfg;
                cfg.samples = exp_samples;
                cfg.seed = seed;
                cfg.threads = threads;
                cfg.tolerance = tolerance;
                rep = run_main_theorem_check(load_model_file(exp_model, force_exact), cfg);
            } else if (exp_name == "full-dim") {
                if (exp_model.empty()) throw ParseError("full-dim needs --model");
                rep = run_full_dim_measures(load_model_file(exp_model, force_exact));
            } else if (exp_name == "typical-sweep") {
                TypicalSweepConfig cfg;
                cfg.translations = {{0.0, 0.0}, {1.0, 1.0}};
                cfg.trials = trials;
                cfg.samples = exp_samples == 1000000 ? 100000 : exp_samples;
                cfg.seed = seed;
                cfg.threads = threads;
                rep = run_typical_sweep(cfg);
            } else if (exp_name == "entropy-increase") {
                if (exp_model.empty()) throw ParseError("entropy-increase needs --model");
                EntropyIncreaseConfig cfg;
                cfg.N = exp_N;
                cfg.n = exp_n > 2 ? exp_n : 12;
                cfg.samples = exp_samples == 1000000 ? 100000 : exp_samples;
                cfg.seed = seed;
                cfg.threads = threads;
                rep = run_entropy_increase(load_model_file(exp_model, force_exact), cfg);
            } else if (exp_name == "superexp") {
                if (exp_model.empty()) throw ParseError("superexp needs --model");
                SuperexpConfig cfg;
                cfg.N = exp_N;
                cfg.M = exp_M;
                cfg.n_max = exp_n;
                cfg.seed = seed;
                cfg.budget = budget;
                rep = run_superexp_concentration(load_model_file(exp_model, force_exact), cfg);
            } else {
                throw ParseError("unknown experiment: " + exp_name);
            }
            return emit(rep, out_exp);
        }
    } catch (const safd::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 2;
    }
    return 2;
}
