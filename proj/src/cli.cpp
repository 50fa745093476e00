#include "randfact/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "randfact/dense.hpp"
#include "randfact/diagnostics.hpp"
#include "randfact/fullfact.hpp"
#include "randfact/lowrank.hpp"
#include "randfact/matrix_io.hpp"
#include "randfact/rangefinder.hpp"
#include "randfact/stream.hpp"

namespace randfact {
namespace {

using nlohmann::json;

const std::set<std::string>& algo_names() {
    static const std::set<std::string> names = {
        "rsvd", "spevd", "spsvd", "nystrom", "id", "fastid",
        "cur", "adaptive", "blocked", "hqrrp", "randutv"};
    return names;
}

struct Knobs {
    idx k = 10;
    idx p = 10;
    idx q = 0;
    idx b = 32;
    idx r = 10;
    double eps = 1e-6;
    std::uint64_t seed = 0;
    bool keep_oversamples = false;
    bool reorthonormalize = false;
    bool p_given = false; // spevd/spsvd default p to k when --p was not passed
};

DenseMatrix gather_columns(const DenseMatrix& a, const std::vector<idx>& js) {
    DenseMatrix c(a.rows, static_cast<idx>(js.size()));
    for (idx j = 0; j < c.cols; ++j)
        for (idx i = 0; i < a.rows; ++i) c(i, j) = a(i, js[static_cast<std::size_t>(j)]);
    return c;
}

DenseMatrix gather_rows(const DenseMatrix& a, const std::vector<idx>& is) {
    DenseMatrix r(static_cast<idx>(is.size()), a.cols);
    for (idx j = 0; j < a.cols; ++j)
        for (idx i = 0; i < r.rows; ++i) r(i, j) = a(is[static_cast<std::size_t>(i)], j);
    return r;
}

DenseMatrix scale_columns(const DenseMatrix& u, const std::vector<double>& d) {
    DenseMatrix s = u;
    for (idx j = 0; j < s.cols; ++j)
        for (idx i = 0; i < s.rows; ++i) s(i, j) *= d[static_cast<std::size_t>(j)];
    return s;
}

json head_of(const std::vector<double>& v, std::size_t n = 10) {
    json arr = json::array();
    for (std::size_t i = 0; i < v.size() && i < n; ++i) arr.push_back(v[i]);
    return arr;
}

json head_of_idx(const std::vector<idx>& v, std::size_t n = 10) {
    json arr = json::array();
    for (std::size_t i = 0; i < v.size() && i < n; ++i) arr.push_back(v[i]);
    return arr;
}

struct AlgoRun {
    json results;
    std::vector<std::string> warnings;
    DenseMatrix approx;    // reconstruction rebuilt from the returned factors
    DenseMatrix reference; // what approx approximates (A, or A(:, perm) for hqrrp)
};

AlgoRun run_algo(const std::string& algo, const DenseMatrix& a, const Knobs& kb) {
    AlgoRun out;
    out.reference = a;
    const bool single_pass = algo == "spevd" || algo == "spsvd";
    const idx p_eff = (single_pass && !kb.p_given) ? kb.k : kb.p;

    if (algo == "rsvd") {
        SvdFactors f = rsvd(a, kb.k, p_eff, kb.q, kb.seed, kb.keep_oversamples, kb.reorthonormalize);
        out.approx = f.D.empty() ? DenseMatrix(a.rows, a.cols)
                                 : multiply(scale_columns(f.U, f.D), f.V, false, true);
        out.results["rank"] = f.D.size();
        out.results["singvals_head"] = head_of(f.D);
    } else if (algo == "spevd") {
        MatrixStream stream(a, kb.b);
        LowRankEvd f = single_pass_evd(stream, kb.k, p_eff, kb.seed);
        out.approx = multiply(scale_columns(f.U, f.lambda), f.U, false, true);
        out.results["rank"] = f.lambda.size();
        out.results["eigvals_head"] = head_of(f.lambda);
        out.results["p_used"] = p_eff;
        if (f.conditioning_warning)
            out.warnings.push_back("sketch core solve is ill conditioned; eigenvalues may be noisy");
    } else if (algo == "spsvd") {
        MatrixStream stream(a, kb.b);
        SvdFactors f = single_pass_svd(stream, kb.k, p_eff, kb.seed);
        out.approx = multiply(scale_columns(f.U, f.D), f.V, false, true);
        out.results["rank"] = f.D.size();
        out.results["singvals_head"] = head_of(f.D);
        out.results["p_used"] = p_eff;
    } else if (algo == "nystrom") {
        LowRankEvd f = nystrom_evd(a, kb.k, p_eff, kb.seed);
        out.approx = multiply(scale_columns(f.U, f.lambda), f.U, false, true);
        out.results["rank"] = f.lambda.size();
        out.results["eigvals_head"] = head_of(f.lambda);
        if (f.conditioning_warning)
            out.warnings.push_back("Cholesky needed a trace shift; smallest eigenvalues are regularized");
    } else if (algo == "id") {
        IdFactors f = randomized_id(a, kb.k, p_eff, kb.q, kb.seed);
        out.approx = multiply(f.X, gather_rows(a, f.Is));
        out.results["rank"] = f.Is.size();
        out.results["rows_head"] = head_of_idx(f.Is);
        if (f.rank_truncated) {
            out.results["rank_truncated"] = true;
            out.warnings.push_back("numerical rank is below the requested k; factors use the smaller rank");
        }
    } else if (algo == "fastid") {
        IdFactors f = fast_randomized_id(a, kb.k, p_eff, kb.seed);
        out.approx = multiply(f.X, gather_rows(a, f.Is));
        out.results["rank"] = f.Is.size();
        out.results["rows_head"] = head_of_idx(f.Is);
        if (f.rank_truncated) {
            out.results["rank_truncated"] = true;
            out.warnings.push_back("numerical rank is below the requested k; factors use the smaller rank");
        }
    } else if (algo == "cur") {
        CurFactors f = randomized_cur(a, kb.k, p_eff, kb.q, kb.seed);
        out.approx = multiply(multiply(gather_columns(a, f.Js), f.U), gather_rows(a, f.Is));
        out.results["rank"] = f.Js.size();
        out.results["cols_head"] = head_of_idx(f.Js);
        out.results["rows_head"] = head_of_idx(f.Is);
        out.results["cond_C"] = f.cond_C;
        out.results["cond_R"] = f.cond_R;
        if (f.warning)
            out.warnings.push_back("selected column or row panel is ill conditioned (above 1e8)");
    } else if (algo == "adaptive") {
        RangeBasis rb = certified_range(a, kb.eps, kb.r, kb.seed);
        out.approx = rb.Q.cols == 0 ? DenseMatrix(a.rows, a.cols)
                                    : multiply(rb.Q, multiply(rb.Q, a, true, false));
        out.results["basis_cols"] = rb.Q.cols;
        out.results["certified_spectral_eps"] = kb.eps;
        const double fail = static_cast<double>(std::min(a.rows, a.cols)) *
                            std::pow(10.0, -static_cast<double>(kb.r));
        out.results["certified_probability"] = std::max(0.0, 1.0 - fail);
    } else if (algo == "blocked") {
        RangeBasis rb = blocked_adaptive(a, kb.eps, kb.b, kb.q, kb.seed);
        out.approx = (rb.Q.cols == 0 || !rb.B) ? DenseMatrix(a.rows, a.cols)
                                               : multiply(rb.Q, *rb.B);
        out.results["basis_cols"] = rb.Q.cols;
        if (rb.residual_frob) out.results["residual_frob_tracked"] = *rb.residual_frob;
    } else if (algo == "hqrrp") {
        PivotedQr f = hqrrp(a, kb.b, p_eff, kb.seed);
        out.reference = gather_columns(a, f.perm);
        out.approx = multiply(f.Q, f.R);
        out.results["rank"] = f.stopped_rank;
        std::vector<double> rdiag;
        for (idx i = 0; i < std::min<idx>(f.R.rows, 10); ++i) rdiag.push_back(f.R(i, i));
        out.results["r_diag_head"] = head_of(rdiag);
        out.results["perm_head"] = head_of_idx(f.perm);
    } else if (algo == "randutv") {
        UtvFactors f = randutv(a, kb.b, kb.q, kb.seed);
        out.approx = multiply(multiply(f.U, f.T), f.V, false, true);
        std::vector<double> tdiag;
        for (idx i = 0; i < std::min(f.T.rows, f.T.cols); ++i) tdiag.push_back(f.T(i, i));
        out.results["rank"] = tdiag.size();
        out.results["diag"] = tdiag;
        out.results["diag_head"] = head_of(tdiag);
    } else {
        throw ParameterError("unknown algorithm '" + algo + "'");
    }
    return out;
}

json error_block(const AlgoRun& run, const Knobs& kb) {
    const DenseMatrix resid = subtract(run.reference, run.approx);
    const double fa = frob_norm(resid);
    const double af = frob_norm(run.reference);
    const double se = estimate_spectral_norm(resid, 10, 0.1, kb.seed ^ 0x9e3779b9ULL);
    json e;
    e["frob_abs"] = fa;
    e["frob_rel"] = af > 0.0 ? fa / af : 0.0;
    e["spectral_probe_abs"] = se;
    e["spectral_probe_rel"] = af > 0.0 ? se / af : 0.0;
    e["spectral_probe_note"] =
        "probabilistic upper bound from 10 Gaussian probes; understates the true "
        "spectral norm with probability at most 1e-10";
    return e;
}

// The exact-spectrum oracle is only affordable at modest sizes.
// Compares against the optimal error at the rank the run actually achieved
// (adaptive algorithms stop at a data-dependent rank, and rsvd can keep its
// oversamples), so the ratio is always >= 1 up to randomness in the run.
json oracle_block(const DenseMatrix& a, double frob_abs, idx rank) {
    const std::vector<double> sv = svd_dense(a).D;
    double tail2 = 0.0;
    for (std::size_t j = static_cast<std::size_t>(rank); j < sv.size(); ++j) tail2 += sv[j] * sv[j];
    const double tail = std::sqrt(tail2);
    json o;
    o["sigma_head"] = head_of(sv);
    o["rank_compared"] = rank;
    o["eckart_young_tail_at_rank"] = tail;
    if (tail > 0.0)
        o["frob_ratio_to_optimal"] = frob_abs / tail;
    else
        o["frob_ratio_to_optimal"] = nullptr; // full-rank factorization: optimal error is 0
    return o;
}

void write_text_atomic(const std::string& path, const std::string& body) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError("cannot open '" + tmp + "' for writing");
        out << body;
        out.flush();
        if (!out) throw ParseError("write to '" + tmp + "' failed");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw ParseError("cannot move report into place at '" + path + "'");
    }
}

void emit_report(const json& rep, const std::string& path) {
    if (path.empty()) {
        std::cout << rep.dump(2) << "\n";
    } else {
        write_text_atomic(path, rep.dump(2) + "\n");
    }
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

json knob_json(const Knobs& kb, bool deterministic) {
    return json{{"k", kb.k},       {"p", kb.p},   {"q", kb.q},
                {"b", kb.b},       {"r", kb.r},   {"eps", kb.eps},
                {"seed", kb.seed}, {"keep_oversamples", kb.keep_oversamples},
                {"reorthonormalize", kb.reorthonormalize}, {"deterministic", deterministic}};
}

json input_json(const std::string& path, const DenseMatrix& a) {
    return json{{"path", path}, {"rows", a.rows}, {"cols", a.cols}, {"frob", frob_norm(a)}};
}

int do_factorize(const std::string& algo, const std::string& in_path, const Knobs& kb,
                 bool deterministic, const std::string& report_path) {
    if (deterministic) set_max_threads(1);
    const DenseMatrix a = read_matrix(in_path);
    const auto t0 = std::chrono::steady_clock::now();
    AlgoRun run = run_algo(algo, a, kb);
    const auto t1 = std::chrono::steady_clock::now();
    json rep;
    rep["schema"] = "randfact/1";
    rep["mode"] = "factorize";
    rep["algo"] = algo;
    rep["input"] = input_json(in_path, a);
    rep["params"] = knob_json(kb, deterministic);
    rep["wall_ms"] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    rep["results"] = run.results;
    json errs = error_block(run, kb);
    if (std::max(a.rows, a.cols) <= 320) {
        const idx achieved = run.results.contains("rank")
                                 ? run.results["rank"].get<idx>()
                                 : run.results["basis_cols"].get<idx>();
        rep["oracle"] = oracle_block(a, errs["frob_abs"].get<double>(), achieved);
    }
    rep["errors"] = std::move(errs);
    rep["warnings"] = run.warnings;
    emit_report(rep, report_path);
    return 0;
}

int do_bench(const std::vector<std::string>& algos, const std::string& in_path, const Knobs& kb,
             idx runs, bool deterministic, const std::string& report_path) {
    if (algos.empty()) throw ParameterError("bench needs at least one algorithm in --algos");
    for (const auto& name : algos)
        if (!algo_names().count(name)) throw ParameterError("unknown algorithm '" + name + "' in --algos");
    if (deterministic) set_max_threads(1);
    const DenseMatrix a = read_matrix(in_path);
    json rep;
    rep["schema"] = "randfact/1";
    rep["mode"] = "bench";
    rep["input"] = input_json(in_path, a);
    rep["params"] = knob_json(kb, deterministic);
    rep["runs_per_algo"] = runs;
    json rows = json::array();
    json summary = json::object();
    for (const auto& name : algos) {
        std::vector<double> times, rels;
        for (idx i = 0; i < runs; ++i) {
            Knobs kbi = kb;
            kbi.seed = kb.seed + static_cast<std::uint64_t>(i);
            json row{{"algo", name}, {"seed", kbi.seed}};
            try {
                const auto t0 = std::chrono::steady_clock::now();
                AlgoRun run = run_algo(name, a, kbi);
                const auto t1 = std::chrono::steady_clock::now();
                const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
                const double fa = frob_norm(subtract(run.reference, run.approx));
                const double af = frob_norm(run.reference);
                row["wall_ms"] = ms;
                row["frob_rel"] = af > 0.0 ? fa / af : 0.0;
                row["warnings"] = run.warnings;
                times.push_back(ms);
                rels.push_back(af > 0.0 ? fa / af : 0.0);
            } catch (const Error& e) {
                // a failed run is recorded and the sweep continues
                row["error"] = e.what();
            }
            rows.push_back(std::move(row));
        }
        summary[name] = {{"completed", times.size()},
                         {"median_wall_ms", median_of(times)},
                         {"median_frob_rel", median_of(rels)}};
    }
    rep["runs"] = std::move(rows);
    rep["summary"] = std::move(summary);
    emit_report(rep, report_path);
    return 0;
}

int do_gen(const std::string& kind_name, double param, idx rows, idx cols, std::uint64_t seed,
           const std::string& out_path, const std::string& sigma_path) {
    MatrixKind kind = MatrixKind::FastDecay;
    if (kind_name == "fastdecay") kind = MatrixKind::FastDecay;
    else if (kind_name == "flattail") kind = MatrixKind::FlatTail;
    else if (kind_name == "exactrank") kind = MatrixKind::ExactRank;
    else if (kind_name == "psd") kind = MatrixKind::Psd;
    else if (kind_name == "kahan") kind = MatrixKind::Kahan;
    else throw ParameterError("unknown matrix kind '" + kind_name + "'");
    PlantedMatrix pm = test_matrix(kind, param, rows, cols, seed);
    write_matrix(out_path, pm.A);
    if (!sigma_path.empty()) {
        if (pm.sigma.empty())
            throw ParameterError("kind '" + kind_name + "' has no planted spectrum to write");
        DenseMatrix s(static_cast<idx>(pm.sigma.size()), 1);
        for (idx i = 0; i < s.rows; ++i) s(i, 0) = pm.sigma[static_cast<std::size_t>(i)];
        write_matrix(sigma_path, s);
    }
    std::cout << "wrote " << out_path << " (" << rows << " x " << cols << ")\n";
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"randomized low-rank and rank-revealing matrix factorizations"};
    app.name("randfact");
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic matrix with a known spectrum");
    std::string g_kind;
    double g_param = 0.5;
    idx g_rows = 0, g_cols = 0;
    std::uint64_t g_seed = 0;
    std::string g_out, g_sigma_out;
    gen->add_option("--kind", g_kind, "fastdecay | flattail | exactrank | psd | kahan")
        ->required()
        ->check(CLI::IsMember({"fastdecay", "flattail", "exactrank", "psd", "kahan"}));
    gen->add_option("--param", g_param,
                    "spectrum parameter: decay base, tail level, exact rank, or angle");
    gen->add_option("--rows", g_rows, "row count")->required()->check(CLI::PositiveNumber);
    gen->add_option("--cols", g_cols, "column count")->required()->check(CLI::PositiveNumber);
    gen->add_option("--seed", g_seed, "random seed");
    gen->add_option("--out", g_out, "output matrix path (.mtx/.mm/.csv)")->required();
    gen->add_option("--sigma-out", g_sigma_out, "also write the planted spectrum (column vector)");

    auto add_knobs = [](CLI::App* sub, Knobs& kb) {
        sub->add_option("--k", kb.k, "target rank")->check(CLI::PositiveNumber);
        CLI::Option* p_opt =
            sub->add_option("--p", kb.p, "oversampling columns (single-pass algorithms default to k)")
                ->check(CLI::NonNegativeNumber);
        sub->add_option("--q", kb.q, "power-iteration passes")->check(CLI::NonNegativeNumber);
        sub->add_option("--b", kb.b, "block width (blocked/hqrrp/randutv, stream block columns)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--r", kb.r, "certification probe count")->check(CLI::PositiveNumber);
        sub->add_option("--eps", kb.eps, "absolute residual tolerance (adaptive/blocked)");
        sub->add_option("--seed", kb.seed, "random seed");
        sub->add_flag("--keep-oversamples", kb.keep_oversamples,
                      "keep all k+p captured directions instead of truncating to k (rsvd)");
        sub->add_flag("--reorth", kb.reorthonormalize,
                      "re-orthonormalize between power passes (rsvd)");
        return p_opt;
    };

    // factorize
    auto* fact = app.add_subcommand("factorize", "factor a matrix and report recomputed errors");
    std::string f_algo, f_in, f_report;
    bool f_det = false;
    Knobs f_kb;
    fact->add_option("--algo", f_algo,
                     "rsvd | spevd | spsvd | nystrom | id | fastid | cur | adaptive | blocked | "
                     "hqrrp | randutv")
        ->required()
        ->check(CLI::IsMember(std::vector<std::string>(algo_names().begin(), algo_names().end())));
    fact->add_option("--in", f_in, "input matrix path (.mtx/.mm/.csv)")->required();
    CLI::Option* f_p_opt = add_knobs(fact, f_kb);
    fact->add_flag("--deterministic", f_det, "pin the thread count to 1");
    fact->add_option("--report", f_report, "report path (JSON); default prints to stdout");

    // bench
    auto* bench = app.add_subcommand("bench", "run several algorithms repeatedly and summarize");
    std::vector<std::string> b_algos;
    std::string b_in, b_report;
    idx b_runs = 5;
    bool b_det = false;
    Knobs b_kb;
    bench->add_option("--algos", b_algos, "comma-separated algorithm list")
        ->required()
        ->delimiter(',');
    bench->add_option("--in", b_in, "input matrix path (.mtx/.mm/.csv)")->required();
    bench->add_option("--runs", b_runs, "runs per algorithm (seed advances each run)")
        ->check(CLI::PositiveNumber);
    CLI::Option* b_p_opt = add_knobs(bench, b_kb);
    bench->add_flag("--deterministic", b_det, "pin the thread count to 1");
    bench->add_option("--report", b_report, "report path (JSON); default prints to stdout");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 3;
    }

    try {
        if (app.got_subcommand(gen))
            return do_gen(g_kind, g_param, g_rows, g_cols, g_seed, g_out, g_sigma_out);
        if (app.got_subcommand(fact)) {
            f_kb.p_given = f_p_opt->count() > 0;
            return do_factorize(f_algo, f_in, f_kb, f_det, f_report);
        }
        b_kb.p_given = b_p_opt->count() > 0;
        return do_bench(b_algos, b_in, b_kb, b_runs, b_det, b_report);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}

} // namespace randfact
