#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "randfact/cli.hpp"
#include "randfact/diagnostics.hpp"
#include "randfact/matrix_io.hpp"
#include "randfact/sketch.hpp"
#include "test_support.hpp"

using namespace randfact;
using nlohmann::json;

namespace {

std::string temp_path(const std::string& name) {
    static const std::string dir = [] {
        auto d = std::filesystem::temp_directory_path() / "randfact_io_tests";
        std::filesystem::create_directories(d);
        return d.string();
    }();
    return dir + "/" + name;
}

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << body;
}

bool bitwise_equal(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) return false;
    for (idx j = 0; j < a.cols; ++j)
        for (idx i = 0; i < a.rows; ++i)
            if (a(i, j) != b(i, j)) return false;
    return true;
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return json::parse(in);
}

} // namespace

TEST_CASE("matrix market array general round-trips bitwise") {
    const DenseMatrix a = gaussian(11, "io.roundtrip", 7, 5);
    for (const char* ext : {".mtx", ".mm"}) {
        const std::string path = temp_path(std::string("rt_array") + ext);
        write_matrix(path, a);
        const DenseMatrix b = read_matrix(path);
        CHECK(bitwise_equal(a, b)); // %.17g preserves every double exactly
    }
}

TEST_CASE("csv round-trips bitwise") {
    const DenseMatrix a = gaussian(12, "io.csv", 6, 9);
    const std::string path = temp_path("rt.csv");
    write_matrix(path, a);
    const DenseMatrix b = read_matrix(path);
    CHECK(bitwise_equal(a, b));
}

TEST_CASE("matrix market array symmetric densifies the lower triangle") {
    const std::string path = temp_path("sym_array.mtx");
    // lower triangle in column-major order: (0,0) (1,0) (1,1)
    write_file(path, "%%MatrixMarket matrix array real symmetric\n"
                     "% a comment line\n"
                     "2 2\n1.5\n-2.25\n4.0\n");
    const DenseMatrix a = read_matrix(path);
    REQUIRE(a.rows == 2);
    REQUIRE(a.cols == 2);
    CHECK(a(0, 0) == 1.5);
    CHECK(a(1, 0) == -2.25);
    CHECK(a(0, 1) == -2.25);
    CHECK(a(1, 1) == 4.0);
}

TEST_CASE("matrix market coordinate general sums duplicate entries") {
    const std::string path = temp_path("coord_gen.mtx");
    write_file(path, "%%MatrixMarket matrix coordinate real general\n"
                     "3 4 4\n"
                     "1 1 2.0\n"
                     "3 4 -1.0\n"
                     "1 1 0.5\n"
                     "2 2 7\n");
    const DenseMatrix a = read_matrix(path);
    REQUIRE(a.rows == 3);
    REQUIRE(a.cols == 4);
    CHECK(a(0, 0) == 2.5);
    CHECK(a(2, 3) == -1.0);
    CHECK(a(1, 1) == 7.0);
    CHECK(a(0, 1) == 0.0);
}

TEST_CASE("matrix market coordinate symmetric mirrors off-diagonal entries") {
    const std::string path = temp_path("coord_sym.mtx");
    write_file(path, "%%MatrixMarket matrix coordinate real symmetric\n"
                     "3 3 3\n"
                     "1 1 1.0\n"
                     "2 1 5.0\n"
                     "3 3 -2.0\n");
    const DenseMatrix a = read_matrix(path);
    CHECK(a(0, 0) == 1.0);
    CHECK(a(1, 0) == 5.0);
    CHECK(a(0, 1) == 5.0);
    CHECK(a(2, 2) == -2.0);
    CHECK(a(1, 1) == 0.0);
}

TEST_CASE("matrix market coordinate pattern entries densify to one") {
    const std::string path = temp_path("coord_pat.mtx");
    write_file(path, "%%MatrixMarket matrix coordinate pattern general\n"
                     "2 2 2\n"
                     "1 2\n"
                     "2 1\n");
    const DenseMatrix a = read_matrix(path);
    CHECK(a(0, 1) == 1.0);
    CHECK(a(1, 0) == 1.0);
    CHECK(a(0, 0) == 0.0);
}

TEST_CASE("matrix market integer field and free token layout parse") {
    const std::string path = temp_path("int_field.mtx");
    // array values may share lines; integer field promotes to double
    write_file(path, "%%MatrixMarket matrix array integer general\n"
                     "2 2\n1 2 3 4\n");
    const DenseMatrix a = read_matrix(path);
    CHECK(a(0, 0) == 1.0);
    CHECK(a(1, 0) == 2.0);
    CHECK(a(0, 1) == 3.0);
    CHECK(a(1, 1) == 4.0);
}

TEST_CASE("malformed matrix files raise ParseError") {
    auto bad = [](const std::string& name, const std::string& body) {
        const std::string path = temp_path(name);
        write_file(path, body);
        CHECK_THROWS_AS(read_matrix(path), ParseError);
    };
    bad("bad_header.mtx", "garbage header\n2 2\n1 2 3 4\n");
    bad("bad_object.mtx", "%%MatrixMarket vector array real general\n2 2\n1 2 3 4\n");
    bad("bad_complex.mtx", "%%MatrixMarket matrix array complex general\n2 2\n1 0 2 0 3 0 4 0\n");
    bad("bad_skew.mtx", "%%MatrixMarket matrix coordinate real skew-symmetric\n2 2 1\n2 1 5\n");
    bad("bad_pattern_array.mtx", "%%MatrixMarket matrix array pattern general\n2 2\n");
    bad("bad_short.mtx", "%%MatrixMarket matrix array real general\n2 2\n1 2 3\n");
    bad("bad_token.mtx", "%%MatrixMarket matrix array real general\n2 2\n1 2 abc 4\n");
    bad("bad_nan.mtx", "%%MatrixMarket matrix array real general\n2 2\n1 2 nan 4\n");
    bad("bad_inf.mtx", "%%MatrixMarket matrix array real general\n2 2\n1 inf 3 4\n");
    bad("bad_range.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 5\n");
    bad("bad_trailing.mtx", "%%MatrixMarket matrix array real general\n2 2\n1 2 3 4 5\n");
    bad("bad_sym_rect.mtx", "%%MatrixMarket matrix array real symmetric\n2 3\n1 2 3 4 5\n");
    bad("bad_dims.mtx", "%%MatrixMarket matrix array real general\n0 2\n");
    bad("bad_empty.mtx", "");
    bad("bad_csv_token.csv", "1.0,oops\n");
    bad("bad_csv_ragged.csv", "1,2,3\n4,5\n");
    bad("bad_csv_nan.csv", "1,nan\n");
    bad("bad_csv_empty.csv", "");
    bad("bad_csv_hole.csv", "1,,3\n");
    CHECK_THROWS_AS(read_matrix(temp_path("missing_file.mtx")), ParseError);
}

TEST_CASE("unknown extensions raise ParameterError") {
    CHECK_THROWS_AS(read_matrix(temp_path("x.dat")), ParameterError);
    CHECK_THROWS_AS(read_matrix(temp_path("noext")), ParameterError);
    DenseMatrix a(2, 2);
    CHECK_THROWS_AS(write_matrix(temp_path("x.dat"), a), ParameterError);
}

TEST_CASE("writing non-finite entries raises NumericalError") {
    DenseMatrix a(2, 2);
    a(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(write_matrix(temp_path("nonfinite.mtx"), a), NumericalError);
    a(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(write_matrix(temp_path("nonfinite.csv"), a), NumericalError);
}

TEST_CASE("cli gen writes a loadable matrix and its spectrum") {
    const std::string mat = temp_path("gen_fd.mtx");
    const std::string sig = temp_path("gen_fd_sigma.csv");
    const int code = run_cli({"gen", "--kind", "fastdecay", "--param", "0.6", "--rows", "12",
                              "--cols", "9", "--seed", "4", "--out", mat, "--sigma-out", sig});
    REQUIRE(code == 0);
    const DenseMatrix a = read_matrix(mat);
    CHECK(a.rows == 12);
    CHECK(a.cols == 9);
    const DenseMatrix s = read_matrix(sig);
    REQUIRE(s.rows == 9);
    CHECK(s(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s(1, 0) == doctest::Approx(0.6).epsilon(1e-12));
    // the planted spectrum matches the generated matrix
    const PlantedMatrix pm = test_matrix(MatrixKind::FastDecay, 0.6, 12, 9, 4);
    CHECK(bitwise_equal(a, pm.A));
}

TEST_CASE("cli gen kahan has no planted spectrum to write") {
    const int code = run_cli({"gen", "--kind", "kahan", "--param", "1.1", "--rows", "8", "--cols",
                              "8", "--out", temp_path("gen_k.mtx"), "--sigma-out",
                              temp_path("gen_k_sigma.csv")});
    CHECK(code == 3);
}

TEST_CASE("cli factorize report carries recomputed errors and the oracle block") {
    const std::string mat = temp_path("fact_in.mtx");
    const PlantedMatrix pm = test_matrix(MatrixKind::ExactRank, 5, 24, 18, 9);
    write_matrix(mat, pm.A);
    const std::string rep = temp_path("fact_rep.json");
    const int code = run_cli({"factorize", "--algo", "rsvd", "--in", mat, "--k", "5", "--p", "5",
                              "--seed", "3", "--report", rep});
    REQUIRE(code == 0);
    const json r = load_json(rep);
    CHECK(r["schema"] == "randfact/1");
    CHECK(r["mode"] == "factorize");
    CHECK(r["algo"] == "rsvd");
    CHECK(r["input"]["rows"] == 24);
    CHECK(r["input"]["cols"] == 18);
    CHECK(r["params"]["k"] == 5);
    CHECK(r["results"]["rank"] == 5);
    CHECK(r["errors"]["frob_rel"].get<double>() < 1e-9); // exact rank 5 is captured exactly
    CHECK(r["errors"]["spectral_probe_abs"].get<double>() >= 0.0);
    REQUIRE(r.contains("oracle"));
    CHECK(r["oracle"]["sigma_head"][0].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r["oracle"]["eckart_young_tail_at_rank"].get<double>() < 1e-9);
    CHECK(r["oracle"]["rank_compared"].get<int>() == 5);
    CHECK(r["wall_ms"].get<double>() >= 0.0);
}

TEST_CASE("cli factorize adaptive reports its certification") {
    const std::string mat = temp_path("fact_ad.mtx");
    const PlantedMatrix pm = test_matrix(MatrixKind::FastDecay, 0.5, 30, 20, 2);
    write_matrix(mat, pm.A);
    const std::string rep = temp_path("fact_ad.json");
    const int code = run_cli({"factorize", "--algo", "adaptive", "--in", mat, "--eps", "1e-4",
                              "--r", "10", "--seed", "7", "--report", rep});
    REQUIRE(code == 0);
    const json r = load_json(rep);
    CHECK(r["results"]["certified_spectral_eps"].get<double>() == 1e-4);
    CHECK(r["results"]["certified_probability"].get<double>() ==
          doctest::Approx(1.0 - 20.0 * 1e-10).epsilon(1e-15));
    CHECK(r["results"]["basis_cols"].get<int>() > 0);
    // the certificate is honest on this matrix: recomputed spectral error below eps
    CHECK(r["errors"]["spectral_probe_abs"].get<double>() < 10.0 * 1e-4);
    // the oracle compares at the achieved rank, so the ratio can never look
    // better than optimal; at full rank the optimal error is 0 and it is null
    CHECK(r["oracle"]["rank_compared"].get<int>() == r["results"]["basis_cols"].get<int>());
    if (r["oracle"]["frob_ratio_to_optimal"].is_null()) {
        CHECK(r["results"]["basis_cols"].get<int>() == 20);
    } else {
        CHECK(r["oracle"]["frob_ratio_to_optimal"].get<double>() >= 1.0 - 1e-9);
    }
}

TEST_CASE("cli factorize spevd defaults the oversampling to k") {
    const std::string mat = temp_path("fact_psd.mtx");
    const PlantedMatrix pm = test_matrix(MatrixKind::Psd, 0.6, 26, 26, 3);
    write_matrix(mat, pm.A);
    const std::string rep = temp_path("fact_psd.json");
    REQUIRE(run_cli({"factorize", "--algo", "spevd", "--in", mat, "--k", "6", "--seed", "1",
                     "--report", rep}) == 0);
    const json r = load_json(rep);
    CHECK(r["results"]["p_used"] == 6);
    const std::string rep2 = temp_path("fact_psd2.json");
    REQUIRE(run_cli({"factorize", "--algo", "spevd", "--in", mat, "--k", "6", "--p", "12", "--seed",
                     "1", "--report", rep2}) == 0);
    CHECK(load_json(rep2)["results"]["p_used"] == 12);
}

TEST_CASE("cli deterministic flag leaves results bitwise unchanged") {
    const std::string mat = temp_path("fact_det.mtx");
    const PlantedMatrix pm = test_matrix(MatrixKind::FastDecay, 0.7, 40, 32, 11);
    write_matrix(mat, pm.A);
    const std::string r1 = temp_path("det1.json");
    const std::string r2 = temp_path("det2.json");
    REQUIRE(run_cli({"factorize", "--algo", "rsvd", "--in", mat, "--k", "8", "--seed", "5",
                     "--report", r1}) == 0);
    REQUIRE(run_cli({"factorize", "--algo", "rsvd", "--in", mat, "--k", "8", "--seed", "5",
                     "--deterministic", "--report", r2}) == 0);
    const json a = load_json(r1);
    const json b = load_json(r2);
    CHECK(a["errors"]["frob_abs"] == b["errors"]["frob_abs"]);
    CHECK(a["results"]["singvals_head"] == b["results"]["singvals_head"]);
}

TEST_CASE("cli exit codes map the error families") {
    // malformed input file -> 2
    const std::string bad = temp_path("cli_bad.mtx");
    write_file(bad, "not a matrix\n");
    CHECK(run_cli({"factorize", "--algo", "rsvd", "--in", bad}) == 2);
    // usage errors -> 3
    CHECK(run_cli({"factorize", "--algo", "nope", "--in", bad}) == 3);
    CHECK(run_cli({"factorize"}) == 3);
    CHECK(run_cli({}) == 3);
    CHECK(run_cli({"gen", "--kind", "fastdecay", "--rows", "0", "--cols", "3", "--out",
                   temp_path("z.mtx")}) == 3);
    // parameter violations inside the library -> 3
    const std::string nonsym = temp_path("cli_nonsym.csv");
    write_file(nonsym, "1,2,3\n4,5,6\n");
    CHECK(run_cli({"factorize", "--algo", "nystrom", "--in", nonsym, "--k", "1"}) == 3);
    // numerical failure -> 4: a negative definite matrix reaches the psd-only
    // path, and every orthogonal compression of it stays negative definite,
    // so the Cholesky inside fails for any sketch
    const std::string negdef = temp_path("cli_negdef.csv");
    write_file(negdef, "-1,0,0,0\n0,-0.5,0,0\n0,0,-0.8,0\n0,0,0,-0.2\n");
    CHECK(run_cli({"factorize", "--algo", "nystrom", "--in", negdef, "--k", "2", "--p", "1"}) == 4);
    // help -> 0
    CHECK(run_cli({"--help"}) == 0);
}

TEST_CASE("cli bench sweeps algorithms, survives failures, and is deterministic") {
    const std::string mat = temp_path("bench_in.mtx");
    const PlantedMatrix pm = test_matrix(MatrixKind::FastDecay, 0.5, 24, 24, 8);
    write_matrix(mat, pm.A);
    const std::string r1 = temp_path("bench1.json");
    const std::string r2 = temp_path("bench2.json");
    // nystrom fails on this non-symmetric input; the sweep must continue past it
    for (const auto& rep : {r1, r2})
        REQUIRE(run_cli({"bench", "--algos", "rsvd,nystrom,cur", "--in", mat, "--runs", "3", "--k",
                         "4", "--seed", "2", "--report", rep}) == 0);
    const json a = load_json(r1);
    REQUIRE(a["runs"].size() == 9);
    CHECK(a["summary"]["rsvd"]["completed"] == 3);
    CHECK(a["summary"]["nystrom"]["completed"] == 0);
    CHECK(a["summary"]["cur"]["completed"] == 3);
    for (const auto& row : a["runs"])
        if (row["algo"] == "nystrom") CHECK(row.contains("error"));
    CHECK(a["summary"]["rsvd"]["median_frob_rel"].get<double>() > 0.0);
    // bitwise deterministic across invocations, run for run
    const json b = load_json(r2);
    for (std::size_t i = 0; i < a["runs"].size(); ++i) {
        if (a["runs"][i].contains("frob_rel"))
            CHECK(a["runs"][i]["frob_rel"] == b["runs"][i]["frob_rel"]);
    }
    // empty algo list and bad run counts are usage errors
    CHECK(run_cli({"bench", "--algos", "", "--in", mat}) == 3);
    CHECK(run_cli({"bench", "--algos", "rsvd", "--in", mat, "--runs", "0"}) == 3);
}

TEST_CASE("report files are written atomically") {
    const std::string mat = temp_path("atomic_in.csv");
    write_file(mat, "1,0\n0,0.5\n");
    const std::string rep = temp_path("atomic_rep.json");
    REQUIRE(run_cli({"factorize", "--algo", "rsvd", "--in", mat, "--k", "1", "--p", "1", "--report",
                     rep}) == 0);
    CHECK(std::filesystem::exists(rep));
    CHECK(!std::filesystem::exists(rep + ".tmp")); // temp name is renamed away
    const json r = load_json(rep);
    CHECK(r["schema"] == "randfact/1");
}
