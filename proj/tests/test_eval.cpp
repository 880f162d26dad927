#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "mcduct/errors.hpp"
#include "mcduct/eval.hpp"

using namespace mcduct;

TEST_SUITE_BEGIN("eval");

TEST_CASE("nrmse trivial identities") {
    const std::vector<double> ref = {1.0, 2.0, 3.0, 0.5};
    CHECK(nrmse(ref, ref) == 0.0);

    std::vector<double> zero(ref.size(), 0.0);
    CHECK(nrmse(ref, zero) == doctest::Approx(1.0).epsilon(1e-14));

    std::vector<double> twice = ref;
    for (double& v : twice) v *= 2.0;
    CHECK(nrmse(ref, twice) == doctest::Approx(1.0).epsilon(1e-14));

    CHECK_THROWS_AS(nrmse(zero, ref), error);
}

TEST_CASE("nrmse residual scale covariance: nrmse(h, h + a*h) = |a|") {
    const std::vector<double> ref = {0.2, 1.4, 0.9, 0.1, 2.2};
    for (double a : {0.37, -0.8, 1e-6}) {
        std::vector<double> pred = ref;
        for (double& v : pred) v *= (1.0 + a);
        CHECK(nrmse(ref, pred) == doctest::Approx(std::abs(a)).epsilon(1e-12));
    }
}

TEST_CASE("ecdf percentiles by right-continuous inverse") {
    CHECK(Ecdf({0.1}).percentile(0.9) == 0.1);

    Ecdf e({10, 9, 8, 7, 6, 5, 4, 3, 2, 1});
    CHECK(e.percentile(0.9) == 9.0);  // first i with i/n >= 0.9 is i = 9
    CHECK(e.percentile(0.5) == 5.0);
    CHECK(e.percentile(1.0) == 10.0);

    // monotone in q
    double prev = e.percentile(0.0);
    for (double q = 0.05; q <= 1.0; q += 0.05) {
        const double cur = e.percentile(q);
        CHECK(cur >= prev);
        prev = cur;
    }
    // fractions nondecreasing, ending at exactly 1
    for (std::size_t i = 1; i < e.sorted().size(); ++i) CHECK(e.fraction(i) > e.fraction(i - 1));
    CHECK(e.fraction(e.sorted().size() - 1) == 1.0);
}

TEST_CASE("pearson hand values") {
    const std::vector<double> x = {1, 2, 3};
    CHECK(pearson(x, {4, 7, 10}) == doctest::Approx(1.0).epsilon(1e-14));     // y = 3x + 1
    CHECK(pearson(x, {-1, -2, -3}) == doctest::Approx(-1.0).epsilon(1e-14));  // y = -x
    CHECK(pearson(x, {1, 3, 2}) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(pearson(x, {2, 2, 2}), error);
}

TEST_CASE("pearson is invariant under positive affine transforms") {
    const std::vector<double> x = {0.3, 1.7, 0.9, 2.4, 1.1, 0.2};
    const std::vector<double> y = {4.1, 0.3, 2.2, 5.0, 1.9, 0.8};
    const double base = pearson(x, y);
    std::vector<double> xs = x, ys = y;
    for (double& v : xs) v = 3.7 * v + 11.0;
    for (double& v : ys) v = 0.02 * v - 5.0;
    CHECK(pearson(xs, ys) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("report files carry the exact schemas") {
    EvalReport report;
    ChannelParams p;
    for (int i = 0; i < 6; ++i) {
        report.rows.push_back({i, p, 0.02 * (i + 1)});
        report.sorted_nrmse.push_back(0.02 * (i + 1));
    }
    for (int f = 0; f < 8; ++f)
        report.correlations.push_back({ChannelParams::field_names()[static_cast<std::size_t>(f)],
                                       p.field(f), 0.01 * f, true});

    const auto dir = std::filesystem::temp_directory_path() / "mcduct_eval_test";
    std::filesystem::remove_all(dir);
    write_report(report, dir);

    auto first_line = [](const std::filesystem::path& path) {
        std::ifstream in(path);
        std::string line;
        std::getline(in, line);
        return line;
    };
    CHECK(first_line(dir / "correlations.csv") == "ParamName,ParamMean,CorrWithNRMSE");
    CHECK(first_line(dir / "cdf.csv") == "value,fraction");
    CHECK(first_line(dir / "samples.csv") ==
          "index,D,v_bar,kappa,k_f,k_r,B_tot,z_rx,ell_z,nrmse");

    // cdf rows: nondecreasing values, final fraction exactly 1
    std::ifstream in(dir / "cdf.csv");
    std::string line;
    std::getline(in, line);
    double prev_v = -1.0, last_f = 0.0;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        double v, f;
        char comma;
        row >> v >> comma >> f;
        CHECK(v >= prev_v);
        prev_v = v;
        last_f = f;
    }
    CHECK(last_f == 1.0);

    CHECK(std::filesystem::exists(dir / "cdf.svg"));
    std::filesystem::remove_all(dir);
}

TEST_SUITE_END();
