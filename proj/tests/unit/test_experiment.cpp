#include <gtest/gtest.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "lfp/detail/csv.hpp"
#include "lfp/experiment.hpp"

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("lfp_unit_" + name);
    fs::remove_all(p);
    return p;
}

TEST(Csv, ShortestRoundTripFloats) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::uint64_t> bits;
    for (int i = 0; i < 10000; ++i) {
        const std::uint64_t b = bits(rng);
        double v;
        std::memcpy(&v, &b, sizeof v);
        if (!std::isfinite(v)) continue;
        const std::string s = lfp::detail::format_double(v);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        EXPECT_EQ(back, v) << s;
    }
    EXPECT_EQ(lfp::detail::format_double(0.1), "0.1");
    EXPECT_EQ(lfp::detail::format_double(1e-6), "1e-06");
}

TEST(Csv, Rfc4180) {
    EXPECT_EQ(lfp::detail::csv_field("plain"), "plain");
    EXPECT_EQ(lfp::detail::csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(lfp::detail::csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    std::ostringstream os;
    lfp::detail::CsvWriter w(os, {"x", "f,nn"});
    w.row({1.5, std::nullopt});
    EXPECT_EQ(os.str(), "x,\"f,nn\"\r\n1.5,\r\n");
}

TEST(Config, DefaultsRoundTrip) {
    for (const auto& name : lfp::experiment_names()) {
        const auto c = lfp::default_config(name);
        const auto j = lfp::to_json(c);
        EXPECT_EQ(lfp::to_json(lfp::config_from_json(j)), j) << name;
        EXPECT_FALSE(lfp::has_errors(lfp::validate(c))) << name;
    }
}

TEST(Config, ShippedConfigsMatchDefaults) {
    for (const auto& name : lfp::experiment_names()) {
        const auto c = lfp::load_config(std::string(LFP_SOURCE_DIR) + "/configs/" + name + ".json");
        EXPECT_EQ(lfp::to_json(c), lfp::to_json(lfp::default_config(name))) << name;
    }
}

TEST(Config, RejectsUnknownKeysAndVersions) {
    auto j = lfp::to_json(lfp::default_config("spline_check"));
    j["nn"]["momentum"] = 0.9;
    EXPECT_THROW(lfp::config_from_json(j), lfp::config_error);
    j = lfp::to_json(lfp::default_config("spline_check"));
    j["schema_version"] = 2;
    EXPECT_THROW(lfp::config_from_json(j), lfp::config_error);
    j = lfp::to_json(lfp::default_config("spline_check"));
    j["experiment"] = "fig9";
    EXPECT_THROW(lfp::config_from_json(j), lfp::config_error);
}

TEST(Config, PartialConfigTakesDefaults) {
    const nlohmann::json j = {{"schema_version", 1}, {"experiment", "fig2d_xor"}, {"nn", {{"m", 400}}}};
    const auto c = lfp::config_from_json(j);
    EXPECT_EQ(c.nn.m, 400u);
    EXPECT_EQ(c.data.dim, 2);
    EXPECT_EQ(c.lattice.K, 40);
}

TEST(Config, ValidationCatchesProblems) {
    auto c = lfp::default_config("freq_sweep");
    c.sweep->v = {1, 10};
    EXPECT_TRUE(lfp::has_errors(lfp::validate(c)));
    c = lfp::default_config("fig2_relu_linear");
    c.nn.m = 101;
    EXPECT_TRUE(lfp::has_errors(lfp::validate(c)));
    c = lfp::default_config("fig2_relu_linear");
    c.data.y.pop_back();
    EXPECT_TRUE(lfp::has_errors(lfp::validate(c)));
    c = lfp::default_config("fig2_relu_linear");
    c.lattice.zero_mode = "penalized";
    EXPECT_TRUE(lfp::has_errors(lfp::validate(c)));
    c = lfp::default_config("fig2_relu_linear");
    c.regimes["a_dominant"].sigma_b = 0.5;
    const auto issues = lfp::validate(c);
    EXPECT_FALSE(lfp::has_errors(issues));
    EXPECT_FALSE(issues.empty());
    c = lfp::default_config("fig2_relu_linear");
    c.nn.m = 3;
    EXPECT_THROW(lfp::run(c, temp_dir("invalid")), lfp::config_error);
}

TEST(Run, MetricsAreDeterministicExceptTimestamps) {
    const auto cfg = lfp::default_config("spline_check");
    const fs::path a = temp_dir("det_a"), b = temp_dir("det_b");
    const auto ra = lfp::run(cfg, a);
    const auto rb = lfp::run(cfg, b);
    EXPECT_TRUE(ra.passed());
    auto ja = nlohmann::json::parse(slurp(a / "metrics.json"));
    auto jb = nlohmann::json::parse(slurp(b / "metrics.json"));
    ASSERT_TRUE(ja.contains("timestamps"));
    ja.erase("timestamps");
    jb.erase("timestamps");
    EXPECT_EQ(ja.dump(2), jb.dump(2));
    for (const auto& f : ra.files) {
        if (f != "metrics.json") {
            EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
        }
    }
}

TEST(Run, CurvesCsvLayout) {
    const fs::path out = temp_dir("curves");
    lfp::run(lfp::default_config("spline_check"), out);
    const std::string csv = slurp(out / "curves_a_dominant.csv");
    EXPECT_EQ(csv.substr(0, csv.find("\r\n")), "x,f_nn,f_lfp,f_spline,f_ntk");
    // 512 grid rows plus header; predictors that were not run are empty fields.
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 513);
    const std::size_t second = csv.find("\r\n") + 2;
    const std::string row = csv.substr(second, csv.find("\r\n", second) - second);
    EXPECT_EQ(std::count(row.begin(), row.end(), ','), 4);
    EXPECT_EQ(row.substr(0, row.find(',')), "-0.5");
    EXPECT_NE(row.find(",,"), std::string::npos);
}

TEST(Run, FailedToleranceFailsTheRun) {
    auto cfg = lfp::default_config("spline_check");
    cfg.tolerances.spline = 1e-9;
    const fs::path out = temp_dir("fail");
    const auto rep = lfp::run(cfg, out);
    EXPECT_FALSE(rep.passed());
    EXPECT_FALSE(nlohmann::json::parse(slurp(out / "metrics.json")).at("passed").get<bool>());
}

}  // namespace
