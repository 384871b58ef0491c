#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <asep/io.hpp>

#include <cmath>
#include <filesystem>

using namespace asep;

TEST_CASE("doubles round-trip with 17 digits") {
    for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0}) CHECK(std::stod(format_double(x)) == x);
}

TEST_CASE("config parsing") {
    std::istringstream in("# comment\nrho = 0.5\n\nL=64 # trailing\n  seed=7\n");
    auto c = parse_config(in);
    CHECK(c.size() == 3);
    CHECK(c["rho"] == "0.5");
    CHECK(c["L"] == "64");
    CHECK(c["seed"] == "7");
    std::istringstream bad("novalue\n");
    CHECK_THROWS_AS(parse_config(bad), ParameterError);
    CHECK_THROWS_AS(read_config("/nonexistent/x.cfg"), IoError);
}

TEST_CASE("csv write and read") {
    const auto path = (std::filesystem::temp_directory_path() / "asep_io_test.csv").string();
    CsvTable t({"lambda", "value", "mode"});
    t.add(1e-3).add(0.17017802).add("graded");
    t.end_row();
    t.add(1e-4).add(0.21264764).add("graded");
    t.end_row();
    t.write(path);
    auto d = read_csv(path);
    CHECK(d.header.size() == 3);
    CHECK(d.rows.size() == 2);
    CHECK(d.numbers("value")[1] == 0.21264764);
    CHECK_THROWS_AS(d.column("nope"), ParameterError);
    CHECK_THROWS_AS(t.add(1.0).end_row(), ParameterError);
    std::filesystem::remove(path);
}

TEST_CASE("manifest is deterministic") {
    Config c{{"rho", "0.5"}, {"L", "64"}};
    CHECK(manifest_text("simulate", c) == manifest_text("simulate", Config{{"L", "64"}, {"rho", "0.5"}}));
    CHECK(manifest_text("simulate", c).find("code_version=") == 0);
}

TEST_CASE("grid and dims") {
    auto g = parse_grid("1e-3:1e-8:log");
    CHECK(g.size() == 6);
    CHECK(g.back() == doctest::Approx(1e-8));
    CHECK(parse_grid("0:10:lin:11")[3] == doctest::Approx(3.0));
    CHECK(parse_grid("0.05,0.2,1").size() == 3);
    CHECK_THROWS_AS(parse_grid("1:2:cubic"), ParameterError);
    CHECK(parse_dims("4x5") == std::pair<int, int>{4, 5});
    CHECK(parse_dims("64") == std::pair<int, int>{64, 64});
    CHECK_THROWS_AS(parse_dims("ax"), ParameterError);
}
