#include "mexp/config.hpp"
#include "mexp/io.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace mexp;
using namespace mexp::testing;

namespace {

Config parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

std::string key_of(const std::string& text) {
    try {
        (void)parse(text);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "";
}

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("mexp_test_" + name)).string();
}

}  // namespace

TEST(Config, ParsesSectionsAndDefaults) {
    const Config c = parse(ini("[0.4, -0.2]", kSmallGrid, "[mc]\nn_paths = 1234\nseed = 9\n"));
    EXPECT_DOUBLE_EQ(c.problem.model.mu(1), -0.2);
    EXPECT_DOUBLE_EQ(c.problem.model.Q(0, 1), 1.0);
    EXPECT_EQ(c.grid.n_w, 26);
    EXPECT_EQ(c.mc.n_paths, 1234);
    EXPECT_EQ(c.mc.seed, 9u);
    EXPECT_DOUBLE_EQ(c.problem.noise.std_dev(), 0.1);
    EXPECT_EQ(c.problem.noise.n_quad(), 16);
    EXPECT_EQ(c.solver.obstacle_tol, SolverSettings{}.obstacle_tol);
}

TEST(Config, MissingSigmaNamesKey) {
    std::string text = ini("[0.4, -0.2]", kSmallGrid);
    text.erase(text.find("sigma = 0.25\n"), 13);
    EXPECT_EQ(key_of(text), "model.sigma");
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    EXPECT_EQ(key_of(ini("[0.4, -0.2]", kSmallGrid, "[solver]\nobstacle_tolerance = 1\n")),
              "solver.obstacle_tolerance");
    EXPECT_EQ(key_of(ini("[0.4, -0.2]", kSmallGrid, "[extra]\na = 1\n")), "extra");
    EXPECT_EQ(key_of(ini("[0.4, -0.2]", kSmallGrid, "[mc]\nn_paths = many\n")), "mc.n_paths");
    std::string bad_q = ini("[0.4, -0.2]", kSmallGrid);
    bad_q.replace(bad_q.find("[[-1, 1], [1, -1]]"), 18, "[[-1, 1], [1, -2]]");
    EXPECT_EQ(key_of(bad_q), "model.Q");
}

TEST(Config, HashCoversSolveInputsOnly) {
    const std::string base = ini("[0.4, -0.2]", kSmallGrid);
    const std::string h = params_hash(parse(base));
    EXPECT_EQ(h.size(), 16u);
    EXPECT_EQ(h, params_hash(parse(base)));
    EXPECT_EQ(h, params_hash(parse(base + "[mc]\nn_paths = 10\nthreads = 4\n")));
    EXPECT_EQ(h, params_hash(parse(base + "[solver]\nthreads = 4\n")));
    EXPECT_NE(h, params_hash(parse(ini("[0.4, -0.21]", kSmallGrid))));
    EXPECT_NE(h, params_hash(parse(base + "[solver]\nregion_tol = 1e-8\n")));
}

TEST(Fnv1a, ReferenceVectors) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Container, RoundTripIsBitExact) {
    const GridAxes a{{0.0, 1.0, 3}, {0.0, 2.0, 4}, {0.0, 1.0, 5}};
    NodeField v(a), g(a);
    for (std::size_t n = 0; n < a.size(); ++n) {
        v.data()[n] = std::sqrt(static_cast<double>(n)) / 3.0;
        g.data()[n] = n % 7 == 0 ? std::numeric_limits<double>::quiet_NaN() : -1.0 / (1.0 + n);
    }
    const std::string path = tmp_path("roundtrip.mexp");
    write_container(path, a, "0123456789abcdef", {{"note", "x"}}, {{"values", &v}, {"gap", &g}});
    const Container c = read_container(path);
    EXPECT_EQ(c.params_hash, "0123456789abcdef");
    EXPECT_EQ(c.order, (std::vector<std::string>{"values", "gap"}));
    EXPECT_EQ(c.axes.w.n, 4);
    EXPECT_EQ(c.axes.w.hi, 2.0);
    EXPECT_EQ(c.array("values").data(), v.data());
    for (std::size_t n = 0; n < a.size(); ++n) {
        const double x = c.array("gap").data()[n];
        if (std::isnan(g.data()[n])) EXPECT_TRUE(std::isnan(x));
        else EXPECT_EQ(x, g.data()[n]);
    }
    EXPECT_THROW((void)c.array("missing"), ContainerError);
    std::filesystem::remove(path);
}

TEST(Container, RejectsForeignAndTruncatedFiles) {
    const std::string path = tmp_path("bad.mexp");
    write_text(path, "NOTAGRID 1\n2\n{}");
    EXPECT_THROW((void)read_container(path), ContainerError);

    const GridAxes a{{0.0, 1.0, 2}, {0.0, 1.0, 2}, {0.0, 1.0, 2}};
    NodeField v(a, 1.0);
    write_container(path, a, "h", {}, {{"values", &v}});
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
    EXPECT_THROW((void)read_container(path), ContainerError);
    std::filesystem::remove(path);
    EXPECT_THROW((void)read_container(path), ContainerError);
}
