#include <gtest/gtest.h>

#include <sstream>

#include "avlsp/config.hpp"

using namespace avlsp;

TEST(Config, Defaults) {
    PipelineConfig cfg;
    EXPECT_EQ(cfg.iterations, 2);
    EXPECT_EQ(cfg.normalization.sigma0, 50.0);
    EXPECT_EQ(cfg.normalization.kernel_fraction, 0.1);
    EXPECT_EQ(cfg.knudtson.c_artery, 0.88);
    EXPECT_EQ(cfg.knudtson.c_vein, 0.95);
    EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, ParsesFlatKeyValue) {
    std::istringstream in(
        "# comment\n"
        "\n"
        "sigma_pos = 2.5\n"
        "  sigma_lab=0.2  \n"
        "iterations = 3\n"
        "centerline_only = true\n"
        "c_vein = 0.9\n"
        "out_dir = /tmp/x y\n");
    PipelineConfig cfg;
    parse_config(cfg, in);
    EXPECT_EQ(cfg.graph.sigma_pos, 2.5);
    EXPECT_EQ(cfg.graph.sigma_lab, 0.2);
    EXPECT_EQ(cfg.iterations, 3);
    EXPECT_TRUE(cfg.centerline_only);
    EXPECT_EQ(cfg.knudtson.c_vein, 0.9);
    EXPECT_EQ(cfg.out_dir, "/tmp/x y");
}

TEST(Config, Errors) {
    PipelineConfig cfg;
    std::istringstream unknown("sigma_foo = 1\n");
    EXPECT_THROW(parse_config(cfg, unknown), Error);
    std::istringstream bad_number("sigma_pos = fast\n");
    EXPECT_THROW(parse_config(cfg, bad_number), Error);
    std::istringstream no_eq("sigma_pos 1\n");
    try {
        parse_config(cfg, no_eq, "f.cfg");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigError);
        EXPECT_NE(std::string(e.what()).find("f.cfg:1"), std::string::npos);
    }
    std::istringstream bad_bool("write_roc = maybe\n");
    EXPECT_THROW(parse_config(cfg, bad_bool), Error);
    EXPECT_THROW(load_config(cfg, "/nonexistent/avlsp.cfg"), Error);
}

TEST(Config, ValidationOfReferencedTypes) {
    PipelineConfig cfg;
    set_config_value(cfg, "sigma_prop", "-1");
    EXPECT_THROW(cfg.validate(), Error);
    cfg = {};
    set_config_value(cfg, "c_artery", "1.5");
    EXPECT_THROW(cfg.validate(), Error);
    cfg = {};
    set_config_value(cfg, "iterations", "-2");
    EXPECT_THROW(cfg.validate(), Error);
}
