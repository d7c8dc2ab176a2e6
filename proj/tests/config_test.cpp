#include <gtest/gtest.h>

#include "got/config.hpp"

using namespace got;

TEST(Config, Defaults) {
    const TrackerConfig c;
    EXPECT_EQ(c.fusion.alpha, 0.7);
    EXPECT_EQ(c.boosting.trees, 40);
    EXPECT_EQ(c.boosting.max_depth, 4);
    EXPECT_EQ(c.dcf.lambda, 1e-2);
    EXPECT_EQ(c.dcf.mu, 15.0);
    EXPECT_EQ(c.dcf.scales, (std::vector<double>{0.98, 1.0, 1.02}));
    EXPECT_EQ(c.segmentation.k, 100.0);
    EXPECT_EQ(c.segmentation.min_size, 20);
    EXPECT_EQ(c.grouping_thresholds, (std::vector<double>{0.3, 0.5, 0.7}));
    EXPECT_EQ(c.template_mu, 5.0);
    EXPECT_EQ(c.presence_threshold, 0.1);
    EXPECT_EQ(c.retrain_iou, 0.3);
    EXPECT_EQ(c.retrain_frames, 3);
    EXPECT_TRUE(c.local_branch && c.classifier_update && c.reidentification && c.noise_suppression);
}

TEST(Config, ParsesValuesAndComments) {
    const TrackerConfig c = parse_config(
        "# tuned\n"
        "alpha = 0.6\n"
        "  boost_trees=20   # fewer trees\n"
        "\n"
        "dcf_scales = 0.95, 1, 1.05\n"
        "reidentification = off\n"
        "local_branch = false\n");
    EXPECT_EQ(c.fusion.alpha, 0.6);
    EXPECT_EQ(c.boosting.trees, 20);
    EXPECT_EQ(c.dcf.scales, (std::vector<double>{0.95, 1.0, 1.05}));
    EXPECT_FALSE(c.reidentification);
    EXPECT_FALSE(c.local_branch);
    EXPECT_TRUE(c.classifier_update);
}

TEST(Config, RejectsUnknownAndMalformed) {
    auto message = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(message("alpha = 0.5\nbogus = 1\n").find("line 2"), std::string::npos);
    EXPECT_NE(message("bogus = 1\n").find("unknown"), std::string::npos);
    EXPECT_NE(message("alpha 0.5\n").find("line 1"), std::string::npos);
    EXPECT_NE(message("boost_trees = 2.5\n").find("integer"), std::string::npos);
    EXPECT_NE(message("local_branch = maybe\n").find("boolean"), std::string::npos);
    EXPECT_NE(message("alpha = \n").find("number"), std::string::npos);
}

TEST(Config, FormatRoundTrips) {
    TrackerConfig c;
    c.fusion.alpha = 0.123456789;
    c.motion.grid = 9;
    c.noise_suppression = false;
    const std::string text = format_config(c);
    EXPECT_EQ(format_config(parse_config(text)), text);
    EXPECT_EQ(format_config(TrackerConfig{}), format_config(parse_config("")));
}
