#include "fedsim/experiment.hpp"

#include <gtest/gtest.h>

using namespace fedsim;

TEST(ParseConfig, PaperDefaultsPreset) {
  ExperimentSpec spec = parse_config(preset_config("paper-defaults"));
  const auto& opt = spec.run.optimizer;
  EXPECT_EQ(opt.kind, OptimizerKind::fedwmsam);
  EXPECT_DOUBLE_EQ(opt.eta_l, 0.1);
  EXPECT_DOUBLE_EQ(opt.eta_g, 1.0);
  EXPECT_DOUBLE_EQ(opt.rho, 0.01);
  EXPECT_DOUBLE_EQ(opt.alpha0, 0.1);
  EXPECT_DOUBLE_EQ(opt.lambda, 0.01);
  EXPECT_DOUBLE_EQ(opt.alpha_lo, 0.1);
  EXPECT_DOUBLE_EQ(opt.alpha_hi, 0.9);
  EXPECT_EQ(spec.run.n_clients, 20u);
  EXPECT_DOUBLE_EQ(spec.run.sample_rate, 0.2);
  EXPECT_DOUBLE_EQ(spec.run.data.beta, 0.1);
}

TEST(ParseConfig, MissingOptimizerSectionTakesDefaults) {
  // No optimizer section at all: the documented defaults apply.
  ExperimentSpec spec = parse_config(R"({"name":"t","objective":{"kind":"quadratic"}})");
  EXPECT_DOUBLE_EQ(spec.run.optimizer.eta_l, 0.1);
  EXPECT_DOUBLE_EQ(spec.run.optimizer.eta_g, 1.0);
  EXPECT_DOUBLE_EQ(spec.run.optimizer.rho, 0.01);
  EXPECT_DOUBLE_EQ(spec.run.optimizer.alpha0, 0.1);
  EXPECT_DOUBLE_EQ(spec.run.optimizer.lambda, 0.01);
}

TEST(ParseConfig, AlphaOneRejected) {
  const std::string text = R"({
    "name": "bad",
    "objective": {"kind": "quadratic"},
    "optimizer": {"kind": "fedwmsam", "alpha0": 1.0}
  })";
  EXPECT_THROW(
      {
        try {
          parse_config(text);
        } catch (const config_error& e) {
          EXPECT_NE(std::string(e.what()).find("alpha0"), std::string::npos);
          throw;
        }
      },
      config_error);
}

TEST(ParseConfig, UnknownKeyNamed) {
  const std::string text = R"({
    "name": "bad",
    "objective": {"kind": "quadratic"},
    "optimizer": {"alpha_O": 0.1}
  })";
  EXPECT_THROW(
      {
        try {
          parse_config(text);
        } catch (const config_error& e) {
          EXPECT_NE(std::string(e.what()).find("alpha_O"), std::string::npos);
          throw;
        }
      },
      config_error);
}

TEST(ParseConfig, UnknownTopLevelKeyNamed) {
  EXPECT_THROW(parse_config(R"({"nom":"x"})"), config_error);
}

TEST(ParseConfig, ParseErrorCarriesLineInfo) {
  const std::string text = "{\n  \"name\": \"x\",\n  oops\n}";
  try {
    parse_config(text);
    FAIL() << "expected config_error";
  } catch (const config_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(ParseConfig, WrongTypeRejected) {
  EXPECT_THROW(parse_config(R"({"name":"x","rounds":"many"})"), config_error);
}

TEST(ParseConfig, BadNameRejected) {
  EXPECT_THROW(parse_config(R"({"name":"a/b"})"), config_error);
  EXPECT_THROW(parse_config(R"({"name":""})"), config_error);
}

TEST(ParseConfig, ValidationFailureNamesConstraint) {
  try {
    parse_config(R"({"name":"x","sample_rate":0.0,"objective":{"kind":"quadratic"}})");
    FAIL() << "expected config_error";
  } catch (const config_error& e) {
    EXPECT_NE(std::string(e.what()).find("sample_rate"), std::string::npos);
  }
}

TEST(Presets, AllParseAndValidate) {
  for (const auto& name : preset_names()) {
    ExperimentSpec spec = parse_config(preset_config(name));
    EXPECT_EQ(spec.name, name);
  }
  EXPECT_THROW(preset_config("nope"), config_error);
}
