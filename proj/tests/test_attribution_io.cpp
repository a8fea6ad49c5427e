#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "test_support.hpp"

#include <filesystem>

#include "xtsc/explainers.hpp"
#include "xtsc/text.hpp"

using namespace xtsc;
using namespace xtsc::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  const fs::path p = fs::temp_directory_path() / "xtsc_test_attribution_io";
  fs::create_directories(p);
  return p;
}

Attribution sample_attribution() {
  Matrix m = random_matrix({3, 7}, 4, -3, 3);
  m(0, 0) = 1.0 / 3.0;
  m(2, 6) = -1e-300;
  return {m, 1, "occlusion"};
}

}  // namespace

TEST_CASE("JSON and CSV round-trips are exact") {
  const Attribution a = sample_attribution();
  save_attribution(a, scratch() / "a.json");
  CHECK(load_external_attribution(scratch() / "a.json", a.shape()) == a);
  save_attribution_csv(a, scratch() / "a.csv");
  CHECK(fs::exists(scratch() / "a.manifest.json"));
  CHECK(load_external_attribution(scratch() / "a.csv", a.shape()) == a);
  CHECK_FALSE(is_example_file(scratch() / "a.json"));
}

TEST_CASE("nested score arrays are accepted") {
  text::write_file((scratch() / "nested.json").string(),
                   R"({"explainer":"ext","target_class":0,"n_features":2,"t_steps":2,"scores":[[1,2],[3,4.5]]})");
  const Attribution a = load_external_attribution(scratch() / "nested.json", {2, 2});
  CHECK(a.scores(1, 1) == 4.5);
  CHECK(a.scores(0, 1) == 2.0);
  CHECK(a.explainer == "ext");
}

TEST_CASE("a NaN cell is reported by position") {
  for (const char* token : {"NaN", "null", "Infinity"}) {
    const std::string body = std::string(R"({"explainer":"ext","target_class":0,"n_features":2,"t_steps":3,)") +
                             R"("scores":[0.1,0.2,0.3,0.4,)" + token + ",0.6]}";
    text::write_file((scratch() / "nan.json").string(), body);
    try {
      load_external_attribution(scratch() / "nan.json", {2, 3});
      FAIL("expected FormatError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::FormatError);
      CHECK(std::string(e.what()).find("feature 1, step 1") != std::string::npos);
    }
  }
  text::write_file((scratch() / "nan.csv").string(), "1,2,3\n4,nan,6\n");
  save_attribution_csv({Matrix({2, 3}), 0, "ext"}, scratch() / "seed.csv");
  fs::copy_file(scratch() / "seed.manifest.json", scratch() / "nan.manifest.json",
                fs::copy_options::overwrite_existing);
  CHECK_THROWS_CODE(load_external_attribution(scratch() / "nan.csv", {2, 3}), ErrorCode::FormatError);
}

TEST_CASE("shape mismatches raise InvalidShape") {
  const Attribution a = sample_attribution();
  save_attribution(a, scratch() / "shape.json");
  CHECK_THROWS_CODE(load_external_attribution(scratch() / "shape.json", {3, 8}), ErrorCode::InvalidShape);
  text::write_file((scratch() / "short.json").string(),
                   R"({"explainer":"ext","target_class":0,"n_features":2,"t_steps":2,"scores":[1,2,3]})");
  CHECK_THROWS_CODE(load_external_attribution(scratch() / "short.json", {2, 2}), ErrorCode::InvalidShape);
  CHECK_THROWS_CODE(load_external_attribution(scratch() / "missing.json", {2, 2}), ErrorCode::IoError);
  text::write_file((scratch() / "garbage.json").string(), "{not json");
  CHECK_THROWS_CODE(load_external_attribution(scratch() / "garbage.json", {2, 2}), ErrorCode::FormatError);
}

TEST_CASE("example files follow the in-memory conversion") {
  const TimeSeries x = random_matrix({2, 5}, 1, 0, 1);
  const ExampleExplanation ex{random_matrix({2, 5}, 2, 0, 1), 1, "native_guide"};
  save_example(ex, scratch() / "ex.json");
  CHECK(is_example_file(scratch() / "ex.json"));
  const ExampleExplanation back = load_example(scratch() / "ex.json", x.shape());
  CHECK(back.values == ex.values);
  CHECK(ingest_explanation(scratch() / "ex.json", x) == example_to_attribution(x, ex));

  const FeatureRange range{{-1.0, 0.0}, {2.0, 4.0}};
  CHECK(ingest_explanation(scratch() / "ex.json", x, range) == example_to_attribution(x, ex, range));

  const Attribution a = sample_attribution();
  save_attribution(a, scratch() / "plain.json");
  CHECK(ingest_explanation(scratch() / "plain.json", random_matrix(a.shape(), 3)) == a);
}
