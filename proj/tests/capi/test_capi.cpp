// SPDX-License-Identifier: Apache-2.0
// Exercises the shared library through bgpad.h only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bgpad.h>

#include <cstdio>
#include <filesystem>
#include <string>

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  bgpad_string_free(s);
  return out;
}

bgpad_config* quick_config() {
  bgpad_config* c = nullptr;
  REQUIRE(bgpad_config_new(&c) == BGPAD_OK);
  for (auto [k, v] : {std::pair{"period", "10"}, {"window", "4"}, {"hidden", "4"}, {"epochs", "1"}, {"lr", "0.001"}})
    REQUIRE(bgpad_config_set(c, k, v) == BGPAD_OK);
  return c;
}

}  // namespace

TEST_CASE("status names and errors") {
  CHECK(std::string(bgpad_status_name(BGPAD_ERR_SHAPE)) == "shape error");
  CHECK(std::string(bgpad_version()).size() > 0);
  bgpad_config* c = nullptr;
  REQUIRE(bgpad_config_new(&c) == BGPAD_OK);
  CHECK(bgpad_config_set(c, "period", "abc") == BGPAD_ERR_INVALID_ARGUMENT);
  CHECK(std::string(bgpad_last_error()).find("period") != std::string::npos);
  CHECK(bgpad_config_set(c, "no_such_key", "1") == BGPAD_ERR_INVALID_ARGUMENT);
  CHECK(bgpad_config_set(c, "period", "12") == BGPAD_OK);
  CHECK(std::string(bgpad_last_error()).empty());
  CHECK(bgpad_config_new(nullptr) == BGPAD_ERR_INVALID_ARGUMENT);
  bgpad_config_free(c);
  bgpad_config_free(nullptr);
}

TEST_CASE("config json and hash") {
  bgpad_config* a = quick_config();
  bgpad_config* b = quick_config();
  const auto ha = take([&] { char* s = nullptr; bgpad_config_hash(a, &s); return s; }());
  const auto hb = take([&] { char* s = nullptr; bgpad_config_hash(b, &s); return s; }());
  CHECK(ha == hb);
  bgpad_config_set(b, "seed", "9");
  const auto hc = take([&] { char* s = nullptr; bgpad_config_hash(b, &s); return s; }());
  CHECK(ha != hc);
  char* json = nullptr;
  REQUIRE(bgpad_config_json(a, &json) == BGPAD_OK);
  CHECK(take(json).find("\"window\":4") != std::string::npos);
  bgpad_config_free(a);
  bgpad_config_free(b);
}

TEST_CASE("synth, csv round trip, augment") {
  bgpad_series* s = nullptr;
  REQUIRE(bgpad_synth("worm", 200, 0.2, 1.0, 4, &s) == BGPAD_OK);
  CHECK(bgpad_series_rows(s) == 200);
  CHECK(bgpad_series_cols(s) == 46);
  const auto dir = std::filesystem::temp_directory_path() / "bgpad_capi_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "s.csv").string();
  REQUIRE(bgpad_series_write_csv(s, path.c_str()) == BGPAD_OK);
  bgpad_series* back = nullptr;
  REQUIRE(bgpad_series_read_csv(path.c_str(), &back) == BGPAD_OK);
  double a = 0, b = 0;
  int la = 0, lb = 0;
  for (size_t r = 0; r < 200; r += 37)
    for (size_t col = 0; col < 46; col += 5) {
      bgpad_series_value(s, r, col, &a);
      bgpad_series_value(back, r, col, &b);
      CHECK(a == b);
      bgpad_series_label(s, r, &la);
      bgpad_series_label(back, r, &lb);
      CHECK(la == lb);
    }
  CHECK(bgpad_series_value(s, 200, 0, &a) == BGPAD_ERR_INVALID_ARGUMENT);

  bgpad_config* c = quick_config();
  bgpad_series* aug = nullptr;
  REQUIRE(bgpad_augment(s, c, &aug) == BGPAD_OK);
  CHECK(bgpad_series_cols(aug) == 230);
  char* name = nullptr;
  REQUIRE(bgpad_series_column_name(aug, 46, &name) == BGPAD_OK);
  CHECK(take(name).find(".res") != std::string::npos);

  char* windows = nullptr;
  REQUIRE(bgpad_windows_csv(s, c, &windows) == BGPAD_OK);
  CHECK(!take(windows).empty());

  CHECK(bgpad_series_read_csv((dir / "missing.csv").string().c_str(), &back) == BGPAD_ERR_IO);
  bgpad_series_free(aug);
  bgpad_series_free(back);
  bgpad_series_free(s);
  bgpad_config_free(c);
  std::filesystem::remove_all(dir);
}

TEST_CASE("train, save, load, evaluate") {
  bgpad_series* s = nullptr;
  REQUIRE(bgpad_synth("worm", 200, 0.2, 1.0, 4, &s) == BGPAD_OK);
  bgpad_config* c = quick_config();
  bgpad_model* m = nullptr;
  bgpad_report* r = nullptr;
  REQUIRE(bgpad_train(s, c, &m, &r) == BGPAD_OK);
  double f1 = -1;
  REQUIRE(bgpad_report_metric(r, "f1", &f1) == BGPAD_OK);
  CHECK(f1 >= 0.0);
  CHECK(f1 <= 1.0);
  CHECK(bgpad_report_metric(r, "auc", &f1) == BGPAD_ERR_INVALID_ARGUMENT);

  const auto path = (std::filesystem::temp_directory_path() / "bgpad_capi_model.json").string();
  REQUIRE(bgpad_model_save(m, path.c_str()) == BGPAD_OK);
  bgpad_model* loaded = nullptr;
  REQUIRE(bgpad_model_load(path.c_str(), &loaded) == BGPAD_OK);
  CHECK(bgpad_model_equal(m, loaded));

  bgpad_report* e1 = nullptr;
  bgpad_report* e2 = nullptr;
  REQUIRE(bgpad_evaluate(m, s, &e1) == BGPAD_OK);
  REQUIRE(bgpad_evaluate(loaded, s, &e2) == BGPAD_OK);
  CHECK(bgpad_report_equal(e1, e2));

  char* fcsv = nullptr;
  char* tcsv = nullptr;
  REQUIRE(bgpad_attention(m, s, 0.0, 0.0, &fcsv, &tcsv) == BGPAD_OK);
  CHECK(take(fcsv).rfind("src,dst,weight\n", 0) == 0);
  CHECK(take(tcsv).rfind("src,dst,weight\n", 0) == 0);

  char* log = nullptr;
  REQUIRE(bgpad_model_log_csv(m, &log) == BGPAD_OK);
  CHECK(take(log).rfind("epoch,train_loss,val_f1,val_accuracy,val_loss\n", 0) == 0);

  std::remove(path.c_str());
  for (auto* x : {r, e1, e2}) bgpad_report_free(x);
  bgpad_model_free(m);
  bgpad_model_free(loaded);
  bgpad_config_free(c);
  bgpad_series_free(s);
}
