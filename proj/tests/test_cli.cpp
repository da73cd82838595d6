#include <doctest.h>

#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "mce/cli.hpp"
#include "mce/text.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = mce::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string data(const char* name) { return (fs::path(MCE_DATA_DIR) / name).string(); }

fs::path fresh_dir(const char* name) {
  auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  auto r = run({"frobnicate"});
  CHECK(r.code == 2);
  CHECK_FALSE(r.err.empty());
  CHECK(run({}).code == 2);
  CHECK(run({"bootstrap"}).code == 2);  // --quotes is required
  CHECK(run({"bootstrap", "--quotes", data("quotes.csv"), "--format", "xml"}).code == 2);
}

TEST_CASE("bootstrap writes curves and a manifest") {
  auto dir = fresh_dir("mce_cli_bootstrap");
  auto r = run({"bootstrap", "--quotes", data("quotes.csv"), "--out", dir.string()});
  REQUIRE(r.code == 0);
  for (const char* f : {"discount.csv", "forwards.csv", "repricing.csv", "manifest.json"}) {
    CHECK(fs::exists(dir / f));
  }
  auto manifest = nlohmann::json::parse(mce::text::read_file(dir / "manifest.json"));
  CHECK(manifest["command"] == "bootstrap");
  CHECK(manifest["inputs"].size() >= 1);
  CHECK(mce::text::read_file(dir / "discount.csv").rfind("T,logP\n", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("input errors map to exit codes") {
  auto dir = fresh_dir("mce_cli_bad");
  fs::create_directories(dir);
  mce::text::write_file(dir / "bad.json", R"({"lgd_C": 1.5})");
  CHECK(run({"bootstrap", "--quotes", data("quotes.csv"), "--config", (dir / "bad.json").string()}).code == 2);
  CHECK(run({"bootstrap", "--quotes", (dir / "missing.csv").string()}).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("adjustments table columns") {
  auto dir = fresh_dir("mce_cli_adj");
  auto r = run({"adjustments", "--quotes", data("quotes.csv"), "--config", data("config.json"), "--policy",
                data("policy_fraction.json"), "--maturities", "1,2", "--paths", "500", "--format", "csv", "--out",
                dir.string()});
  REQUIRE(r.code == 0);
  auto csv = mce::text::read_file(dir / "adjustments.csv");
  CHECK(csv.rfind("T,x,F,Fbar,gamma,P,Pbar", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("price report") {
  auto dir = fresh_dir("mce_cli_price");
  auto r = run({"price", "--quotes", data("quotes.csv"), "--config", data("config.json"), "--deal",
                data("swap_5y.json"), "--policy", data("policy_none.json"), "--paths", "300", "--seed", "7",
                "--out", dir.string()});
  REQUIRE(r.code == 0);
  auto doc = nlohmann::json::parse(mce::text::read_file(dir / "price.json"));
  CHECK(doc["seed"] == 7);
  const auto& p = doc["price"];
  double sum = p["decomposition"]["cva"].get<double>() + p["decomposition"]["dva"].get<double>() +
               p["decomposition"]["funding_cost"].get<double>() + p["decomposition"]["collateral_cost"].get<double>();
  CHECK(sum == doctest::Approx(p["adjusted_price"].get<double>() - p["clean_price"].get<double>()));
  fs::remove_all(dir);
}
