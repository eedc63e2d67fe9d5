#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "mitoforge/cli.hpp"
#include "mitoforge/csv.hpp"
#include "mitoforge/ensemble.hpp"
#include "mitoforge/imaging.hpp"
#include "mitoforge/pipeline.hpp"

using namespace mitoforge;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string p(const testing::TempDir& dir, const std::string& name) { return (dir / name).string(); }

void write_manifest_with_images(const testing::TempDir& dir, std::size_t count) {
  std::filesystem::create_directories(dir / "img");
  std::vector<ManifestRecord> records;
  for (std::size_t i = 0; i < count; ++i) {
    ManifestRecord r;
    r.id = "r" + std::to_string(i);
    r.path = "img/" + r.id + ".png";
    r.label = static_cast<int>(i % 2);
    r.group = i < count / 2 ? DatasetGroup::PrimaryTrain
                            : (i % 2 ? DatasetGroup::ExternalA : DatasetGroup::ExternalB);
    r.domain = "d" + std::to_string(i % 3);
    save_png(testing::random_image(12 + i, 10, i), dir.path() / r.path);
    records.push_back(r);
  }
  write_manifest(records, dir / "manifest.csv");
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"--help"}).out.find("augment") != std::string::npos);
  for (const char* sub : {"augment", "fisheye", "fda", "sample", "split", "lora", "ensemble",
                          "evaluate"}) {
    CHECK_MESSAGE(run({sub, "--help"}).code == 0, sub);
  }
  CHECK(run({"lora", "gradcheck", "--help"}).code == 0);
  CHECK(run({"ensemble", "fit", "--help"}).code == 0);
  CHECK(run({"--help-all"}).code == 0);

  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"fisheye", "--k", "0.2"}).code == 1);  // missing required flags
  CHECK(run({"fisheye", "--input", "/nonexistent.png", "--k", "0", "--out", "x.png"}).code == 1);
}

TEST_CASE("fisheye k = 0 reproduces the file") {
  testing::TempDir dir("cli_fe");
  save_png(testing::random_image(16, 16, 3), dir / "in.png");
  const auto r = run({"fisheye", "--input", p(dir, "in.png"), "--k", "0", "--out", p(dir, "out.png")});
  REQUIRE(r.code == 0);
  CHECK(testing::read_file(dir / "in.png") == testing::read_file(dir / "out.png"));

  CHECK(run({"fisheye", "--input", p(dir, "in.png"), "--k", "-1", "--out", p(dir, "o.png")}).code == 1);
  save_png(testing::random_image(16, 12, 3), dir / "rect.png");
  CHECK(run({"fisheye", "--input", p(dir, "rect.png"), "--k", "0.3", "--out", p(dir, "o.png")}).code == 1);

  testing::write_file(dir / "corrupt.png", "garbage");
  CHECK(run({"fisheye", "--input", p(dir, "corrupt.png"), "--k", "0", "--out", p(dir, "o.png")}).code == 2);
  CHECK(run({"fisheye", "--input", p(dir, "in.png"), "--k", "0", "--out", p(dir, "no/such/dir/o.png")}).code == 2);
}

TEST_CASE("fda") {
  testing::TempDir dir("cli_fda");
  save_png(testing::random_image(16, 16, 1), dir / "src.png");
  save_png(testing::random_image(16, 16, 2), dir / "tgt.png");
  const auto r = run({"fda", "--source", p(dir, "src.png"), "--target", p(dir, "tgt.png"), "--beta",
                      "0.1", "--out", p(dir, "out.png")});
  REQUIRE(r.code == 0);
  CHECK(load_png(dir / "out.png").height() == 16);
  CHECK(run({"fda", "--source", p(dir, "src.png"), "--out", p(dir, "o.png")}).code == 1);
  CHECK(run({"fda", "--source", p(dir, "src.png"), "--target", p(dir, "tgt.png"), "--beta", "2",
             "--out", p(dir, "o.png")})
            .code == 1);
}

TEST_CASE("augment") {
  testing::TempDir dir("cli_aug");
  write_manifest_with_images(dir, 4);
  testing::write_file(dir / "cfg.json", "{\"side\": 16, \"fda_probability\": 0.0}");
  const auto r = run({"augment", "--config", p(dir, "cfg.json"), "--manifest", p(dir, "manifest.csv"),
                      "--out-dir", p(dir, "out"), "--seed", "5", "--provenance", p(dir, "prov.jsonl")});
  REQUIRE(r.code == 0);
  for (int i = 0; i < 4; ++i) {
    CHECK(load_png(dir / ("out/r" + std::to_string(i) + ".png")).width() == 16);
  }
  std::istringstream lines(testing::read_file(dir / "prov.jsonl"));
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    CHECK(parse_provenance_line(line).id == "r" + std::to_string(count));
    ++count;
  }
  CHECK(count == 4);

  SUBCASE("FDA without targets is MissingTargets") {
    testing::write_file(dir / "fda.json", "{\"side\": 16, \"fda_probability\": 0.5}");
    const auto m = run({"augment", "--config", p(dir, "fda.json"), "--manifest",
                        p(dir, "manifest.csv"), "--out-dir", p(dir, "out2"), "--seed", "5"});
    CHECK(m.code == 1);
    CHECK(m.err.find("MissingTargets") != std::string::npos);
  }
  SUBCASE("targets resolve relative to the config") {
    std::filesystem::create_directories(dir / "targets");
    save_png(testing::random_image(20, 20, 77), dir / "targets/t.png");
    testing::write_file(dir / "fda.json",
                        "{\"side\": 16, \"fda_probability\": 1.0, \"target_dir\": \"targets\"}");
    const auto m = run({"augment", "--config", p(dir, "fda.json"), "--manifest",
                        p(dir, "manifest.csv"), "--out-dir", p(dir, "out3"), "--seed", "5",
                        "--provenance", p(dir, "p3.jsonl"), "--workers", "3"});
    REQUIRE(m.code == 0);
    CHECK(testing::read_file(dir / "p3.jsonl").find("\"fda_target\":\"t.png\"") != std::string::npos);
  }
}

TEST_CASE("sample and split") {
  testing::TempDir dir("cli_ss");
  write_manifest_with_images(dir, 6);
  const auto s = run({"sample", "--manifest", p(dir, "manifest.csv"), "--n", "50", "--seed", "1",
                      "--out", p(dir, "draws.csv")});
  REQUIRE(s.code == 0);
  const auto table = csv::read(dir / "draws.csv");
  CHECK(table.header == std::vector<std::string>{"draw", "id"});
  CHECK(table.rows.size() == 50);
  CHECK(run({"sample", "--manifest", p(dir, "manifest.csv"), "--n", "5", "--seed", "1", "--weights",
             "1,2", "--out", p(dir, "d.csv")})
            .code == 1);

  const auto sp = run({"split", "--manifest", p(dir, "manifest.csv"), "--ratio", "0.5", "--seed",
                       "3", "--out", p(dir, "split.csv")});
  REQUIRE(sp.code == 0);
  const auto records = read_manifest(dir / "split.csv");
  CHECK(records.size() == 6);
  std::size_t val = 0;
  for (const auto& r : records) val += r.split == Split::Val;
  CHECK(val == 1);  // 3 primary records, ceil(0.5 * 3) = 2 train
  CHECK(run({"split", "--manifest", p(dir, "manifest.csv"), "--seed", "3", "--out",
             p(dir, "s2.csv"), "--split-per-source"})
            .code == 1);
}

TEST_CASE("lora commands") {
  const auto g = run({"lora", "gradcheck", "--seed", "7"});
  CHECK(g.code == 0);
  CHECK(g.out.rfind("max_relative_error ", 0) == 0);

  testing::TempDir dir("cli_lora");
  const auto t = run({"lora", "demo-train", "--seed", "1", "--epochs", "5", "--out", p(dir, "h.csv")});
  CHECK(t.code == 0);
  const auto hist = csv::read(dir / "h.csv");
  CHECK(hist.rows.size() == 6);
}

TEST_CASE("ensemble and evaluate") {
  testing::TempDir dir("cli_ens");
  testing::write_file(dir / "a.csv", "id,prob_0,prob_1\nx,0.9,0.1\ny,0.3,0.7\nz,0.6,0.4\n");
  testing::write_file(dir / "b.csv", "id,prob_0,prob_1\nx,0.4,0.6\ny,0.2,0.8\nz,0.1,0.9\n");
  testing::write_file(dir / "labels.csv", "id,label,domain\nx,0,d0\ny,1,d0\nz,1,d1\n");

  SUBCASE("one model gets weight 1") {
    const auto r = run({"ensemble", "fit", "--preds", p(dir, "a.csv"), "--labels",
                        p(dir, "labels.csv"), "--out", p(dir, "w.json")});
    REQUIRE(r.code == 0);
    const auto w = nlohmann::json::parse(testing::read_file(dir / "w.json"));
    CHECK(w["weights"] == nlohmann::json::array({1.0}));
  }
  SUBCASE("fit, predict, evaluate") {
    REQUIRE(run({"ensemble", "fit", "--preds", p(dir, "a.csv"), p(dir, "b.csv"), "--labels",
                 p(dir, "labels.csv"), "--out", p(dir, "w.json")})
                .code == 0);
    REQUIRE(run({"ensemble", "predict", "--preds", p(dir, "a.csv"), p(dir, "b.csv"), "--weights",
                 p(dir, "w.json"), "--out", p(dir, "ens.csv")})
                .code == 0);
    const auto ev = run({"evaluate", "--preds", p(dir, "ens.csv"), "--labels",
                         p(dir, "labels.csv"), "--by-domain"});
    REQUIRE(ev.code == 0);
    CHECK(ev.out.find("OBA") != std::string::npos);
    CHECK(ev.out.find("d1") != std::string::npos);

    const auto js = run({"evaluate", "--preds", p(dir, "ens.csv"), "--labels",
                         p(dir, "labels.csv"), "--by-domain", "--json"});
    REQUIRE(js.code == 0);
    const auto report = report_from_json(js.out);
    CHECK(report.per_domain_ba.size() == 2);

    // Swapped file order no longer matches the stored model names.
    CHECK(run({"ensemble", "predict", "--preds", p(dir, "b.csv"), p(dir, "a.csv"), "--weights",
               p(dir, "w.json"), "--out", p(dir, "e2.csv")})
              .code == 1);
  }
  SUBCASE("hard label predictions") {
    testing::write_file(dir / "hard.csv", "id,pred\nx,0\ny,1\nz,0\n");
    const auto ev = run({"evaluate", "--preds", p(dir, "hard.csv"), "--labels", p(dir, "labels.csv")});
    REQUIRE(ev.code == 0);
    CHECK(ev.out.find("75.000") != std::string::npos);
  }
  SUBCASE("misaligned ids") {
    testing::write_file(dir / "c.csv", "id,prob_0,prob_1\nx,0.9,0.1\nq,0.3,0.7\nz,0.6,0.4\n");
    const auto r = run({"ensemble", "fit", "--preds", p(dir, "a.csv"), p(dir, "c.csv"), "--labels",
                        p(dir, "labels.csv"), "--out", p(dir, "w.json")});
    CHECK(r.code == 1);
    CHECK(r.err.find("AlignmentError") != std::string::npos);
  }
  SUBCASE("degenerate labels") {
    testing::write_file(dir / "l1.csv", "id,label,domain\nx,0,d0\ny,0,d0\nz,0,d1\n");
    const auto r = run({"ensemble", "fit", "--preds", p(dir, "a.csv"), "--labels",
                        p(dir, "l1.csv"), "--out", p(dir, "w.json")});
    CHECK(r.code == 1);
    CHECK(r.err.find("DegenerateLabels") != std::string::npos);
  }
}
