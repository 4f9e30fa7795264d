#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "memlb/io.hpp"
#include "memlb/rng.hpp"

using namespace memlb;

TEST_CASE("sign matrix text round trip") {
  RandomTape tape(19);
  const SignMatrix m = sample_sign_matrix(12, 6, tape);
  std::stringstream ss;
  write_sign_matrix_text(ss, m, 1.0);
  const auto [back, scale] = read_sign_matrix_text(ss);
  CHECK(back == m);
  CHECK(scale == 1.0);
}

TEST_CASE("packed binary matches the text encoding") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RandomTape tape(seed);
    const int d = 3 + static_cast<int>(seed % 14);
    const int n = 1 + static_cast<int>(seed % d);
    const SignMatrix m = sample_sign_matrix(d, n, tape);
    std::stringstream packed;
    write_sign_matrix_packed(packed, m);
    CHECK(packed.str().size() ==
          static_cast<std::size_t>(n) * static_cast<std::size_t>((d + 7) / 8));
    const SignMatrix back = read_sign_matrix_packed(packed, d, n);
    CHECK(back == m);
  }
}

TEST_CASE("instance files round trip bit-exactly") {
  const InstanceParams p = InstanceParams::make(16, 2, 2, /*scaled=*/true);
  const HardInstance inst = HardInstance::make_static(p, 1);
  std::stringstream ss;
  write_instance(ss, inst);
  const HardInstance back = read_instance(ss);
  CHECK(back.params().d == p.d);
  CHECK(back.params().gamma == p.gamma);
  CHECK(back.params().eta == p.eta);
  CHECK(back.params().global_scale == p.global_scale);
  CHECK(back.seed() == 1);
  CHECK(back.A() == inst.A());
  CHECK(back.nem_vectors() == inst.nem_vectors());

  // Same content twice: byte-identical files.
  std::stringstream s2;
  write_instance(s2, inst);
  CHECK(ss.str() == s2.str());

  // The loaded instance answers queries identically.
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd x = rng.unit_ball(16);
    CHECK(back.query_static(x).identical(inst.query_static(x)));
  }
}

TEST_CASE("malformed instance files are rejected") {
  std::stringstream ss("not an instance\n");
  CHECK_THROWS_AS(read_instance(ss), FormatError);

  const InstanceParams p = InstanceParams::make(16, 2, 2);
  const HardInstance inst = HardInstance::make_static(p, 1);
  std::stringstream good;
  write_instance(good, inst);
  std::string text = good.str();
  text.resize(text.size() / 2);  // truncate
  std::stringstream bad(text);
  CHECK_THROWS_AS(read_instance(bad), FormatError);
}

TEST_CASE("run records serialize as JSON lines with the fixed fields") {
  const InstanceParams p = InstanceParams::make(8, 2, 2, /*scaled=*/false);
  auto inst = std::make_shared<HardInstance>(HardInstance::make_static(p, 3));
  auto sgd = baseline_subgradient_descent(8, StepSchedule::inverse_sqrt(0.1), 16);
  RandomTape tape(3);
  RunOptions ro;
  ro.max_queries = 5;
  const RunRecord rec = run(*sgd, make_static_oracle(inst), 8 * 16 + 32, tape, ro);

  std::stringstream ss;
  write_run_record(ss, rec);
  std::string line;
  int lines = 0;
  while (std::getline(ss, line)) {
    const nlohmann::json j = nlohmann::json::parse(line);
    CHECK(j.contains("step"));
    CHECK(j.contains("x"));
    CHECK(j.contains("value"));
    CHECK(j.contains("branch"));
    CHECK(j.contains("informative"));
    CHECK(j.contains("state_bits"));
    CHECK(j["x"].size() == 8);
    ++lines;
  }
  CHECK(lines == 5);

  const std::string summary = run_summary_line(rec, -0.5, 0.1);
  CHECK(summary.find("alg=sgd") != std::string::npos);
  CHECK(summary.find("queries=5") != std::string::npos);
}

TEST_CASE("game transcripts round trip") {
  GameParams params{16, 2, 0, static_cast<std::size_t>(2 * 16 * 64),
                    OracleVariant::kSubgradient};
  auto s = strategy_store_null_vectors();
  const GameTranscript t = play(params, *s, 9);
  std::stringstream ss;
  write_transcript(ss, t);
  const GameTranscript back = read_transcript(ss);
  CHECK(back.win == t.win);
  CHECK(back.seed == t.seed);
  CHECK(back.strategy == t.strategy);
  CHECK(back.params.d == t.params.d);
  CHECK(back.params.variant == t.params.variant);
  CHECK(back.message == t.message);
  REQUIRE(back.returned.size() == t.returned.size());
  for (std::size_t i = 0; i < t.returned.size(); ++i) {
    CHECK(back.returned[i] == t.returned[i]);
  }
  REQUIRE(back.verdicts.size() == t.verdicts.size());
  for (std::size_t i = 0; i < t.verdicts.size(); ++i) {
    CHECK(back.verdicts[i].pass == t.verdicts[i].pass);
  }
}

TEST_CASE("format_double survives the round trip on awkward values") {
  for (double v : {0.1, -1.0 / 3.0, 1e-300, 6.02e23, 0.0,
                   0.030077677252790889}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}
