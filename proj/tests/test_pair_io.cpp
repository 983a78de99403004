#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "slowlab/pair_io.hpp"

using namespace slowlab;
using namespace slowlab::synth;

namespace {

PairBatch example_batch() {
  Rng rng(3);
  SourceChainConfig cfg;
  cfg.dim = 3;
  cfg.count = 17;
  return sample_pairs(cfg, rng);
}

}  // namespace

TEST_CASE("binary round trip is exact") {
  const PairBatch b = example_batch();
  std::stringstream buf;
  write_pairs_binary(buf, b);
  CHECK(buf.str().substr(0, 4) == "TSPB");
  CHECK(buf.str().size() == 4 + 4 + 8 + 8 + 2 * 17 * 3 * 8);
  const PairBatch r = read_pairs_binary(buf);
  CHECK(r.prev == b.prev);
  CHECK(r.next == b.next);
}

TEST_CASE("CSV round trip keeps full precision") {
  const PairBatch b = example_batch();
  std::stringstream buf;
  write_pairs_csv(buf, b);
  std::string header;
  std::getline(std::stringstream(buf.str()), header);
  CHECK(header == "prev_0,prev_1,prev_2,next_0,next_1,next_2");
  const PairBatch r = read_pairs_csv(buf);
  CHECK(r.prev == b.prev);
  CHECK(r.next == b.next);
}

TEST_CASE("corrupt inputs are rejected") {
  std::stringstream bad_magic("XXXX0000");
  CHECK_THROWS_AS(read_pairs_binary(bad_magic), Error);
  const PairBatch b = example_batch();
  std::stringstream buf;
  write_pairs_binary(buf, b);
  std::stringstream truncated(buf.str().substr(0, 60));
  CHECK_THROWS_AS(read_pairs_binary(truncated), Error);
  std::stringstream ragged("prev_0,next_0\n1.0\n");
  CHECK_THROWS_AS(read_pairs_csv(ragged), Error);
}

TEST_CASE("save and load pick the format from the extension") {
  const PairBatch b = example_batch();
  const auto dir = std::filesystem::temp_directory_path();
  for (const char* name : {"slowlab_io_test.csv", "slowlab_io_test.tspb"}) {
    const std::string path = (dir / name).string();
    save_pairs(path, b);
    const PairBatch r = load_pairs(path);
    CHECK(r.prev == b.prev);
    CHECK(r.next == b.next);
    std::filesystem::remove(path);
  }
  CHECK_THROWS_AS(load_pairs((dir / "slowlab_missing_file.tspb").string()), Error);
}
