#include <doctest.h>

#include <random>

#include "spocta/error.hpp"
#include "spocta/exec.hpp"
#include "spocta/masks.hpp"
#include "spocta/reference_conv.hpp"
#include "spocta/search.hpp"
#include "test_util.hpp"

using namespace spocta;

namespace {

InOutMap map_for(OpKind op, const std::vector<Coordinate>& cs) {
  switch (op) {
    case OpKind::Subm3: return search_subm3(cs).map;
    case OpKind::Gconv2: return search_gconv2(cs).map;
    case OpKind::Gconv3: return search_gconv3(cs).map;
    case OpKind::Tconv2: break;
  }
  return {};
}

}  // namespace

TEST_CASE("sparsity masks") {
  const std::vector<std::int8_t> row{0, 3, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, -1, 5};
  const auto m = SparsityMask::from_row(std::span<const std::int8_t>(row));
  CHECK(m.channels() == 19);
  CHECK(m.popcount() == 3);
  CHECK(m.test(1));
  CHECK_FALSE(m.test(0));
  CHECK(m.set_channels() == std::vector<std::uint32_t>{1, 17, 18});
  CHECK(m.nonzero_groups() == 2);
  CHECK(m.group_popcounts()[1] == 2);

  const std::vector<std::int8_t> w{10, 11, 20, 21, 30, 31};  // 3 channels x 2 outputs
  const std::vector<std::int8_t> r3{0, 7, 9};
  const auto mk = SparsityMask::from_row(std::span<const std::int8_t>(r3));
  const auto c = gather_compact(std::span<const std::int8_t>(r3), mk, std::span<const std::int8_t>(w), 2);
  CHECK(c.activations == std::vector<std::int8_t>{7, 9});
  CHECK(c.weight_columns == std::vector<std::int8_t>{20, 21, 30, 31});

  QuantTensor t;
  t.channels = 2;
  t.coords = {{0, 0, 0}, {1, 0, 0}};
  t.features = {1, 0, 0, 0};
  CHECK(mask_density(build_masks(t)).density() == doctest::Approx(0.25));
}

TEST_CASE("identity center tap copies the input") {
  std::mt19937_64 rng(1);
  auto t = testutil::random_tensor<std::int8_t>(testutil::random_coords(rng, 16, 200), 8, rng);
  auto w = WeightTensor<std::int8_t>::zeros(3, 8, 8);
  for (std::size_t c = 0; c < 8; ++c) w.at(c, c, kCenterOffsetId) = 1;
  LayerSpec s = testutil::make_spec(OpKind::Subm3, 8, 8);
  const QuantTensor out = execute_layer(t, w, search_subm3(t.coords).map, s);
  CHECK(out == t);
}

TEST_CASE("reference mode matches the dense oracle for each operator") {
  std::mt19937_64 rng(12);
  for (OpKind op : {OpKind::Subm3, OpKind::Gconv2, OpKind::Gconv3}) {
    for (int trial = 0; trial < 4; ++trial) {
      const auto cs = testutil::random_scene(rng, 20, 0.01 + 0.03 * trial);
      const auto t = testutil::random_tensor<float>(cs, 7, rng);
      const auto w = testutil::random_weights<float>(kernel_size(op), 18, 7, rng);
      LayerSpec s = testutil::make_spec(op, 7, 18);
      s.postprocess = {PostOp::relu()};
      const FloatTensor got = execute_layer(t, w, map_for(op, cs), s);
      const FloatTensor want = dense_oracle_conv(t, w, s, Coordinate{20, 20, 20});
      const auto diff = testutil::diff_tensors(got, want, 1e-4);
      CHECK_MESSAGE(!diff, to_string(op), " ", diff.value_or(""));
    }
  }
}

TEST_CASE("Tconv2 through the transposed map matches the oracle") {
  std::mt19937_64 rng(13);
  const auto fine = testutil::random_scene(rng, 16, 0.05);
  const InOutMap down = search_gconv2(fine).map;
  const auto t = testutil::random_tensor<float>(down.out_coords, 6, rng);
  const auto w = testutil::random_weights<float>(2, 4, 6, rng);
  LayerSpec s = testutil::make_spec(OpKind::Tconv2, 6, 4);
  s.paired_layer = 0;
  const FloatTensor got = execute_layer(t, w, transpose_map(down, fine), s);
  CHECK(got.coords == fine);
  const FloatTensor want = dense_oracle_conv(t, w, s, Coordinate{16, 16, 16}, fine);
  CHECK_FALSE(testutil::diff_tensors(got, want, 1e-4));
}

TEST_CASE("quantized mode is bit-exact against a naive int8 convolution") {
  std::mt19937_64 rng(14);
  for (OpKind op : {OpKind::Subm3, OpKind::Gconv2, OpKind::Gconv3}) {
    const auto cs = testutil::random_scene(rng, 24, 0.03);
    const auto t = testutil::random_tensor<std::int8_t>(cs, 20, rng);
    const auto w = testutil::random_weights<std::int8_t>(kernel_size(op), 17, 20, rng);
    LayerSpec s = testutil::make_spec(op, 20, 17);
    s.quant = QuantParams{0.05f, 0.5f, 0.01f};
    std::vector<float> scale(17), shift(17);
    for (std::size_t c = 0; c < 17; ++c) {
      scale[c] = 0.5f + 0.05f * static_cast<float>(c);
      shift[c] = static_cast<float>(c) - 8.0f;
    }
    s.postprocess = {PostOp::requantize(), PostOp::batch_norm(scale, shift), PostOp::relu()};
    const QuantTensor got = execute_layer(t, w, map_for(op, cs), s);
    const auto diff = testutil::diff_tensors(got, testutil::naive_int8_conv(t, w, s));
    CHECK_MESSAGE(!diff, to_string(op), " ", diff.value_or(""));
  }
}

TEST_CASE("zero skipping, dataflow and threads do not change results") {
  std::mt19937_64 rng(15);
  const auto cs = testutil::random_scene(rng, 32, 0.02);
  const auto t = testutil::random_tensor<std::int8_t>(cs, 24, rng, 0.4);
  const auto w = testutil::random_weights<std::int8_t>(3, 40, 24, rng);
  LayerSpec s = testutil::make_spec(OpKind::Subm3, 24, 40);
  s.quant = QuantParams{0.1f, 1.0f, 0.01f};
  s.postprocess = {PostOp::requantize()};
  const InOutMap m = search_subm3(cs).map;
  const QuantTensor base = execute_layer(t, w, m, s);
  ExecOptions dense;
  dense.sparse_gather = false;
  CHECK(execute_layer(t, w, m, s, dense) == base);
  ExecOptions is;
  is.dataflow = Dataflow::InputStationary;
  CHECK(execute_layer(t, w, m, s, is) == base);
  ExecOptions threaded;
  threaded.threads = 4;
  CHECK(execute_layer(t, w, m, s, threaded) == base);
}

TEST_CASE("weight access callback runs in map order, tile-minor") {
  std::mt19937_64 rng(16);
  const auto cs = testutil::random_coords(rng, 8, 30);
  const auto t = testutil::random_tensor<float>(cs, 4, rng);
  const auto w = testutil::random_weights<float>(3, 33, 4, rng);
  const LayerSpec s = testutil::make_spec(OpKind::Subm3, 4, 33);
  const InOutMap m = search_subm3(cs).map;
  std::vector<WeightAccess> seen;
  ExecOptions o;
  o.threads = 3;
  o.on_weight_access = [&](const WeightAccess& a) { seen.push_back(a); };
  ExecStats stats;
  execute_layer(t, w, m, s, o, &stats);
  REQUIRE(seen.size() == m.entries.size() * 3);
  for (std::size_t i = 0; i < seen.size(); ++i) {
    CHECK(seen[i].entry == i / 3);
    CHECK(seen[i].cout_tile == i % 3);
    CHECK(seen[i].kernel_offset_id == m.entries[i / 3].kernel_offset_id);
  }
  CHECK(stats.dataflow == Dataflow::OutputStationary);
  CHECK(stats.rows_emitted == cs.size());
  for (auto v : stats.entry_visits) CHECK(v == 1);
  REQUIRE(stats.entry_nnz.size() == m.entries.size());
  const auto masks = build_masks(t);
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    CHECK(stats.entry_nnz[i] == masks[m.entries[i].in].popcount());
  }
}

TEST_CASE("default dataflow per operator") {
  CHECK(default_dataflow(OpKind::Subm3) == Dataflow::OutputStationary);
  CHECK(default_dataflow(OpKind::Gconv2) == Dataflow::OutputStationary);
  CHECK(default_dataflow(OpKind::Gconv3) == Dataflow::InputStationary);
  CHECK(default_dataflow(OpKind::Tconv2) == Dataflow::InputStationary);
}

TEST_CASE("execution guards") {
  std::mt19937_64 rng(17);
  const auto cs = testutil::random_coords(rng, 8, 20);
  const auto t = testutil::random_tensor<std::int8_t>(cs, 4, rng);
  const InOutMap m = search_subm3(cs).map;

  auto w = testutil::random_weights<std::int8_t>(3, 4, 5, rng);
  try {
    execute_layer(t, w, m, testutil::make_spec(OpKind::Subm3, 5, 4));
    FAIL("channel mismatch accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ChannelMismatch);
  }

  InOutMap broken = m;
  broken.entries.push_back({static_cast<std::uint32_t>(cs.size()), 0, 13});
  const auto w4 = testutil::random_weights<std::int8_t>(3, 4, 4, rng);
  try {
    execute_layer(t, w4, broken, testutil::make_spec(OpKind::Subm3, 4, 4));
    FAIL("out-of-range map accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MapInconsistent);
  }

  // 27 * C_in * 128^2 must stay below 2^31.
  const std::size_t big = 4855;
  QuantTensor wide;
  wide.channels = big;
  wide.coords = {{0, 0, 0}};
  wide.features.assign(big, 1);
  const auto ww = WeightTensor<std::int8_t>::zeros(3, 1, big);
  try {
    execute_layer(wide, ww, search_subm3(wide.coords).map, testutil::make_spec(OpKind::Subm3, big, 1));
    FAIL("overflow-prone layer accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigInvalid);
  }
  QuantTensor ok = wide;
  ok.channels = 4854;
  ok.features.assign(4854, 1);
  const auto wo = WeightTensor<std::int8_t>::zeros(3, 1, 4854);
  CHECK_NOTHROW(execute_layer(ok, wo, search_subm3(ok.coords).map, testutil::make_spec(OpKind::Subm3, 4854, 1)));
}

TEST_CASE("empty input produces empty output") {
  QuantTensor t;
  t.channels = 3;
  const auto w = WeightTensor<std::int8_t>::zeros(3, 2, 3);
  const QuantTensor out =
      execute_layer(t, w, search_subm3(t.coords).map, testutil::make_spec(OpKind::Subm3, 3, 2));
  CHECK(out.coords.empty());
  CHECK(out.channels == 2);
}
