#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "tloc/encoders.hpp"
#include "tloc/model.hpp"

using namespace tloc;

namespace {

TensorD randn(Shape s, Rng& rng, double scale = 1.0) {
  TensorD t(s);
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = normal(rng) * scale;
  return t;
}

LstmWeights<double> random_lstm(std::int64_t d, std::int64_t h, Rng& rng) {
  auto w = [&] { return randn(Shape::mat(h, d + h), rng, 0.4); };
  auto b = [&] { return randn(Shape::vec(h), rng, 0.2); };
  return LstmWeights<double>{w(), w(), w(), w(), b(), b(), b(), b()};
}

BiEncoderWeights<double> random_encoder(std::int64_t d, std::int64_t h, Rng& rng) {
  return BiEncoderWeights<double>{random_lstm(d, h, rng), random_lstm(d, h, rng),
                                  randn(Shape::mat(h, 2 * h), rng, 0.4), randn(Shape::vec(h), rng, 0.2)};
}

std::pair<std::vector<double>, std::vector<double>> run_graph_lstm_step(
    const LstmWeights<double>& w, const std::vector<double>& x, const std::vector<double>& h0,
    const std::vector<double>& c0) {
  Tape<double> tape;
  LstmVars p = bind_lstm(tape, w);
  const std::int64_t d = static_cast<std::int64_t>(x.size());
  const std::int64_t hidden = w.b_i.numel();
  Var xv = tape.constant(TensorD(Shape::vec(d), x));
  Var hv = tape.constant(TensorD(Shape::vec(hidden), h0));
  Var cv = tape.constant(TensorD(Shape::vec(hidden), c0));
  auto [h, c] = lstm_step(tape, p, xv, hv, cv);
  const TensorD& ht = tape.val(h);
  const TensorD& ct = tape.val(c);
  return {{ht.data(), ht.data() + ht.numel()}, {ct.data(), ct.data() + ct.numel()}};
}

}  // namespace

TEST_CASE("all-zero LSTM maps any input to zero state") {
  LstmWeights<double> w{TensorD(Shape::mat(3, 5)), TensorD(Shape::mat(3, 5)),
                        TensorD(Shape::mat(3, 5)), TensorD(Shape::mat(3, 5)),
                        TensorD(Shape::vec(3)),    TensorD(Shape::vec(3)),
                        TensorD(Shape::vec(3)),    TensorD(Shape::vec(3))};
  auto [h, c] = run_graph_lstm_step(w, {1.0, -2.0}, {0, 0, 0}, {0, 0, 0});
  for (double v : h) CHECK(v == 0.0);
  for (double v : c) CHECK(v == 0.0);
}

TEST_CASE("saturated forget gate carries the cell state through") {
  Rng rng = make_rng(2);
  LstmWeights<double> w = random_lstm(2, 3, rng);
  w.b_f.fill(40.0);   // forget gate pinned open
  w.b_i.fill(-40.0);  // input gate pinned shut
  const std::vector<double> c0 = {0.3, -0.7, 1.1};
  auto [h, c] = run_graph_lstm_step(w, {0.5, -0.5}, {0.1, 0.0, -0.1}, c0);
  for (std::size_t i = 0; i < c0.size(); ++i) CHECK(c[i] == doctest::Approx(c0[i]).epsilon(1e-9));
}

TEST_CASE("LSTM step matches scalar recomputation") {
  Rng rng = make_rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    LstmWeights<double> w = random_lstm(4, 3, rng);
    std::vector<double> x = {normal(rng), normal(rng), normal(rng), normal(rng)};
    std::vector<double> h = {normal(rng), normal(rng), normal(rng)};
    std::vector<double> c = {normal(rng), normal(rng), normal(rng)};
    auto [gh, gc] = run_graph_lstm_step(w, x, h, c);
    std::vector<double> oh = h, oc = c;
    oracle::scalar_lstm_step(w, x, oh, oc);
    for (std::size_t i = 0; i < oh.size(); ++i) {
      CHECK(std::abs(gh[i] - oh[i]) < 1e-6);
      CHECK(std::abs(gc[i] - oc[i]) < 1e-6);
    }
  }
}

TEST_CASE("bidirectional encoder matches unrolled scalar oracle") {
  Rng rng = make_rng(5);
  SUBCASE("video-sized instance M=4 h=3") {
    BiEncoderWeights<double> w = random_encoder(5, 3, rng);
    TensorD input = randn(Shape::mat(5, 4), rng);
    TensorD got = encode_sequence(input, w, 0.0, false, rng);
    TensorD want = oracle::scalar_bi_encode(w, input);
    REQUIRE(got.shape() == want.shape());
    for (std::int64_t i = 0; i < got.numel(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-6);
  }
  SUBCASE("sentence-sized instance N=5 h=3") {
    BiEncoderWeights<double> w = random_encoder(4, 3, rng);
    TensorD input = randn(Shape::mat(4, 5), rng);
    TensorD got = encode_sequence(input, w, 0.0, false, rng);
    TensorD want = oracle::scalar_bi_encode(w, input);
    for (std::int64_t i = 0; i < got.numel(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-6);
  }
}

TEST_CASE("length-one sequence reduces to a single projected step") {
  Rng rng = make_rng(7);
  BiEncoderWeights<double> w = random_encoder(4, 3, rng);
  TensorD input = randn(Shape::mat(4, 1), rng);
  TensorD out = encode_sequence(input, w, 0.0, false, rng);
  CHECK(out.shape() == Shape::mat(3, 1));

  // Direct recomputation: one forward step and one backward step from zero
  // state see the same column.
  std::vector<double> x(4);
  for (int r = 0; r < 4; ++r) x[static_cast<std::size_t>(r)] = input.at(r, 0);
  std::vector<double> hf(3, 0.0), cf(3, 0.0), hb(3, 0.0), cb(3, 0.0);
  oracle::scalar_lstm_step(w.fwd, x, hf, cf);
  oracle::scalar_lstm_step(w.bwd, x, hb, cb);
  for (int r = 0; r < 3; ++r) {
    double pre = w.proj_b[r];
    for (int q = 0; q < 3; ++q)
      pre += w.proj_W.at(r, q) * hf[static_cast<std::size_t>(q)] +
             w.proj_W.at(r, 3 + q) * hb[static_cast<std::size_t>(q)];
    CHECK(out.at(r, 0) == doctest::Approx(std::max(pre, 0.0)).epsilon(1e-9));
  }
}

TEST_CASE("reversing input swaps the directional streams") {
  Rng rng = make_rng(11);
  BiEncoderWeights<double> w = random_encoder(4, 3, rng);
  TensorD input = randn(Shape::mat(4, 6), rng);

  TensorD reversed(Shape::mat(4, 6));
  for (std::int64_t r = 0; r < 4; ++r)
    for (std::int64_t j = 0; j < 6; ++j) reversed.at(r, j) = input.at(r, 5 - j);

  BiEncoderWeights<double> swapped = w;
  std::swap(swapped.fwd, swapped.bwd);
  // The projection reads (h_f || h_b); swapping directions also swaps the
  // two column blocks of proj_W.
  for (std::int64_t r = 0; r < 3; ++r)
    for (std::int64_t q = 0; q < 3; ++q) {
      swapped.proj_W.at(r, q) = w.proj_W.at(r, 3 + q);
      swapped.proj_W.at(r, 3 + q) = w.proj_W.at(r, q);
    }

  TensorD a = encode_sequence(input, w, 0.0, false, rng);
  TensorD b = encode_sequence(reversed, swapped, 0.0, false, rng);
  for (std::int64_t r = 0; r < 3; ++r)
    for (std::int64_t j = 0; j < 6; ++j)
      CHECK(a.at(r, j) == doctest::Approx(b.at(r, 5 - j)).epsilon(1e-9));
}

TEST_CASE("encoder output columns are context dependent") {
  Rng rng = make_rng(13);
  BiEncoderWeights<double> w = random_encoder(3, 4, rng);
  // Identical token repeated: columns still differ through recurrent state.
  TensorD col = randn(Shape::mat(3, 1), rng);
  TensorD rep(Shape::mat(3, 5));
  for (std::int64_t r = 0; r < 3; ++r)
    for (std::int64_t j = 0; j < 5; ++j) rep.at(r, j) = col.at(r, 0);
  TensorD out = encode_sequence(rep, w, 0.0, false, rng);
  bool some_interior_differs = false;
  for (std::int64_t j = 1; j + 1 < 5 && !some_interior_differs; ++j)
    for (std::int64_t r = 0; r < 4; ++r)
      if (std::abs(out.at(r, j) - out.at(r, j + 1)) > 1e-9) some_interior_differs = true;
  CHECK(some_interior_differs);

  // Changing the last column changes the first output column (backward pass
  // carries it across).
  TensorD perturbed = rep;
  for (std::int64_t r = 0; r < 3; ++r) perturbed.at(r, 4) += 1.0;
  TensorD out2 = encode_sequence(perturbed, w, 0.0, false, rng);
  double delta = 0.0;
  for (std::int64_t r = 0; r < 4; ++r) delta += std::abs(out2.at(r, 0) - out.at(r, 0));
  CHECK(delta > 1e-9);
}

TEST_CASE("encoder outputs are nonnegative after the projection relu") {
  Rng rng = make_rng(17);
  BiEncoderWeights<double> w = random_encoder(4, 5, rng);
  TensorD input = randn(Shape::mat(4, 7), rng, 2.0);
  TensorD out = encode_sequence(input, w, 0.0, false, rng);
  for (std::int64_t i = 0; i < out.numel(); ++i) CHECK(out[i] >= 0.0);
}

TEST_CASE("inverted dropout mask scales kept entries") {
  Rng rng = make_rng(19);
  TensorD mask = dropout_mask<double>(Shape::mat(100, 100), 0.5, rng);
  std::int64_t kept = 0;
  for (std::int64_t i = 0; i < mask.numel(); ++i) {
    CHECK((mask[i] == 0.0 || mask[i] == 2.0));
    kept += mask[i] != 0.0;
  }
  // Keep rate concentrates near 0.5 over 10^4 draws.
  CHECK(kept > 4600);
  CHECK(kept < 5400);

  // Rate 0 keeps everything at scale 1.
  TensorD none = dropout_mask<double>(Shape::vec(50), 0.0, rng);
  for (std::int64_t i = 0; i < none.numel(); ++i) CHECK(none[i] == 1.0);
}

TEST_CASE("empty sequences are rejected") {
  Rng rng = make_rng(23);
  BiEncoderWeights<double> w = random_encoder(3, 2, rng);
  TensorD empty(Shape::mat(3, 0));
  CHECK_THROWS_AS((void)encode_sequence(empty, w, 0.0, false, rng), UsageError);
}
