#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "prelac/adam.hpp"
#include "prelac/checkpoint.hpp"
#include "prelac/errors.hpp"
#include "prelac/ops.hpp"

using namespace prelac;
using ad::Tensor;
using testing::check_gradient;
using testing::random_tensor;

namespace {

void require_close(const Tensor& t, std::initializer_list<double> expected, double tol = 1e-12) {
  REQUIRE(t.size() == expected.size());
  std::size_t i = 0;
  for (double e : expected) CHECK(t.values()[i++] == doctest::Approx(e).epsilon(tol));
}

void require_gradient(const testing::TensorFn& f, std::vector<Tensor> inputs, double tol = 1e-5) {
  const auto report = check_gradient(f, std::move(inputs), 17);
  CHECK(report.checked > 0);
  CHECK(report.max_relative < tol);
}

}  // namespace

TEST_CASE("matmul hand cases") {
  require_close(ad::matmul(Tensor::matrix({{1, 0}, {0, 1}}), Tensor::matrix({{3, 4}, {5, 6}})), {3, 4, 5, 6});
  require_close(ad::matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}})), {11});
  CHECK_THROWS_AS(ad::matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{1, 2}})), DimensionError);
}

TEST_CASE("matmul gradient of sum against finite differences") {
  require_gradient([](const auto& x) { return ad::sum(ad::matmul(x[0], x[1])); },
                   {random_tensor(3, 4, 1), random_tensor(4, 2, 2)});
}

TEST_CASE("softmax rows") {
  require_close(ad::softmax_rows(Tensor::matrix({{0, 0}})), {0.5, 0.5});
  Tensor big = ad::softmax_rows(Tensor::matrix({{1000, 0}}));
  CHECK(std::isfinite(big.values()[0]));
  CHECK(big.values()[0] == doctest::Approx(1.0));
  CHECK(big.values()[1] == doctest::Approx(0.0));
  require_gradient([](const auto& x) { return ad::softmax_rows(x[0]); }, {random_tensor(2, 3, 3)});
}

TEST_CASE("masked softmax zeroes masked entries") {
  Tensor p = ad::masked_softmax_rows(Tensor::matrix({{0.3, -1.0, 2.0}}), {true, false, true});
  CHECK(p.values()[1] == 0.0);
  CHECK(p.values()[0] + p.values()[2] == doctest::Approx(1.0).epsilon(1e-12));
  Tensor one = ad::masked_softmax_rows(Tensor::matrix({{5.0, 1.0, 2.0}}), {false, true, false});
  CHECK(one.values()[1] == 1.0);
  CHECK_THROWS_AS(ad::masked_softmax_rows(Tensor::matrix({{1.0, 2.0}}), {false, false}), ContractError);
  require_gradient([](const auto& x) { return ad::masked_softmax_rows(x[0], {true, false, true, true}); },
                   {random_tensor(2, 4, 4)});
}

TEST_CASE("layer norm") {
  Tensor gain = Tensor::full({3}, 1.0), bias = Tensor::zeros({3});
  require_close(ad::layer_norm(Tensor::matrix({{5, 5, 5}}), gain, bias), {0, 0, 0});
  Tensor y = ad::layer_norm(Tensor::matrix({{1, -1}}), Tensor::full({2}, 1.0), Tensor::zeros({2}));
  CHECK(y.values()[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(y.values()[1] == doctest::Approx(-1.0).epsilon(1e-5));
  require_gradient([](const auto& x) { return ad::layer_norm(x[0], x[1], x[2]); },
                   {random_tensor(2, 4, 5), random_tensor(1, 4, 6, 0.5, 1.5), random_tensor(1, 4, 7)}, 1e-4);
}

TEST_CASE("elementwise primitives") {
  require_close(ad::relu(Tensor::matrix({{-1, 2}})), {0, 2});
  Tensor c = ad::concat_last_dim(random_tensor(3, 2, 8), random_tensor(3, 3, 9));
  CHECK(c.rows() == 3);
  CHECK(c.cols() == 5);

  const Tensor a = random_tensor(2, 3, 10), b = random_tensor(2, 3, 11), pos = random_tensor(2, 3, 12, 0.5, 2.0);
  require_gradient([](const auto& x) { return ad::add(x[0], x[1]); }, {a, b});
  require_gradient([](const auto& x) { return ad::sub(x[0], x[1]); }, {a, b});
  require_gradient([](const auto& x) { return ad::mul(x[0], x[1]); }, {a, b});
  require_gradient([](const auto& x) { return ad::add_row(x[0], x[1]); }, {a, random_tensor(1, 3, 13)});
  require_gradient([](const auto& x) { return ad::scale(x[0], -2.5); }, {a});
  require_gradient([](const auto& x) { return ad::add_scalar(x[0], 4.0); }, {a});
  require_gradient([](const auto& x) { return ad::relu(x[0]); }, {a});
  require_gradient([](const auto& x) { return ad::log(x[0]); }, {pos});
  require_gradient([](const auto& x) { return ad::square(x[0]); }, {a});
  require_gradient([](const auto& x) { return ad::transpose(x[0]); }, {a});
  require_gradient([](const auto& x) { return ad::matmul_bt(x[0], x[1]); }, {a, b});
  require_gradient([](const auto& x) { return ad::mean_rows(x[0]); }, {a});
  require_gradient([](const auto& x) { return ad::sum(x[0]); }, {a});
  require_gradient([](const auto& x) { return ad::add_n(x); }, {a, b, pos});
  require_gradient([](const auto& x) { return ad::concat_last_dim(x[0], x[1]); }, {a, random_tensor(2, 2, 14)});
  require_gradient([](const auto& x) { return ad::stack_rows(x); }, {random_tensor(1, 3, 15), random_tensor(2, 3, 16)});
  require_gradient([](const auto& x) { return ad::slice_row(x[0], 1); }, {a});
  require_gradient([](const auto& x) { return ad::slice_cols(x[0], 1, 2); }, {a});
  require_gradient([](const auto& x) { return ad::expand_rows(x[0], 4); }, {random_tensor(1, 3, 17)});
  require_gradient([](const auto& x) { return ad::pick(x[0], 1, 2); }, {a});
  require_gradient([](const auto& x) { return ad::entropy(ad::softmax_rows(x[0])); }, {a});
  require_gradient([](const auto& x) { return ad::attention(x[0], x[1], x[2]); },
                   {random_tensor(2, 4, 18), random_tensor(5, 4, 19), random_tensor(5, 3, 20)});
  require_gradient([](const auto& x) { return ad::matmul(x[0], x[1], ad::Reduction::sorted); }, {a, random_tensor(3, 2, 21)});
}

TEST_CASE("backward semantics") {
  Tensor x = Tensor::from({2, 2}, {1, 2, 3, 4}, true);
  {
    ad::Tape tape;
    ad::TapeScope scope(tape);
    tape.backward(ad::sum(x));
  }
  for (double g : x.grad()) CHECK(g == 1.0);

  Tensor a = Tensor::from({1, 3}, {1, 2, 3}, true);
  Tensor y = Tensor::from({1, 3}, {4, 5, 6}, true);
  {
    ad::Tape tape;
    ad::TapeScope scope(tape);
    tape.backward(ad::sum(ad::mul(ad::stop_gradient(a), y)));
  }
  CHECK_FALSE(a.has_grad());
  CHECK(std::vector<double>(y.grad().begin(), y.grad().end()) == std::vector<double>{1, 2, 3});

  Tensor z = Tensor::from({1, 2}, {1, 2}, true);
  ad::Tape tape;
  ad::TapeScope scope(tape);
  CHECK_THROWS_AS(tape.backward(ad::scale(z, 2.0)), ContractError);
}

TEST_CASE("no recording without a tape") {
  Tensor x = Tensor::from({1, 2}, {1, 2}, true);
  Tensor y = ad::relu(x);
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("sorted reduction is order independent") {
  std::vector<double> a{1e16, 1.0, -1e16, 3.0, 1e-3};
  std::vector<double> b{3.0, -1e16, 1e-3, 1e16, 1.0};
  CHECK(ad::sum_terms(a, ad::Reduction::sorted) == ad::sum_terms(b, ad::Reduction::sorted));
}

TEST_CASE("adam first step and convergence") {
  ad::ParameterSet params;
  params.add("w", Tensor::from({1}, {0.0}, true));
  ad::AdamConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.clip_norm = 0.0;
  ad::AdamState state(cfg);
  params.at("w").data()->ensure_grad()[0] = 1.0;
  ad::adam_step(params, state);
  CHECK(params.at("w").values()[0] == doctest::Approx(-0.1).epsilon(1e-6));

  params.at("w").data()->ensure_grad()[0] = 0.0;
  ad::AdamState fresh(cfg);
  const double before = params.at("w").values()[0];
  ad::adam_step(params, fresh);
  CHECK(params.at("w").values()[0] == before);

  ad::ParameterSet quad;
  quad.add("w", Tensor::from({1}, {0.0}, true));
  ad::AdamState qs(cfg);
  for (int i = 0; i < 200; ++i) {
    ad::Tape tape;
    ad::TapeScope scope(tape);
    tape.backward(ad::square(ad::add_scalar(quad.at("w"), -3.0)));
    ad::adam_step(quad, qs);
  }
  CHECK(std::abs(quad.at("w").values()[0] - 3.0) < 0.05);
}

TEST_CASE("checkpoint round trip is bit exact") {
  ad::ParameterSet params;
  Rng rng(3);
  params.add_uniform("a.weight", {3, 4}, 3, rng);
  params.add_uniform("b", {5}, 5, rng);
  std::stringstream buffer;
  ad::write_checkpoint(buffer, params);
  auto loaded = ad::read_checkpoint(buffer);
  CHECK(loaded.bit_equal(params));
  CHECK(loaded.fingerprint() == params.fingerprint());
  std::stringstream bad("XXXX");
  CHECK_THROWS(ad::read_checkpoint(bad));
}
