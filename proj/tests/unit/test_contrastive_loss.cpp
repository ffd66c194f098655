#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fireclr/contrastive_loss.hpp"
#include "fireclr/error.hpp"
#include "fireclr/rng.hpp"

using namespace fireclr;

namespace {

// Direct evaluation of the per-anchor loss from its definition.
std::vector<double> reference_losses(const std::vector<double>& z, int rows, int dim, double tau) {
  const auto sim = [&](int a, int b) {
    double dot = 0, na = 0, nb = 0;
    for (int j = 0; j < dim; ++j) {
      dot += z[a * dim + j] * z[b * dim + j];
      na += z[a * dim + j] * z[a * dim + j];
      nb += z[b * dim + j] * z[b * dim + j];
    }
    return dot / std::sqrt(na * nb);
  };
  std::vector<double> out(rows);
  for (int i = 0; i < rows; ++i) {
    const int p = (i % 2 == 0) ? i + 1 : i - 1;
    double denom = 0;
    for (int k = 0; k < rows; ++k)
      if (k != i) denom += std::exp(sim(i, k) / tau);
    out[i] = -std::log(std::exp(sim(i, p) / tau) / denom);
  }
  return out;
}

std::vector<double> random_z(int rows, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> z(static_cast<std::size_t>(rows) * dim);
  for (double& v : z) v = rng.normal();
  return z;
}

}  // namespace

TEST_CASE("single pair gives zero loss") {
  const std::vector<double> z = {0.3, -1.0, 2.0, 0.7, 0.1, 0.5};
  const auto r = nt_xent_loss<double>(z, 2, 3, 0.5);
  CHECK(r.loss == 0.0);
}

TEST_CASE("all-identical rows give ln(2N - 1)") {
  for (int n : {2, 3, 8}) {
    std::vector<double> z;
    for (int i = 0; i < 2 * n; ++i) z.insert(z.end(), {0.2, 0.4, -0.1, 0.9});
    const auto r = nt_xent_loss<double>(z, 2 * n, 4, 0.5);
    CHECK(std::abs(r.loss - std::log(2.0 * n - 1.0)) < 1e-6);
  }
  std::vector<double> z;
  for (int i = 0; i < 4; ++i) z.insert(z.end(), {1.0, 1.0});
  CHECK(std::abs(nt_xent_loss<double>(z, 4, 2, 0.5).loss - 1.0986122887) < 1e-6);
}

TEST_CASE("orthogonal two-pair case") {
  const std::vector<double> z = {1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1, 0};
  const auto r = nt_xent_loss<double>(z, 4, 3, 1.0);
  const double e = std::exp(1.0);
  CHECK(std::abs(r.loss - std::log((e + 2.0) / e)) < 1e-6);
  CHECK(std::abs(r.loss - 0.5514) < 1e-4);
  for (double l : r.per_anchor) CHECK(std::abs(l - std::log((e + 2.0) / e)) < 1e-12);
}

TEST_CASE("loss matches a direct evaluation on random batches") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int rows = 2 * (1 + static_cast<int>(seed % 5)), dim = 7;
    const auto z = random_z(rows, dim, seed);
    const double tau = 0.1 + 0.2 * static_cast<double>(seed);
    const auto r = nt_xent_loss<double>(z, rows, dim, tau);
    const auto ref = reference_losses(z, rows, dim, tau);
    for (int i = 0; i < rows; ++i) CHECK(r.per_anchor[i] == doctest::Approx(ref[i]).epsilon(1e-10));
    CHECK(r.loss == doctest::Approx(std::accumulate(ref.begin(), ref.end(), 0.0) / rows).epsilon(1e-10));
    CHECK(r.loss >= 0.0);
  }
}

TEST_CASE("gradient matches finite differences") {
  const int rows = 6, dim = 5;
  auto z = random_z(rows, dim, 42);
  const auto r = nt_xent_loss<double>(z, rows, dim, 0.5);
  const double h = 1e-6;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double orig = z[i];
    z[i] = orig + h;
    const double up = nt_xent_loss<double>(z, rows, dim, 0.5).loss;
    z[i] = orig - h;
    const double down = nt_xent_loss<double>(z, rows, dim, 0.5).loss;
    z[i] = orig;
    CHECK(r.grad[i] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("pair permutation permutes per-anchor losses") {
  const int n = 5, dim = 4;
  const auto z = random_z(2 * n, dim, 7);
  const std::vector<int> perm = {3, 0, 4, 1, 2};
  std::vector<double> zp;
  for (int p : perm)
    for (int v = 0; v < 2; ++v)
      zp.insert(zp.end(), z.begin() + (2 * p + v) * dim, z.begin() + (2 * p + v + 1) * dim);
  const auto a = nt_xent_loss<double>(z, 2 * n, dim, 0.5);
  const auto b = nt_xent_loss<double>(zp, 2 * n, dim, 0.5);
  for (int k = 0; k < n; ++k)
    for (int v = 0; v < 2; ++v) CHECK(b.per_anchor[2 * k + v] == doctest::Approx(a.per_anchor[2 * perm[k] + v]).epsilon(1e-12));
  CHECK(b.loss == doctest::Approx(a.loss).epsilon(1e-12));
}

TEST_CASE("positive row scaling leaves the loss unchanged") {
  const int rows = 8, dim = 6;
  const auto z = random_z(rows, dim, 9);
  const double base = nt_xent_loss<double>(z, rows, dim, 0.5).loss;
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    auto s = z;
    for (int i = 0; i < rows; ++i) {
      const double c = std::exp(rng.uniform(-4.0, 4.0));
      for (int j = 0; j < dim; ++j) s[i * dim + j] *= c;
    }
    CHECK(nt_xent_loss<double>(s, rows, dim, 0.5).loss == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("float input is evaluated in double") {
  const auto zd = random_z(4, 3, 5);
  const std::vector<float> zf(zd.begin(), zd.end());
  const std::vector<double> back(zf.begin(), zf.end());
  CHECK(nt_xent_loss<float>(zf, 4, 3, 0.5).loss == nt_xent_loss<double>(back, 4, 3, 0.5).loss);
}

TEST_CASE("loss preconditions") {
  std::vector<double> z = {1, 0, 0, 0};
  CHECK_THROWS_AS(nt_xent_loss<double>(z, 2, 2, 0.5), DataError);
  z = {1, 0, 0, 1, 1, 1};
  CHECK_THROWS_AS(nt_xent_loss<double>(z, 3, 2, 0.5), ConfigError);
  z = {1, 0, 0, 1};
  CHECK_THROWS_AS(nt_xent_loss<double>(z, 2, 2, 0.0), ConfigError);
}
