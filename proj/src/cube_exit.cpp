#include "torvac/cube_exit.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace torvac {

CubeExitTable::CubeExitTable(int dim, int radius) : dim_(dim), radius_(radius) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("cube exit table: dimension out of range");
  if (radius < 1) throw std::invalid_argument("cube exit table: radius must be >= 1");
  const int m = 2 * radius - 1;
  const int n = dim - 1;
  const auto mz = static_cast<std::size_t>(m);
  std::size_t size = 1;
  for (int j = 0; j < n; ++j) size *= mz;

  // sine[k-1][y-1] = s_k(y); only odd k survive at the center y = radius.
  const double norm = std::sqrt(2.0 / (m + 1));
  std::vector<double> sine(mz * mz), half_sin2(mz);
  for (int k = 1; k <= m; ++k) {
    const double h = std::sin(std::numbers::pi * k / (2.0 * (m + 1)));
    half_sin2[static_cast<std::size_t>(k - 1)] = h * h;
    for (int y = 1; y <= m; ++y)
      sine[static_cast<std::size_t>(k - 1) * mz + static_cast<std::size_t>(y - 1)] =
          norm * std::sin(std::numbers::pi * k * y / (m + 1));
  }

  // Mode weights W(k') = prod_j s_{k_j}(rho) / cosh(rho w(k')).
  std::vector<double> t(size, 0.0), u(size, 0.0);
  std::vector<int> k(static_cast<std::size_t>(n), 1);
  for (std::size_t idx = 0; idx < size; ++idx) {
    double prod = 1.0, e = 0.0;
    for (int j = 0; j < n; ++j) {
      const auto kj = static_cast<std::size_t>(k[static_cast<std::size_t>(j)] - 1);
      prod *= sine[kj * mz + static_cast<std::size_t>(radius - 1)];
      e += 2.0 * half_sin2[kj];
    }
    if (prod != 0.0) {
      // cosh w = 1 + e, written to keep precision for small e.
      const double w = std::log1p(e + std::sqrt(e * (2.0 + e)));
      t[idx] = prod / std::cosh(radius * w);
    }
    for (int j = n - 1; j >= 0; --j) {
      if (++k[static_cast<std::size_t>(j)] <= m) break;
      k[static_cast<std::size_t>(j)] = 1;
    }
  }

  // Sine contraction along each transverse axis: modes -> positions.
  std::size_t inner = size;
  for (int axis = 0; axis < n; ++axis) {
    inner /= mz;
    const std::size_t outer = size / (inner * mz);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t y = 0; y < mz; ++y)
        for (std::size_t i = 0; i < inner; ++i) {
          double s = 0.0;
          for (std::size_t kk = 0; kk < mz; ++kk) s += sine[kk * mz + y] * t[(o * mz + kk) * inner + i];
          u[(o * mz + y) * inner + i] = s;
        }
    t.swap(u);
  }

  face_probs_.resize(size);
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    face_probs_[i] = std::max(0.0, 0.5 * t[i]);
    total += face_probs_[i];
  }
  total_mass_ = total * 2.0 * dim;
  if (std::abs(total_mass_ - 1.0) > 1e-9)
    throw std::runtime_error("cube exit law does not normalize (mass = " + std::to_string(total_mass_) + ")");
  for (double& p : face_probs_) p /= total;
  alias_ = AliasTable(face_probs_);
}

Coords CubeExitTable::offset(int face, std::size_t index) const {
  const int axis = face / 2;
  const int m = 2 * radius_ - 1;
  Coords c{};
  c[static_cast<std::size_t>(axis)] = (face & 1) ? radius_ : -radius_;
  for (int j = dim_ - 1; j >= 0; --j) {
    if (j == axis) continue;
    c[static_cast<std::size_t>(j)] = static_cast<int>(index % static_cast<std::size_t>(m)) - (radius_ - 1);
    index /= static_cast<std::size_t>(m);
  }
  return c;
}

JumpKit::JumpKit(int dim, std::size_t max_face_entries) : dim_(dim) {
  static constexpr int kRadii[] = {2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256};
  for (int rho : kRadii) {
    const double entries = std::pow(2.0 * rho - 1.0, dim - 1);
    if (entries > static_cast<double>(max_face_entries)) break;
    tables_.push_back(std::make_unique<CubeExitTable>(dim, rho));
  }
  by_allowed_.assign(static_cast<std::size_t>(max_radius() + 1), nullptr);
  std::size_t t = 0;
  for (int a = 2; a <= max_radius(); ++a) {
    while (t + 1 < tables_.size() && tables_[t + 1]->radius() <= a) ++t;
    by_allowed_[static_cast<std::size_t>(a)] = tables_[t].get();
  }
}

const JumpKit& JumpKit::for_dimension(int dim) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<JumpKit>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[dim];
  if (!slot) slot = std::make_unique<JumpKit>(dim);
  return *slot;
}

}  // namespace torvac
